#pragma once

// The dihedral symmetry group of the square lattice: four rotations and four
// reflections. Every element permutes the nine directions (the rest particle
// is fixed) consistently with its orthogonal matrix, e_{perm(i)} = R e_i.
// BGK collision commutes with these transforms, and the controlled symmetry
// block builds a circuit that respects the same property: the three ancillas
// are spread into a uniform superposition, each ancilla basis value a applies
// the permutation sigma_a to the index register, the inner circuit runs, and
// sigma_a is undone.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qlbm/circuit.hpp"
#include "qlbm/encoding.hpp"

namespace qlbm::sym {

struct D8Element {
    std::string name;             // "i", "r", "r2", "r3", "s", "rs", "r2s", "r3s"
    std::array<int, 9> perm;      // direction i maps to perm[i]
    std::array<int, 4> mat;       // row-major 2x2 orthogonal matrix
};

// The eight elements, in the ancilla-value order 0..7:
// identity, the three successive quarter-turn rotations, then the mirror and
// its rotated copies. Composition convention: rs means "apply s, then r".
const std::array<D8Element, 8>& d8_elements();

// g_i = f_{sigma^{-1}(i)}, so the transformed moments rotate with the matrix.
std::array<double, 9> transform_densities(const D8Element& e, const std::array<double, 9>& f);

// The element's action as a permutation of the 16 index-register basis
// states; the unused states 9..15 stay fixed.
std::vector<std::uint16_t> index_permutation_16(const D8Element& e);

// Wraps an inner parameterized circuit with the ancilla-controlled symmetry
// sandwich. The layout must carry the 3-qubit ancilla register; for
// second-order layouts both index registers are permuted. Parameter slots
// pass through unchanged.
qc::ParamCircuit controlled_symmetry_block(const enc::RegisterLayout& layout,
                                           const qc::ParamCircuit& inner);

}  // namespace qlbm::sym
