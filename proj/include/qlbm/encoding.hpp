#pragma once

// Modified amplitude encoding of a density vector f in [0,1]^9 into an index
// register (4 qubits, uniformly superposed over the 9 physical directions)
// and a value qubit rotated per direction:
//
//   |psi> = (1/sqrt(9)) sum_i |i> ( sqrt(1 - f_i^2) |0> + f_i |1> )
//
// Index basis states 9..15 carry zero amplitude. Decoding inverts this from
// the exact marginals, f_i = sqrt(9 * P(index = i and value = 1)), clamped to
// [0,1]. When extra registers exist (symmetry ancillas, the duplicated pair
// of a second-order form) the marginal traces over them, so the decoded value
// is the root-mean-square over those branches.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "qlbm/statevector.hpp"

namespace qlbm::enc {

inline constexpr int kIndexQubits = 4;  // ceil(log2 9)

struct RegisterLayout {
    std::vector<std::uint32_t> index;  // index[0] is the register's MSB
    std::uint32_t value = 0;
    std::vector<std::uint32_t> ancilla;         // empty or 3 symmetry ancillas
    std::vector<std::uint32_t> index2;          // second copy, second-order forms only
    std::optional<std::uint32_t> value2;        // ditto
    std::uint32_t n_qubits = 0;

    // index [0..qc-1], value qc. Encoding itself needs qc == 4; other widths
    // exist so circuit constructions can be exercised at any register size.
    static RegisterLayout bare(int qc = kIndexQubits);
    // ancillas [0..2], then index, then value.
    static RegisterLayout with_symmetry(int qc = kIndexQubits);
    // two copies back to back, optionally preceded by ancillas.
    static RegisterLayout second_order(bool symmetry, int qc = kIndexQubits);

    void validate() const;  // disjointness, widths, range
};

// Prepares the encoded state. Ancilla qubits (if any) are left in |0>; the
// symmetry block is responsible for spreading them. For second-order layouts
// both copies receive the same encoding. Requires every f_i in [0,1].
qc::StateVector encode(const std::array<double, 9>& f, const RegisterLayout& layout);

// Reads the nine decoded densities from the (index, value) marginals.
std::array<double, 9> decode(const qc::StateVector& psi, const RegisterLayout& layout);

// The projector list used by decode, exposed for the gradient pipeline:
// projector i constrains the index register to i and the value qubit to 1.
std::vector<std::vector<qc::BitConstraint>> decode_projectors(const RegisterLayout& layout);

// Four-qubit basis encoding of a single lattice direction: each velocity
// component maps to a qubit pair, -1 -> |00>, 0 -> (|01>+|10>)/sqrt(2),
// +1 -> |11>, x pair first (most significant). Returns the 16 amplitudes.
std::array<qc::cplx, 16> encode_direction_2d(int direction);

}  // namespace qlbm::enc
