#pragma once

// Dense statevector simulator for the small circuits used here (at most a
// handful of qubits, so everything is stored and mutated in place, and all
// probabilities are exact expectation values; there is no shot sampling).
//
// Bit convention: qubit 0 is the MOST significant bit of the basis index.
// For an n-qubit state, qubit q corresponds to bit (n-1-q) of the index, so
// |q0 q1 ... q{n-1}> reads left to right like the binary expansion of the
// index. Registers passed as qubit lists follow the same rule: the first
// listed qubit is the most significant bit of the register's sub-index.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace qlbm::qc {

using cplx = std::complex<double>;

// (qubit, required bit) pair; lists of these express control patterns and
// marginalization constraints.
using BitConstraint = std::pair<std::uint32_t, int>;

class StateVector {
  public:
    // Initializes |0...0>.
    explicit StateVector(std::uint32_t n_qubits);

    // Takes ownership of a full amplitude vector (size must be 2^n).
    StateVector(std::uint32_t n_qubits, std::vector<cplx> amps);

    std::uint32_t n_qubits() const { return n_; }
    std::size_t size() const { return amps_.size(); }

    cplx& amp(std::size_t i) { return amps_[i]; }
    const cplx& amp(std::size_t i) const { return amps_[i]; }
    const std::vector<cplx>& amplitudes() const { return amps_; }

    double norm() const;  // L2 norm; 1 within roundoff for any circuit state

    // Position of the bit that stores qubit q (big-endian, see above).
    std::uint32_t bit_of(std::uint32_t q) const { return n_ - 1 - q; }

  private:
    std::uint32_t n_;
    std::vector<cplx> amps_;
};

struct Gate {
    enum class Kind { U3, RY, H, CNOT, Perm };

    Kind kind;
    // U3/RY/H: q[0] is the target. CNOT: q[0] control, q[1] target.
    std::array<std::uint32_t, 2> q{0, 0};
    // U3: theta, phi, delta. RY uses angles[0] only.
    std::array<double, 3> angles{0.0, 0.0, 0.0};
    // Perm only: the register the permutation acts on and the table itself,
    // out_sub_index = perm[in_sub_index].
    std::vector<std::uint32_t> reg;
    std::vector<std::uint16_t> perm;
    // Control pattern; the gate fires only on basis states matching every
    // (qubit, bit) pair. Empty means unconditional.
    std::vector<BitConstraint> controls;
};

// Factories. Angle conventions:
//   RY(phi)          = [[cos(phi/2), -sin(phi/2)], [sin(phi/2), cos(phi/2)]]
//   U3(theta,phi,dl) = [[cos(t2), -e^{i dl} sin(t2)],
//                       [e^{i phi} sin(t2), e^{i(phi+dl)} cos(t2)]]
// so U3(theta, 0, 0) == RY(theta).
Gate u3(std::uint32_t q, double theta, double phi, double delta);
Gate ry(std::uint32_t q, double phi);
Gate h(std::uint32_t q);
Gate cnot(std::uint32_t control, std::uint32_t target);
Gate index_permutation(std::vector<std::uint32_t> reg, std::vector<std::uint16_t> perm);

// Wraps a gate with (additional) controls. Control qubits must be disjoint
// from the gate's targets; validated at apply time together with ranges.
Gate controlled(std::vector<BitConstraint> pattern, Gate inner);

// Adjoint gate: negated/role-swapped angles for rotations, inverse table for
// permutations, unchanged for H/CNOT. Controls carry over.
Gate adjoint(const Gate& g);

void apply(StateVector& psi, const Gate& g);

using Circuit = std::vector<Gate>;
void apply(StateVector& psi, const Circuit& c);

// Probability that a measurement of the constrained qubits would yield the
// given bits; all unconstrained qubits are traced out. Exact (no sampling).
double marginal_probability(const StateVector& psi,
                            const std::vector<BitConstraint>& constraints);

}  // namespace qlbm::qc
