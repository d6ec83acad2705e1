#pragma once

// Parameterized circuits: gates whose angles are bound to slots of a flat
// parameter vector, possibly scaled. One slot may feed several gates; that is
// how the inverse sections of the variational forms share weights with their
// forward sections (scale -1, roles swapped) and how split half-angle
// rotations work (scale 1/2).
//
// Also home to the two exact probability-gradient engines:
//  - shift-rule Jacobian: the two-term rule for plain rotation angles and the
//    four-term rule for controlled rotation angles (their generator has the
//    extra zero eigenvalue, so the two-term rule would be wrong);
//  - adjoint Jacobian: one forward pass, then a backward sweep applying gate
//    adjoints and analytic gate derivatives.
// Both return d p_k / d param_j for a list of projective outcomes.

#include <array>
#include <cstddef>
#include <vector>

#include "qlbm/statevector.hpp"

namespace qlbm::qc {

struct AngleRef {
    int slot = -1;       // < 0: the gate's stored angle is a fixed constant
    double scale = 1.0;  // bound angle = scale * params[slot]
};

struct ParamGate {
    Gate gate;
    std::array<AngleRef, 3> bind{};

    ParamGate() = default;
    explicit ParamGate(Gate g) : gate(std::move(g)) {}  // all-constant gate
};

struct ParamCircuit {
    std::vector<ParamGate> gates;
    int n_params = 0;
};

// Materializes the gate with its angles filled in from params.
Gate bound(const ParamGate& pg, const std::vector<double>& params);

void apply_bound(StateVector& psi, const ParamCircuit& c, const std::vector<double>& params);

// One parameterized angle position inside the circuit.
struct AngleOccurrence {
    std::size_t gate;  // index into circuit.gates
    int pos;           // 0..2, which angle of that gate
    int slot;
    double scale;
    bool controlled;  // true if the owning gate has a control pattern
};

std::vector<AngleOccurrence> angle_occurrences(const ParamCircuit& c);

// Parallel-schedule depth of the circuit under the gate accounting used by
// the closed-form bounds: plain one-qubit gates and CNOTs cost 1 slot, a gate
// with k controls costs k slots on every qubit it touches.
long measured_depth(const ParamCircuit& c);

// Runs the circuit on a copy of `initial` and returns the marginal
// probability of each projector (a projector is a bit-constraint list).
std::vector<double> run_probabilities(const StateVector& initial, const ParamCircuit& c,
                                      const std::vector<double>& params,
                                      const std::vector<std::vector<BitConstraint>>& projectors);

// Jacobian J[j][k] = d p_k / d param_j, exact for this gate set.
std::vector<std::vector<double>> probability_jacobian_shift(
    const StateVector& initial, const ParamCircuit& c, const std::vector<double>& params,
    const std::vector<std::vector<BitConstraint>>& projectors);

std::vector<std::vector<double>> probability_jacobian_adjoint(
    const StateVector& initial, const ParamCircuit& c, const std::vector<double>& params,
    const std::vector<std::vector<BitConstraint>>& projectors);

}  // namespace qlbm::qc
