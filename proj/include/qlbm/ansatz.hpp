#pragma once

// Builders for the variational circuit family, plus closed-form parameter,
// gate-count, and depth expressions that the constructions are tested
// against.
//
// Building blocks:
//  - entangling layers (EL): per layer, one rotation per covered qubit (RY
//    for the "basic" kind, U3 for the "strong" kind) followed by a CNOT web
//    whose distance grows with the layer index, d = 1 + (layer-1) mod (n-1).
//    The circular boundary closes the ring (n CNOTs per layer), the linear
//    one drops the wrapping pairs.
//  - controlled-operation blocks (COP): one controlled RY or U3 onto the
//    value qubit per index-register basis state.
//
// Families combine these: a joint EL over index+value ("strong"), EL-COP
// with the EL undone afterwards using the same weights, repeated EL-COP
// blocks without inversion, a two-copy second-order form with split
// half-angle COPs around a small EL bridging the two value qubits, and a
// plain index-register EL ("scrambler", no value coupling at all).
//
// Parameter slot order is fixed and documented here because checkpoints
// depend on it: per repetition, EL rotation slots in layer-major then
// qubit-major order (U3 slots theta, phi, delta consecutive), then COP slots
// in index-state order (copy 1 before copy 2 for second-order forms), then
// the middle-EL slots of the second-order form. Inverse sections introduce
// no new slots.

#include <string>

#include "qlbm/circuit.hpp"
#include "qlbm/encoding.hpp"

namespace qlbm::ansatz {

enum class ELKind { BEL, SEL };         // RY rotations vs full U3 rotations
enum class COPKind { CRY, CU3 };
enum class Boundary { Linear, Circular };

enum class Family {
    Strong,          // single SEL over index+value jointly
    StrongCOP,       // SEL over the index register, then one COP block
    ELCOPInverseEL,  // EL - COP - inverse EL (weights shared with the EL)
    ELCOPRepeated,   // EL - COP without inversion (the "xR" family)
    SecondOrder,     // duplicated registers, split COPs, value-bridge EL
    Scrambler,       // index-register EL only
};

struct AnsatzSpec {
    Family family = Family::ELCOPInverseEL;
    ELKind el = ELKind::SEL;
    COPKind cop = COPKind::CRY;
    bool el2 = false;  // EL coverage extends to the value qubit
    int layers = 1;
    int repetitions = 1;  // whole variant concatenated with fresh slots
    Boundary boundary = Boundary::Circular;

    void validate() const;
};

struct GateCounts {
    long one_qubit = 0;
    long two_qubit = 0;
};

// Standalone entangling-layer block over the given qubits, slots from 0.
qc::ParamCircuit entangling_layer(const std::vector<std::uint32_t>& qubits, int layer_count,
                                  ELKind kind, Boundary boundary);

// Builds the full parameterized circuit on the layout's registers. The
// layout's index width sets qc; second-order families need the duplicated
// registers present.
qc::ParamCircuit build(const AnsatzSpec& spec, const enc::RegisterLayout& layout);

// Closed forms, all scaling linearly in repetitions. Gate counts follow the
// decomposition accounting used throughout: a gate with k pattern controls
// counts as k two-qubit gates; index relabelings are not gate-counted.
long parameter_count(const AnsatzSpec& spec, int qc);
GateCounts gate_counts(const AnsatzSpec& spec, int qc);
long depth_bound(const AnsatzSpec& spec, int qc);

// Counts an already-built circuit under the same accounting.
GateCounts count_gates(const qc::ParamCircuit& c);

// Canonical names, e.g. "sel-cry-inv-sel", "bel2-cry-inv-bel2", "strong",
// "strong-cu3", "sel2-cu3-rep", "2nd-sel-cry-inv-sel", "scrambler".
std::string canonical_name(const AnsatzSpec& spec);
AnsatzSpec parse_name(const std::string& name);  // inverse of canonical_name

}  // namespace qlbm::ansatz
