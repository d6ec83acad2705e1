#include "qlbm/ansatz.hpp"

#include <algorithm>
#include <stdexcept>

namespace qlbm::ansatz {

namespace {

struct SlotAlloc {
    int next = 0;
    int take() { return next++; }
};

int rotation_width(ELKind k) { return k == ELKind::BEL ? 1 : 3; }
int cop_width(COPKind k) { return k == COPKind::CRY ? 1 : 3; }

void rotation_layer(std::vector<qc::ParamGate>& out, ELKind kind,
                    const std::vector<std::uint32_t>& qubits, SlotAlloc& slots) {
    for (std::uint32_t q : qubits) {
        if (kind == ELKind::BEL) {
            qc::ParamGate pg(qc::ry(q, 0.0));
            pg.bind[0] = {slots.take(), 1.0};
            out.push_back(pg);
        } else {
            qc::ParamGate pg(qc::u3(q, 0.0, 0.0, 0.0));
            for (int pos = 0; pos < 3; ++pos) pg.bind[pos] = {slots.take(), 1.0};
            out.push_back(pg);
        }
    }
}

// CNOT distance for a given 1-based layer: d = 1 + (layer-1) mod (n-1).
void cnot_web(std::vector<qc::ParamGate>& out, const std::vector<std::uint32_t>& qubits,
              int layer, Boundary boundary) {
    const int n = static_cast<int>(qubits.size());
    if (n < 2) return;
    const int d = 1 + (layer - 1) % (n - 1);
    if (boundary == Boundary::Circular) {
        for (int j = 0; j < n; ++j)
            out.emplace_back(qc::cnot(qubits[j], qubits[(j + d) % n]));
    } else {
        for (int j = 0; j + d < n; ++j)
            out.emplace_back(qc::cnot(qubits[j], qubits[j + d]));
    }
}

std::vector<qc::ParamGate> el_block(ELKind kind, const std::vector<std::uint32_t>& qubits,
                                    int layers, Boundary boundary, SlotAlloc& slots) {
    std::vector<qc::ParamGate> g;
    for (int l = 1; l <= layers; ++l) {
        rotation_layer(g, kind, qubits, slots);
        cnot_web(g, qubits, l, boundary);
    }
    return g;
}

// Adjoint of a parameterized gate, keeping slot sharing: rotations negate
// their scales (U3 additionally swaps the phi/delta roles), fixed gates go
// through the plain gate adjoint.
qc::ParamGate adjoint_param(const qc::ParamGate& pg) {
    qc::ParamGate out;
    out.gate = qc::adjoint(pg.gate);
    switch (pg.gate.kind) {
        case qc::Gate::Kind::U3:
            out.bind[0] = {pg.bind[0].slot, -pg.bind[0].scale};
            out.bind[1] = {pg.bind[2].slot, -pg.bind[2].scale};
            out.bind[2] = {pg.bind[1].slot, -pg.bind[1].scale};
            break;
        case qc::Gate::Kind::RY:
            out.bind[0] = {pg.bind[0].slot, -pg.bind[0].scale};
            break;
        default:
            break;
    }
    return out;
}

std::vector<qc::ParamGate> inverse_of(const std::vector<qc::ParamGate>& fwd) {
    std::vector<qc::ParamGate> inv;
    inv.reserve(fwd.size());
    for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) inv.push_back(adjoint_param(*it));
    return inv;
}

// One controlled rotation onto the value qubit per index basis state. Slots
// are fresh unless `reuse` is given (then they must have been recorded by an
// earlier block of the same shape).
std::vector<qc::ParamGate> cop_block(COPKind kind, const std::vector<std::uint32_t>& index_reg,
                                     std::uint32_t value_q, SlotAlloc& slots, double scale,
                                     std::vector<int>* record, const std::vector<int>* reuse) {
    const int w = static_cast<int>(index_reg.size());
    const std::size_t n_states = std::size_t{1} << w;
    const int width = cop_width(kind);
    std::vector<qc::ParamGate> g;
    g.reserve(n_states);
    std::size_t k = 0;
    for (std::size_t a = 0; a < n_states; ++a) {
        std::vector<qc::BitConstraint> pattern;
        pattern.reserve(w);
        for (int j = 0; j < w; ++j)
            pattern.emplace_back(index_reg[j], static_cast<int>((a >> (w - 1 - j)) & 1u));
        qc::ParamGate pg(qc::controlled(
            pattern, kind == COPKind::CRY ? qc::ry(value_q, 0.0) : qc::u3(value_q, 0, 0, 0)));
        for (int pos = 0; pos < width; ++pos, ++k) {
            const int slot = reuse ? (*reuse)[k] : slots.take();
            if (record) record->push_back(slot);
            pg.bind[pos] = {slot, scale};
        }
        g.push_back(pg);
    }
    return g;
}

std::vector<qc::ParamGate> remap_qubits(const std::vector<qc::ParamGate>& gates,
                                        const std::vector<std::uint32_t>& from,
                                        const std::vector<std::uint32_t>& to) {
    auto mapped = [&](std::uint32_t q) {
        for (std::size_t i = 0; i < from.size(); ++i)
            if (from[i] == q) return to[i];
        throw std::logic_error("remap_qubits: qubit not in source register");
    };
    std::vector<qc::ParamGate> out = gates;
    for (qc::ParamGate& pg : out) {
        switch (pg.gate.kind) {
            case qc::Gate::Kind::CNOT:
                pg.gate.q[1] = mapped(pg.gate.q[1]);
                [[fallthrough]];
            case qc::Gate::Kind::U3:
            case qc::Gate::Kind::RY:
            case qc::Gate::Kind::H:
                pg.gate.q[0] = mapped(pg.gate.q[0]);
                break;
            default:
                throw std::logic_error("remap_qubits: unsupported gate kind");
        }
    }
    return out;
}

void append(qc::ParamCircuit& c, std::vector<qc::ParamGate> gates) {
    for (qc::ParamGate& g : gates) c.gates.push_back(std::move(g));
}

// Exact CNOT count of a web over n qubits across `layers` layers. Circular
// webs place n gates per layer; linear ones drop the wrapping pairs, so the
// count depends on the layer's distance.
long web_count(int n, int layers, Boundary boundary) {
    if (n < 2) return 0;
    if (boundary == Boundary::Circular) return static_cast<long>(layers) * n;
    long total = 0;
    for (int l = 1; l <= layers; ++l) total += n - (1 + (l - 1) % (n - 1));
    return total;
}

}  // namespace

void AnsatzSpec::validate() const {
    if (layers < 1) throw std::invalid_argument("ansatz: layers must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("ansatz: repetitions must be >= 1");
    if ((family == Family::Strong || family == Family::StrongCOP ||
         family == Family::Scrambler)) {
        if (el != ELKind::SEL)
            throw std::invalid_argument("ansatz: this family is built from U3 rotations");
        if (el2)
            throw std::invalid_argument("ansatz: el2 has no meaning for this family");
    }
}

qc::ParamCircuit entangling_layer(const std::vector<std::uint32_t>& qubits, int layer_count,
                                  ELKind kind, Boundary boundary) {
    if (qubits.empty()) throw std::invalid_argument("entangling_layer: no qubits");
    if (layer_count < 1) throw std::invalid_argument("entangling_layer: layers must be >= 1");
    SlotAlloc slots;
    qc::ParamCircuit c;
    append(c, el_block(kind, qubits, layer_count, boundary, slots));
    c.n_params = slots.next;
    return c;
}

qc::ParamCircuit build(const AnsatzSpec& spec, const enc::RegisterLayout& layout) {
    spec.validate();
    layout.validate();
    if (spec.family == Family::SecondOrder && layout.index2.empty())
        throw std::invalid_argument("ansatz: second-order family needs duplicated registers");

    SlotAlloc slots;
    qc::ParamCircuit c;

    for (int rep = 0; rep < spec.repetitions; ++rep) {
        switch (spec.family) {
            case Family::Strong: {
                std::vector<std::uint32_t> joint = layout.index;
                joint.push_back(layout.value);
                append(c, el_block(ELKind::SEL, joint, spec.layers, spec.boundary, slots));
                break;
            }
            case Family::Scrambler:
                append(c, el_block(ELKind::SEL, layout.index, spec.layers, spec.boundary, slots));
                break;
            case Family::StrongCOP:
                append(c, el_block(ELKind::SEL, layout.index, spec.layers, spec.boundary, slots));
                append(c, cop_block(spec.cop, layout.index, layout.value, slots, 1.0,
                                    nullptr, nullptr));
                break;
            case Family::ELCOPInverseEL:
            case Family::ELCOPRepeated: {
                std::vector<std::uint32_t> covered = layout.index;
                if (spec.el2) covered.push_back(layout.value);
                auto fwd = el_block(spec.el, covered, spec.layers, spec.boundary, slots);
                append(c, fwd);
                append(c, cop_block(spec.cop, layout.index, layout.value, slots, 1.0,
                                    nullptr, nullptr));
                if (spec.family == Family::ELCOPInverseEL) append(c, inverse_of(fwd));
                break;
            }
            case Family::SecondOrder: {
                std::vector<std::uint32_t> cov1 = layout.index;
                std::vector<std::uint32_t> cov2 = layout.index2;
                if (spec.el2) {
                    cov1.push_back(layout.value);
                    cov2.push_back(*layout.value2);
                }
                // Both copies run the same transform with the same weights.
                auto fwd1 = el_block(spec.el, cov1, spec.layers, spec.boundary, slots);
                auto fwd2 = remap_qubits(fwd1, cov1, cov2);
                append(c, fwd1);
                append(c, fwd2);
                // Split COPs: each copy has its own angles, applied as two
                // half-angle rotations around the value-bridge layers.
                std::vector<int> s1, s2;
                append(c, cop_block(spec.cop, layout.index, layout.value, slots, 0.5, &s1,
                                    nullptr));
                append(c, cop_block(spec.cop, layout.index2, *layout.value2, slots, 0.5, &s2,
                                    nullptr));
                // Bridge EL across the two value qubits: as many layers as
                // qubits, linear boundary.
                append(c, el_block(spec.el, {layout.value, *layout.value2}, 2,
                                   Boundary::Linear, slots));
                append(c, cop_block(spec.cop, layout.index, layout.value, slots, 0.5,
                                    nullptr, &s1));
                append(c, cop_block(spec.cop, layout.index2, *layout.value2, slots, 0.5,
                                    nullptr, &s2));
                append(c, inverse_of(fwd1));
                append(c, inverse_of(fwd2));
                break;
            }
        }
    }
    c.n_params = slots.next;
    return c;
}

long parameter_count(const AnsatzSpec& spec, int qc) {
    spec.validate();
    const long L = spec.layers;
    const long w1 = rotation_width(spec.el);
    const long cw = cop_width(spec.cop);
    const long pow2 = 1L << qc;
    const long nrot = spec.el2 ? qc + 1 : qc;
    long per_rep = 0;
    switch (spec.family) {
        case Family::Strong:
            per_rep = 3 * L * (qc + 1);
            break;
        case Family::Scrambler:
            per_rep = 3 * L * qc;
            break;
        case Family::StrongCOP:
            per_rep = 3 * L * qc + cw * pow2;
            break;
        case Family::ELCOPInverseEL:
        case Family::ELCOPRepeated:
            per_rep = w1 * L * nrot + cw * pow2;
            break;
        case Family::SecondOrder:
            per_rep = w1 * L * nrot + 2 * cw * pow2 + 4 * w1;
            break;
    }
    return spec.repetitions * per_rep;
}

GateCounts gate_counts(const AnsatzSpec& spec, int qc) {
    spec.validate();
    const long L = spec.layers;
    const long pow2 = 1L << qc;
    const long nrot = spec.el2 ? qc + 1 : qc;
    const int nweb = spec.el2 ? qc + 1 : qc;
    GateCounts per{};
    switch (spec.family) {
        case Family::Strong:
            per = {L * (qc + 1), web_count(qc + 1, spec.layers, spec.boundary)};
            break;
        case Family::Scrambler:
            per = {L * qc, web_count(qc, spec.layers, spec.boundary)};
            break;
        case Family::StrongCOP:
            per = {L * qc, web_count(qc, spec.layers, spec.boundary) + pow2 * qc};
            break;
        case Family::ELCOPInverseEL:
            per = {2 * L * nrot,
                   2 * web_count(nweb, spec.layers, spec.boundary) + pow2 * qc};
            break;
        case Family::ELCOPRepeated:
            per = {L * nrot, web_count(nweb, spec.layers, spec.boundary) + pow2 * qc};
            break;
        case Family::SecondOrder:
            // Physical totals over both copies; the bridge EL exists once
            // (4 rotations, 2 CNOTs), each copy carries two half-angle COP
            // groups.
            per = {4 * L * nrot + 4,
                   4 * web_count(nweb, spec.layers, spec.boundary) + 4 * pow2 * qc + 2};
            break;
    }
    return {spec.repetitions * per.one_qubit, spec.repetitions * per.two_qubit};
}

long depth_bound(const AnsatzSpec& spec, int qc) {
    spec.validate();
    const long L = spec.layers;
    const long pow2 = 1L << qc;
    const int nweb = spec.el2 ? qc + 1 : qc;
    long per = 0;
    switch (spec.family) {
        case Family::Strong:
            per = L * (qc + 2);
            break;
        case Family::Scrambler:
            per = L * (qc + 1);
            break;
        case Family::StrongCOP:
            per = L * (qc + 1) + pow2 * qc;
            break;
        case Family::ELCOPInverseEL:
            per = 2 * L * (nweb + 1) + pow2 * qc;
            break;
        case Family::ELCOPRepeated:
            per = L * (nweb + 1) + pow2 * qc;
            break;
        case Family::SecondOrder:
            per = 2 * L * (nweb + 1) + 2 * pow2 * qc + 4;
            break;
    }
    return spec.repetitions * per;
}

GateCounts count_gates(const qc::ParamCircuit& c) {
    GateCounts n{};
    for (const qc::ParamGate& pg : c.gates) {
        const qc::Gate& g = pg.gate;
        if (!g.controls.empty()) {
            n.two_qubit += static_cast<long>(g.controls.size());
            continue;
        }
        switch (g.kind) {
            case qc::Gate::Kind::U3:
            case qc::Gate::Kind::RY:
            case qc::Gate::Kind::H:
                ++n.one_qubit;
                break;
            case qc::Gate::Kind::CNOT:
                ++n.two_qubit;
                break;
            case qc::Gate::Kind::Perm:
                break;  // relabeling, not gate-counted
        }
    }
    return n;
}

std::string canonical_name(const AnsatzSpec& spec) {
    auto el_tag = [&spec](bool two) {
        std::string t = spec.el == ELKind::BEL ? "bel" : "sel";
        if (two) t += "2";
        return t;
    };
    const std::string cop_tag = spec.cop == COPKind::CRY ? "cry" : "cu3";
    switch (spec.family) {
        case Family::Strong:
            return "strong";
        case Family::StrongCOP:
            return "strong-" + cop_tag;
        case Family::Scrambler:
            return "scrambler";
        case Family::ELCOPInverseEL:
            return el_tag(spec.el2) + "-" + cop_tag + "-inv-" + el_tag(spec.el2);
        case Family::ELCOPRepeated:
            return el_tag(spec.el2) + "-" + cop_tag + "-rep";
        case Family::SecondOrder:
            return "2nd-" + el_tag(spec.el2) + "-" + cop_tag + "-inv-" + el_tag(spec.el2);
    }
    throw std::logic_error("canonical_name: unreachable");
}

AnsatzSpec parse_name(const std::string& name) {
    AnsatzSpec spec;
    std::string rest = name;

    if (rest == "strong") {
        spec.family = Family::Strong;
        return spec;
    }
    if (rest == "scrambler") {
        spec.family = Family::Scrambler;
        return spec;
    }
    if (rest == "strong-cry" || rest == "strong-cu3") {
        spec.family = Family::StrongCOP;
        spec.cop = rest == "strong-cry" ? COPKind::CRY : COPKind::CU3;
        return spec;
    }

    bool second = false;
    if (rest.rfind("2nd-", 0) == 0) {
        second = true;
        rest = rest.substr(4);
    }

    auto take_el = [&rest](ELKind& kind, bool& two) {
        if (rest.rfind("bel", 0) == 0)
            kind = ELKind::BEL;
        else if (rest.rfind("sel", 0) == 0)
            kind = ELKind::SEL;
        else
            throw std::invalid_argument("unknown ansatz name");
        rest = rest.substr(3);
        two = false;
        if (!rest.empty() && rest[0] == '2') {
            two = true;
            rest = rest.substr(1);
        }
        if (!rest.empty() && rest[0] == '-') rest = rest.substr(1);
    };

    bool el2 = false;
    take_el(spec.el, el2);
    spec.el2 = el2;
    if (rest.rfind("cry", 0) == 0)
        spec.cop = COPKind::CRY;
    else if (rest.rfind("cu3", 0) == 0)
        spec.cop = COPKind::CU3;
    else
        throw std::invalid_argument("unknown ansatz name");
    rest = rest.substr(3);

    if (rest == "-rep") {
        if (second) throw std::invalid_argument("unknown ansatz name");
        spec.family = Family::ELCOPRepeated;
        return spec;
    }
    ELKind el_back;
    bool el2_back = false;
    if (rest.rfind("-inv-", 0) != 0) throw std::invalid_argument("unknown ansatz name");
    rest = rest.substr(5);
    take_el(el_back, el2_back);
    if (!rest.empty() || el_back != spec.el || el2_back != spec.el2)
        throw std::invalid_argument("unknown ansatz name");
    spec.family = second ? Family::SecondOrder : Family::ELCOPInverseEL;
    return spec;
}

}  // namespace qlbm::ansatz
