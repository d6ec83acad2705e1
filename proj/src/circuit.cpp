#include "qlbm/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlbm::qc {

namespace {

// Four-term shift-rule coefficients for controlled rotations, whose effective
// generator has eigenvalues {0, +1/2, -1/2}. Derived by requiring exactness
// on the frequency pair {1/2, 1}; the unit test cross-checks against central
// differences.
const double kShiftC1 = (std::sqrt(2.0) + 1.0) / (4.0 * std::sqrt(2.0));
const double kShiftC2 = (std::sqrt(2.0) - 1.0) / (4.0 * std::sqrt(2.0));

std::size_t projector_mask(const StateVector& psi,
                           const std::vector<BitConstraint>& constraints,
                           std::size_t& value) {
    std::size_t mask = 0;
    value = 0;
    for (const auto& [q, bit] : constraints) {
        const std::size_t b = std::size_t{1} << psi.bit_of(q);
        mask |= b;
        if (bit) value |= b;
    }
    return mask;
}

void project(StateVector& psi, std::size_t mask, std::size_t value) {
    const std::size_t n = psi.size();
    for (std::size_t i = 0; i < n; ++i)
        if ((i & mask) != value) psi.amp(i) = 0.0;
}

cplx inner(const StateVector& a, const StateVector& b) {
    cplx s = 0.0;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) s += std::conj(a.amp(i)) * b.amp(i);
    return s;
}

// Applies a 2x2 matrix to the target-qubit pairs inside the control-matching
// subspace and zeroes everything outside it. This is the action of a
// controlled gate's parameter derivative, which is supported only where the
// control pattern matches.
void apply_matrix_projected(StateVector& psi, std::uint32_t target, cplx u00, cplx u01,
                            cplx u10, cplx u11, const std::vector<BitConstraint>& controls) {
    std::size_t cmask = 0, cval = 0;
    for (const auto& [q, bit] : controls) {
        const std::size_t b = std::size_t{1} << psi.bit_of(q);
        cmask |= b;
        if (bit) cval |= b;
    }
    const std::size_t tbit = std::size_t{1} << psi.bit_of(target);
    const std::size_t n = psi.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i & tbit) continue;
        const std::size_t j = i | tbit;
        if ((i & cmask) != cval) {
            psi.amp(i) = 0.0;
            psi.amp(j) = 0.0;
            continue;
        }
        const cplx a0 = psi.amp(i);
        const cplx a1 = psi.amp(j);
        psi.amp(i) = u00 * a0 + u01 * a1;
        psi.amp(j) = u10 * a0 + u11 * a1;
    }
}

// d(gate)/d(angle[pos]) applied in place, for the bound gate g.
void apply_derivative(StateVector& psi, const Gate& g, int pos) {
    if (g.kind == Gate::Kind::RY) {
        const double c = std::cos(0.5 * g.angles[0]), s = std::sin(0.5 * g.angles[0]);
        apply_matrix_projected(psi, g.q[0], -0.5 * s, -0.5 * c, 0.5 * c, -0.5 * s,
                               g.controls);
        return;
    }
    if (g.kind != Gate::Kind::U3)
        throw std::logic_error("apply_derivative: gate has no angle parameters");
    const double c = std::cos(0.5 * g.angles[0]), s = std::sin(0.5 * g.angles[0]);
    const cplx eip = std::polar(1.0, g.angles[1]);
    const cplx eid = std::polar(1.0, g.angles[2]);
    const cplx i1{0.0, 1.0};
    switch (pos) {
        case 0:
            apply_matrix_projected(psi, g.q[0], -0.5 * s, -0.5 * eid * c, 0.5 * eip * c,
                                   -0.5 * eip * eid * s, g.controls);
            break;
        case 1:
            apply_matrix_projected(psi, g.q[0], 0.0, 0.0, i1 * eip * s, i1 * eip * eid * c,
                                   g.controls);
            break;
        case 2:
            apply_matrix_projected(psi, g.q[0], 0.0, -i1 * eid * s, 0.0, i1 * eip * eid * c,
                                   g.controls);
            break;
        default:
            throw std::logic_error("apply_derivative: bad angle position");
    }
}

}  // namespace

Gate bound(const ParamGate& pg, const std::vector<double>& params) {
    Gate g = pg.gate;
    for (int pos = 0; pos < 3; ++pos) {
        const AngleRef& r = pg.bind[pos];
        if (r.slot < 0) continue;
        if (static_cast<std::size_t>(r.slot) >= params.size())
            throw std::out_of_range("bound: parameter slot out of range");
        g.angles[pos] = r.scale * params[r.slot];
    }
    return g;
}

void apply_bound(StateVector& psi, const ParamCircuit& c, const std::vector<double>& params) {
    if (static_cast<int>(params.size()) != c.n_params)
        throw std::invalid_argument("apply_bound: wrong parameter count");
    for (const ParamGate& pg : c.gates) apply(psi, bound(pg, params));
}

std::vector<AngleOccurrence> angle_occurrences(const ParamCircuit& c) {
    std::vector<AngleOccurrence> occ;
    for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
        const ParamGate& pg = c.gates[gi];
        for (int pos = 0; pos < 3; ++pos) {
            if (pg.bind[pos].slot < 0) continue;
            occ.push_back({gi, pos, pg.bind[pos].slot, pg.bind[pos].scale,
                           !pg.gate.controls.empty()});
        }
    }
    return occ;
}

long measured_depth(const ParamCircuit& c) {
    std::vector<long> clock;  // grown on demand, indexed by qubit
    auto at = [&clock](std::uint32_t q) -> long& {
        if (q >= clock.size()) clock.resize(q + 1, 0);
        return clock[q];
    };
    long depth = 0;
    for (const ParamGate& pg : c.gates) {
        const Gate& g = pg.gate;
        std::vector<std::uint32_t> touched;
        switch (g.kind) {
            case Gate::Kind::U3:
            case Gate::Kind::RY:
            case Gate::Kind::H:
                touched.push_back(g.q[0]);
                break;
            case Gate::Kind::CNOT:
                touched.push_back(g.q[0]);
                touched.push_back(g.q[1]);
                break;
            case Gate::Kind::Perm:
                touched = g.reg;
                break;
        }
        for (const auto& [q, bit] : g.controls) touched.push_back(q);
        const long cost = std::max<long>(1, static_cast<long>(g.controls.size()));
        long start = 0;
        for (std::uint32_t q : touched) start = std::max(start, at(q));
        for (std::uint32_t q : touched) at(q) = start + cost;
        depth = std::max(depth, start + cost);
    }
    return depth;
}

std::vector<double> run_probabilities(const StateVector& initial, const ParamCircuit& c,
                                      const std::vector<double>& params,
                                      const std::vector<std::vector<BitConstraint>>& projectors) {
    StateVector psi = initial;
    apply_bound(psi, c, params);
    std::vector<double> p;
    p.reserve(projectors.size());
    for (const auto& proj : projectors) p.push_back(marginal_probability(psi, proj));
    return p;
}

namespace {

// Probabilities with one angle occurrence shifted additively.
std::vector<double> run_probs_shifted(const StateVector& initial, const ParamCircuit& c,
                                      const std::vector<double>& params, std::size_t gate_idx,
                                      int pos, double shift,
                                      const std::vector<std::vector<BitConstraint>>& projectors) {
    StateVector psi = initial;
    for (std::size_t gi = 0; gi < c.gates.size(); ++gi) {
        Gate g = bound(c.gates[gi], params);
        if (gi == gate_idx) g.angles[pos] += shift;
        apply(psi, g);
    }
    std::vector<double> p;
    p.reserve(projectors.size());
    for (const auto& proj : projectors) p.push_back(marginal_probability(psi, proj));
    return p;
}

}  // namespace

std::vector<std::vector<double>> probability_jacobian_shift(
    const StateVector& initial, const ParamCircuit& c, const std::vector<double>& params,
    const std::vector<std::vector<BitConstraint>>& projectors) {
    const std::size_t k = projectors.size();
    std::vector<std::vector<double>> jac(c.n_params, std::vector<double>(k, 0.0));
    const double half_pi = std::acos(0.0);
    for (const AngleOccurrence& o : angle_occurrences(c)) {
        if (!o.controlled) {
            const auto pp = run_probs_shifted(initial, c, params, o.gate, o.pos, half_pi, projectors);
            const auto pm = run_probs_shifted(initial, c, params, o.gate, o.pos, -half_pi, projectors);
            for (std::size_t j = 0; j < k; ++j)
                jac[o.slot][j] += o.scale * 0.5 * (pp[j] - pm[j]);
        } else {
            const auto p1 = run_probs_shifted(initial, c, params, o.gate, o.pos, half_pi, projectors);
            const auto m1 = run_probs_shifted(initial, c, params, o.gate, o.pos, -half_pi, projectors);
            const auto p3 = run_probs_shifted(initial, c, params, o.gate, o.pos, 3.0 * half_pi, projectors);
            const auto m3 = run_probs_shifted(initial, c, params, o.gate, o.pos, -3.0 * half_pi, projectors);
            for (std::size_t j = 0; j < k; ++j)
                jac[o.slot][j] +=
                    o.scale * (kShiftC1 * (p1[j] - m1[j]) - kShiftC2 * (p3[j] - m3[j]));
        }
    }
    return jac;
}

std::vector<std::vector<double>> probability_jacobian_adjoint(
    const StateVector& initial, const ParamCircuit& c, const std::vector<double>& params,
    const std::vector<std::vector<BitConstraint>>& projectors) {
    const std::size_t k = projectors.size();
    std::vector<std::vector<double>> jac(c.n_params, std::vector<double>(k, 0.0));

    std::vector<Gate> bg;
    bg.reserve(c.gates.size());
    for (const ParamGate& pg : c.gates) bg.push_back(bound(pg, params));

    StateVector ket = initial;
    for (const Gate& g : bg) apply(ket, g);

    // One bra per projector, all walked backward in lockstep with the ket.
    std::vector<StateVector> bras;
    bras.reserve(k);
    for (const auto& proj : projectors) {
        StateVector b = ket;
        std::size_t val = 0;
        const std::size_t mask = projector_mask(b, proj, val);
        project(b, mask, val);
        bras.push_back(std::move(b));
    }

    for (std::size_t gi = bg.size(); gi-- > 0;) {
        const Gate inv = adjoint(bg[gi]);
        apply(ket, inv);  // ket is now the state before gate gi
        const ParamGate& pg = c.gates[gi];
        for (int pos = 0; pos < 3; ++pos) {
            if (pg.bind[pos].slot < 0) continue;
            StateVector tmp = ket;
            apply_derivative(tmp, bg[gi], pos);
            for (std::size_t j = 0; j < k; ++j)
                jac[pg.bind[pos].slot][j] +=
                    pg.bind[pos].scale * 2.0 * std::real(inner(bras[j], tmp));
        }
        for (StateVector& b : bras) apply(b, inv);
    }
    return jac;
}

}  // namespace qlbm::qc
