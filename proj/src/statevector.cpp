#include "qlbm/statevector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qlbm::qc {

namespace {

constexpr std::uint32_t kMaxQubits = 24;  // sanity bound, real use is <= 13

void check_qubit(const StateVector& psi, std::uint32_t q, const char* what) {
    if (q >= psi.n_qubits())
        throw std::out_of_range(std::string(what) + ": qubit " + std::to_string(q) +
                                " out of range for " + std::to_string(psi.n_qubits()) +
                                " qubits");
}

// Builds mask/value words from a control pattern, validating ranges and
// rejecting contradictory or duplicate entries.
void control_mask(const StateVector& psi, const std::vector<BitConstraint>& pattern,
                  std::size_t& mask, std::size_t& value) {
    mask = 0;
    value = 0;
    for (const auto& [q, bit] : pattern) {
        check_qubit(psi, q, "control");
        if (bit != 0 && bit != 1)
            throw std::invalid_argument("control bit must be 0 or 1");
        const std::size_t m = std::size_t{1} << psi.bit_of(q);
        if (mask & m)
            throw std::invalid_argument("duplicate control qubit " + std::to_string(q));
        mask |= m;
        if (bit) value |= m;
    }
}

void apply_single_qubit(StateVector& psi, std::uint32_t target, const cplx u00,
                        const cplx u01, const cplx u10, const cplx u11,
                        std::size_t cmask, std::size_t cval) {
    const std::size_t tbit = std::size_t{1} << psi.bit_of(target);
    const std::size_t n = psi.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i & tbit) continue;                 // enumerate pairs by their bit=0 member
        if ((i & cmask) != cval) continue;
        const std::size_t j = i | tbit;
        const cplx a0 = psi.amp(i);
        const cplx a1 = psi.amp(j);
        psi.amp(i) = u00 * a0 + u01 * a1;
        psi.amp(j) = u10 * a0 + u11 * a1;
    }
}

}  // namespace

StateVector::StateVector(std::uint32_t n_qubits) : n_(n_qubits) {
    if (n_qubits == 0 || n_qubits > kMaxQubits)
        throw std::invalid_argument("StateVector: qubit count out of range");
    amps_.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector::StateVector(std::uint32_t n_qubits, std::vector<cplx> amps)
    : n_(n_qubits), amps_(std::move(amps)) {
    if (n_qubits == 0 || n_qubits > kMaxQubits)
        throw std::invalid_argument("StateVector: qubit count out of range");
    if (amps_.size() != (std::size_t{1} << n_qubits))
        throw std::invalid_argument("StateVector: amplitude vector has wrong length");
}

double StateVector::norm() const {
    double s = 0.0;
    for (const cplx& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

Gate u3(std::uint32_t q, double theta, double phi, double delta) {
    Gate g;
    g.kind = Gate::Kind::U3;
    g.q[0] = q;
    g.angles = {theta, phi, delta};
    return g;
}

Gate ry(std::uint32_t q, double phi) {
    Gate g;
    g.kind = Gate::Kind::RY;
    g.q[0] = q;
    g.angles[0] = phi;
    return g;
}

Gate h(std::uint32_t q) {
    Gate g;
    g.kind = Gate::Kind::H;
    g.q[0] = q;
    return g;
}

Gate cnot(std::uint32_t control, std::uint32_t target) {
    if (control == target)
        throw std::invalid_argument("cnot: control and target must differ");
    Gate g;
    g.kind = Gate::Kind::CNOT;
    g.q = {control, target};
    return g;
}

Gate index_permutation(std::vector<std::uint32_t> reg, std::vector<std::uint16_t> perm) {
    if (reg.empty() || reg.size() > 16)
        throw std::invalid_argument("index_permutation: register size out of range");
    if (perm.size() != (std::size_t{1} << reg.size()))
        throw std::invalid_argument("index_permutation: table length must be 2^register");
    // must really be a permutation
    std::vector<bool> seen(perm.size(), false);
    for (std::uint16_t p : perm) {
        if (p >= perm.size() || seen[p])
            throw std::invalid_argument("index_permutation: table is not a permutation");
        seen[p] = true;
    }
    Gate g;
    g.kind = Gate::Kind::Perm;
    g.reg = std::move(reg);
    g.perm = std::move(perm);
    return g;
}

Gate controlled(std::vector<BitConstraint> pattern, Gate inner) {
    for (auto& c : pattern) inner.controls.push_back(c);
    return inner;
}

Gate adjoint(const Gate& g) {
    Gate out = g;
    switch (g.kind) {
        case Gate::Kind::U3:
            // U3(t,p,d)^dagger = U3(-t,-d,-p)
            out.angles = {-g.angles[0], -g.angles[2], -g.angles[1]};
            break;
        case Gate::Kind::RY:
            out.angles[0] = -g.angles[0];
            break;
        case Gate::Kind::H:
        case Gate::Kind::CNOT:
            break;  // self-inverse
        case Gate::Kind::Perm: {
            std::vector<std::uint16_t> inv(g.perm.size());
            for (std::size_t x = 0; x < g.perm.size(); ++x)
                inv[g.perm[x]] = static_cast<std::uint16_t>(x);
            out.perm = std::move(inv);
            break;
        }
    }
    return out;
}

void apply(StateVector& psi, const Gate& g) {
    std::size_t cmask = 0, cval = 0;
    control_mask(psi, g.controls, cmask, cval);

    switch (g.kind) {
        case Gate::Kind::U3: {
            check_qubit(psi, g.q[0], "u3");
            if (cmask & (std::size_t{1} << psi.bit_of(g.q[0])))
                throw std::invalid_argument("u3: target overlaps a control qubit");
            const double t2 = 0.5 * g.angles[0];
            const double c = std::cos(t2), s = std::sin(t2);
            const cplx eip = std::polar(1.0, g.angles[1]);
            const cplx eid = std::polar(1.0, g.angles[2]);
            apply_single_qubit(psi, g.q[0], c, -eid * s, eip * s, eip * eid * c,
                               cmask, cval);
            break;
        }
        case Gate::Kind::RY: {
            check_qubit(psi, g.q[0], "ry");
            if (cmask & (std::size_t{1} << psi.bit_of(g.q[0])))
                throw std::invalid_argument("ry: target overlaps a control qubit");
            const double c = std::cos(0.5 * g.angles[0]), s = std::sin(0.5 * g.angles[0]);
            apply_single_qubit(psi, g.q[0], c, -s, s, c, cmask, cval);
            break;
        }
        case Gate::Kind::H: {
            check_qubit(psi, g.q[0], "h");
            if (cmask & (std::size_t{1} << psi.bit_of(g.q[0])))
                throw std::invalid_argument("h: target overlaps a control qubit");
            const double r = 1.0 / std::sqrt(2.0);
            apply_single_qubit(psi, g.q[0], r, r, r, -r, cmask, cval);
            break;
        }
        case Gate::Kind::CNOT: {
            check_qubit(psi, g.q[0], "cnot");
            check_qubit(psi, g.q[1], "cnot");
            const std::size_t cb = std::size_t{1} << psi.bit_of(g.q[0]);
            const std::size_t tb = std::size_t{1} << psi.bit_of(g.q[1]);
            if ((cmask & cb) || (cmask & tb))
                throw std::invalid_argument("cnot: qubits overlap the control pattern");
            const std::size_t n = psi.size();
            for (std::size_t i = 0; i < n; ++i) {
                if (!(i & cb) || (i & tb)) continue;
                if ((i & cmask) != cval) continue;
                std::swap(psi.amp(i), psi.amp(i | tb));
            }
            break;
        }
        case Gate::Kind::Perm: {
            std::size_t rmask = 0;
            for (std::uint32_t q : g.reg) {
                check_qubit(psi, q, "perm");
                const std::size_t b = std::size_t{1} << psi.bit_of(q);
                if ((rmask & b) || (cmask & b))
                    throw std::invalid_argument(
                        "perm: register qubits must be distinct and control-free");
                rmask |= b;
            }
            const std::size_t n = psi.size();
            const std::size_t w = g.reg.size();
            std::vector<cplx> out(n);
            for (std::size_t i = 0; i < n; ++i) {
                if ((i & cmask) != cval) {
                    out[i] = psi.amp(i);
                    continue;
                }
                std::size_t sub = 0;
                for (std::size_t k = 0; k < w; ++k)
                    sub = (sub << 1) | ((i >> psi.bit_of(g.reg[k])) & 1u);
                std::size_t j = i & ~rmask;
                const std::size_t mapped = g.perm[sub];
                for (std::size_t k = 0; k < w; ++k)
                    if ((mapped >> (w - 1 - k)) & 1u)
                        j |= std::size_t{1} << psi.bit_of(g.reg[k]);
                out[j] = psi.amp(i);
            }
            for (std::size_t i = 0; i < n; ++i) psi.amp(i) = out[i];
            break;
        }
    }
}

void apply(StateVector& psi, const Circuit& c) {
    for (const Gate& g : c) apply(psi, g);
}

double marginal_probability(const StateVector& psi,
                            const std::vector<BitConstraint>& constraints) {
    std::size_t mask = 0, value = 0;
    control_mask(psi, constraints, mask, value);
    double p = 0.0;
    const std::size_t n = psi.size();
    for (std::size_t i = 0; i < n; ++i)
        if ((i & mask) == value) p += std::norm(psi.amp(i));
    return p;
}

}  // namespace qlbm::qc
