#include "qlbm/encoding.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qlbm/lattice.hpp"

namespace qlbm::enc {

namespace {

constexpr double kQ = 9.0;

// Per-direction two-amplitude factor of the product state.
struct ValuePair {
    double a0, a1;
};

ValuePair value_amplitudes(double f) {
    return {std::sqrt(1.0 - f * f), f};
}

}  // namespace

namespace {

void check_width(int qc) {
    if (qc < 1 || qc > 10)
        throw std::invalid_argument("layout: index register width out of range");
}

}  // namespace

RegisterLayout RegisterLayout::bare(int qc) {
    check_width(qc);
    RegisterLayout l;
    for (int i = 0; i < qc; ++i) l.index.push_back(i);
    l.value = qc;
    l.n_qubits = qc + 1;
    return l;
}

RegisterLayout RegisterLayout::with_symmetry(int qc) {
    check_width(qc);
    RegisterLayout l;
    l.ancilla = {0, 1, 2};
    for (int i = 0; i < qc; ++i) l.index.push_back(3 + i);
    l.value = 3 + qc;
    l.n_qubits = 4 + qc;
    return l;
}

RegisterLayout RegisterLayout::second_order(bool symmetry, int qc) {
    check_width(qc);
    RegisterLayout l;
    std::uint32_t q = 0;
    if (symmetry) l.ancilla = {q++, q++, q++};
    for (int i = 0; i < qc; ++i) l.index.push_back(q++);
    l.value = q++;
    for (int i = 0; i < qc; ++i) l.index2.push_back(q++);
    l.value2 = q++;
    l.n_qubits = q;
    return l;
}

void RegisterLayout::validate() const {
    if (index.empty() || index.size() > 10)
        throw std::invalid_argument("layout: index register width out of range");
    if (!index2.empty() && (index2.size() != index.size() || !value2))
        throw std::invalid_argument("layout: second copy must mirror the first");
    if (index2.empty() && value2)
        throw std::invalid_argument("layout: second value qubit without second index register");
    if (!ancilla.empty() && ancilla.size() != 3)
        throw std::invalid_argument("layout: symmetry ancilla register must have 3 qubits");
    std::vector<bool> used(n_qubits, false);
    auto take = [&](std::uint32_t q) {
        if (q >= n_qubits) throw std::invalid_argument("layout: qubit index out of range");
        if (used[q]) throw std::invalid_argument("layout: registers overlap");
        used[q] = true;
    };
    for (auto q : index) take(q);
    take(value);
    for (auto q : ancilla) take(q);
    for (auto q : index2) take(q);
    if (value2) take(*value2);
}

qc::StateVector encode(const std::array<double, 9>& f, const RegisterLayout& layout) {
    layout.validate();
    if (layout.index.size() != kIndexQubits)
        throw std::invalid_argument("encode: nine directions need a 4-qubit index register");
    for (int i = 0; i < 9; ++i)
        if (!(f[i] >= 0.0 && f[i] <= 1.0))
            throw std::invalid_argument("encode: f[" + std::to_string(i) +
                                        "] outside [0,1]");

    const double inv_sqrt_q = 1.0 / std::sqrt(kQ);
    std::array<ValuePair, 9> vp{};
    for (int i = 0; i < 9; ++i) vp[i] = value_amplitudes(f[i]);

    qc::StateVector psi(layout.n_qubits);
    const std::size_t n = psi.size();

    auto read_reg = [&psi](std::size_t basis, const std::vector<std::uint32_t>& reg) {
        std::size_t sub = 0;
        for (std::uint32_t q : reg) sub = (sub << 1) | ((basis >> psi.bit_of(q)) & 1u);
        return sub;
    };
    auto bit = [&psi](std::size_t basis, std::uint32_t q) {
        return (basis >> psi.bit_of(q)) & 1u;
    };

    // Amplitude of the whole basis state is the product over registers;
    // ancillas stay in |0>, unused index states get zero.
    std::size_t anc_mask = 0;
    for (std::uint32_t q : layout.ancilla) anc_mask |= std::size_t{1} << psi.bit_of(q);

    for (std::size_t b = 0; b < n; ++b) {
        if (b & anc_mask) {
            psi.amp(b) = 0.0;
            continue;
        }
        const std::size_t i1 = read_reg(b, layout.index);
        if (i1 >= 9) {
            psi.amp(b) = 0.0;
            continue;
        }
        double a = inv_sqrt_q * (bit(b, layout.value) ? vp[i1].a1 : vp[i1].a0);
        if (!layout.index2.empty()) {
            const std::size_t i2 = read_reg(b, layout.index2);
            if (i2 >= 9) {
                psi.amp(b) = 0.0;
                continue;
            }
            a *= inv_sqrt_q * (bit(b, *layout.value2) ? vp[i2].a1 : vp[i2].a0);
        }
        psi.amp(b) = a;
    }
    return psi;
}

std::vector<std::vector<qc::BitConstraint>> decode_projectors(const RegisterLayout& layout) {
    layout.validate();
    if (layout.index.size() != kIndexQubits)
        throw std::invalid_argument("decode: nine directions need a 4-qubit index register");
    std::vector<std::vector<qc::BitConstraint>> projectors;
    projectors.reserve(9);
    for (int i = 0; i < 9; ++i) {
        std::vector<qc::BitConstraint> p;
        for (int k = 0; k < kIndexQubits; ++k)
            p.emplace_back(layout.index[k], (i >> (kIndexQubits - 1 - k)) & 1);
        p.emplace_back(layout.value, 1);
        projectors.push_back(std::move(p));
    }
    return projectors;
}

std::array<double, 9> decode(const qc::StateVector& psi, const RegisterLayout& layout) {
    if (psi.n_qubits() != layout.n_qubits)
        throw std::invalid_argument("decode: state size does not match layout");
    std::array<double, 9> f{};
    const auto projectors = decode_projectors(layout);
    for (int i = 0; i < 9; ++i) {
        const double p = qc::marginal_probability(psi, projectors[i]);
        f[i] = std::min(1.0, std::sqrt(kQ * p));
    }
    return f;
}

std::array<qc::cplx, 16> encode_direction_2d(int direction) {
    if (direction < 0 || direction >= lattice::Q)
        throw std::invalid_argument("encode_direction_2d: direction out of range");

    // Two amplitudes per qubit pair, pair sub-index 0..3 -> |00>,|01>,|10>,|11>.
    auto component = [](int e) -> std::array<double, 4> {
        const double r = 1.0 / std::sqrt(2.0);
        if (e < 0) return {1.0, 0.0, 0.0, 0.0};
        if (e == 0) return {0.0, r, r, 0.0};
        return {0.0, 0.0, 0.0, 1.0};
    };
    const auto cx = component(lattice::EX[direction]);
    const auto cy = component(lattice::EY[direction]);

    std::array<qc::cplx, 16> amps{};
    for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) amps[(x << 2) | y] = cx[x] * cy[y];
    return amps;
}

}  // namespace qlbm::enc
