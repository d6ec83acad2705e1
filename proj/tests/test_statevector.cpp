// Statevector simulator. The dense-matrix oracle is the backbone: every gate
// kind is also expanded into an explicit 2^n x 2^n matrix with independent
// bit arithmetic, and applying the gate must equal multiplying by that
// matrix. This pins the big-endian qubit convention (qubit 0 owns the most
// significant index bit) and the exact U3 phase layout, which the parameter
// shift and adjoint differentiation rules silently depend on.

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qlbm/statevector.hpp"

using namespace qlbm;
using qc::cplx;
using qc::StateVector;

namespace {

using Matrix = std::vector<std::vector<cplx>>;

Matrix identity(std::size_t n) {
    Matrix m(n, std::vector<cplx>(n));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
    return m;
}

// Full-dimension matrix for a gate, built purely from index bit twiddling.
// For each input basis state: check controls, then act on the target bit
// with the 2x2 block (or remap the register sub-index for permutations).
Matrix gate_matrix(const qc::Gate& g, std::uint32_t n_qubits) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    const auto bit_of = [&](std::uint32_t q) { return n_qubits - 1 - q; };
    Matrix m(dim, std::vector<cplx>(dim));

    std::array<std::array<cplx, 2>, 2> block{};
    bool has_block = true;
    switch (g.kind) {
        case qc::Gate::Kind::U3: {
            const double t2 = g.angles[0] / 2.0;
            const cplx ephi = std::polar(1.0, g.angles[1]);
            const cplx edel = std::polar(1.0, g.angles[2]);
            block = {{{std::cos(t2), -edel * std::sin(t2)},
                      {ephi * std::sin(t2), ephi * edel * std::cos(t2)}}};
            break;
        }
        case qc::Gate::Kind::RY: {
            const double t2 = g.angles[0] / 2.0;
            block = {{{std::cos(t2), -std::sin(t2)}, {std::sin(t2), std::cos(t2)}}};
            break;
        }
        case qc::Gate::Kind::H: {
            const double s = 1.0 / std::sqrt(2.0);
            block = {{{s, s}, {s, -s}}};
            break;
        }
        default:
            has_block = false;
            break;
    }

    for (std::size_t in = 0; in < dim; ++in) {
        bool fires = true;
        for (const auto& [cq, cbit] : g.controls)
            if (static_cast<int>((in >> bit_of(cq)) & 1) != cbit) fires = false;
        if (!fires) {
            m[in][in] = 1.0;
            continue;
        }
        if (g.kind == qc::Gate::Kind::CNOT) {
            std::size_t out = in;
            if ((in >> bit_of(g.q[0])) & 1) out ^= std::size_t{1} << bit_of(g.q[1]);
            m[out][in] = 1.0;
        } else if (g.kind == qc::Gate::Kind::Perm) {
            std::size_t sub = 0;
            for (std::size_t k = 0; k < g.reg.size(); ++k)
                sub = (sub << 1) | ((in >> bit_of(g.reg[k])) & 1);
            const std::size_t mapped = g.perm[sub];
            std::size_t out = in;
            for (std::size_t k = 0; k < g.reg.size(); ++k) {
                const std::size_t bit = (mapped >> (g.reg.size() - 1 - k)) & 1;
                const std::size_t mask = std::size_t{1} << bit_of(g.reg[k]);
                out = (out & ~mask) | (bit ? mask : 0);
            }
            m[out][in] = 1.0;
        } else if (has_block) {
            const std::size_t tbit = std::size_t{1} << bit_of(g.q[0]);
            const int row_in = (in & tbit) ? 1 : 0;
            m[in & ~tbit][in] += block[0][row_in];
            m[in | tbit][in] += block[1][row_in];
        }
    }
    return m;
}

std::vector<cplx> multiply(const Matrix& m, const std::vector<cplx>& v) {
    std::vector<cplx> out(v.size());
    for (std::size_t r = 0; r < v.size(); ++r)
        for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
    return out;
}

StateVector random_state(std::uint32_t n, std::mt19937_64& gen) {
    std::normal_distribution<double> dist(0.0, 1.0);
    const std::size_t dim = std::size_t{1} << n;
    std::vector<cplx> amps(dim);
    double norm = 0.0;
    for (cplx& a : amps) {
        a = cplx(dist(gen), dist(gen));
        norm += std::norm(a);
    }
    for (cplx& a : amps) a /= std::sqrt(norm);
    return StateVector(n, amps);
}

qc::Gate random_gate(std::uint32_t n, std::mt19937_64& gen, bool allow_controls) {
    std::uniform_int_distribution<int> kind_dist(0, allow_controls ? 5 : 4);
    std::uniform_int_distribution<std::uint32_t> q_dist(0, n - 1);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    switch (kind_dist(gen)) {
        case 0:
            return qc::u3(q_dist(gen), angle(gen), angle(gen), angle(gen));
        case 1:
            return qc::ry(q_dist(gen), angle(gen));
        case 2:
            return qc::h(q_dist(gen));
        case 3: {
            const std::uint32_t c = q_dist(gen);
            std::uint32_t t = q_dist(gen);
            while (t == c) t = q_dist(gen);
            return qc::cnot(c, t);
        }
        case 4: {
            // random permutation of a 2-qubit register
            std::uint32_t a = q_dist(gen), b = q_dist(gen);
            while (b == a) b = q_dist(gen);
            std::vector<std::uint16_t> perm{0, 1, 2, 3};
            std::shuffle(perm.begin(), perm.end(), gen);
            return qc::index_permutation({a, b}, perm);
        }
        default: {
            const std::uint32_t c = q_dist(gen);
            std::uint32_t t = q_dist(gen);
            while (t == c) t = q_dist(gen);
            std::uniform_int_distribution<int> bit(0, 1);
            return qc::controlled({{c, bit(gen)}}, qc::u3(t, angle(gen), angle(gen), angle(gen)));
        }
    }
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_SUITE("statevector") {

TEST_CASE("fresh state is |0...0> and qubit 0 is the most significant bit") {
    StateVector psi(3);
    CHECK(psi.amp(0) == cplx(1.0, 0.0));
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(psi.bit_of(0) == 2);
    CHECK(psi.bit_of(2) == 0);

    // flipping qubit 0 with a pi rotation must populate index 4 = 100b
    qc::apply(psi, qc::ry(0, 3.14159265358979323846));
    CHECK(std::abs(psi.amp(4)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(psi.amp(0)) < 1e-12);
}

TEST_CASE("u3 follows the documented matrix on both basis states") {
    const double theta = 0.9, phi = 0.4, delta = -1.3;
    StateVector zero(1);
    qc::apply(zero, qc::u3(0, theta, phi, delta));
    CHECK(std::abs(zero.amp(0) - cplx(std::cos(theta / 2))) < 1e-15);
    CHECK(std::abs(zero.amp(1) - std::polar(std::sin(theta / 2), phi)) < 1e-15);

    StateVector one(1, {cplx(0.0), cplx(1.0)});
    qc::apply(one, qc::u3(0, theta, phi, delta));
    CHECK(std::abs(one.amp(0) - std::polar(-std::sin(theta / 2), delta)) < 1e-15);
    CHECK(std::abs(one.amp(1) - std::polar(std::cos(theta / 2), phi + delta)) < 1e-15);
}

TEST_CASE("every gate kind matches its dense-matrix expansion") {
    std::mt19937_64 gen(21);
    for (std::uint32_t n = 2; n <= 4; ++n) {
        for (int trial = 0; trial < 200; ++trial) {
            const qc::Gate g = random_gate(n, gen, true);
            StateVector psi = random_state(n, gen);
            const std::vector<cplx> expected = multiply(gate_matrix(g, n), psi.amplitudes());
            qc::apply(psi, g);
            CHECK(max_diff(psi.amplitudes(), expected) < 1e-13);
        }
    }
}

TEST_CASE("norm survives long random circuits") {
    std::mt19937_64 gen(22);
    StateVector psi = random_state(5, gen);
    for (int i = 0; i < 1000; ++i) qc::apply(psi, random_gate(5, gen, true));
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adjoint undoes its gate") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 300; ++trial) {
        const qc::Gate g = random_gate(4, gen, true);
        const StateVector before = random_state(4, gen);
        StateVector psi = before;
        qc::apply(psi, g);
        qc::apply(psi, qc::adjoint(g));
        CHECK(max_diff(psi.amplitudes(), before.amplitudes()) < 1e-13);
    }
}

TEST_CASE("cnot flips the target only when the control is set") {
    StateVector psi(2, {cplx(0.0), cplx(0.0), cplx(1.0), cplx(0.0)});  // |10>
    qc::apply(psi, qc::cnot(0, 1));
    CHECK(std::abs(psi.amp(3)) == doctest::Approx(1.0));  // |11>

    StateVector rest(2);  // |00>
    qc::apply(rest, qc::cnot(0, 1));
    CHECK(std::abs(rest.amp(0)) == doctest::Approx(1.0));
}

TEST_CASE("controls can require a cleared qubit") {
    // control-on-zero: fires for |0t>, idles for |1t>
    const qc::Gate g = qc::controlled({{0, 0}}, qc::ry(1, 3.14159265358979323846));
    StateVector on(2);  // |00> -> |01>
    qc::apply(on, g);
    CHECK(std::abs(on.amp(1)) == doctest::Approx(1.0).epsilon(1e-12));

    StateVector off(2, {cplx(0.0), cplx(0.0), cplx(1.0), cplx(0.0)});  // |10> unchanged
    qc::apply(off, g);
    CHECK(std::abs(off.amp(2)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("register permutation relabels sub-indices with reg[0] as its MSB") {
    // cycle 0->1->2->3->0 on the register (q0, q2) of a 3-qubit state: the
    // sub-index reads bit(q0) bit(q2), so |q0 q1 q2> = |001> (sub 01) must
    // map to sub 10 = |100>
    std::vector<std::uint16_t> cycle{1, 2, 3, 0};
    StateVector psi(3, {cplx(0.0), cplx(1.0), cplx(0.0), cplx(0.0), cplx(0.0), cplx(0.0),
                        cplx(0.0), cplx(0.0)});
    qc::apply(psi, qc::index_permutation({0, 2}, cycle));
    CHECK(std::abs(psi.amp(4)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("marginal probabilities are exact and sum to one") {
    std::mt19937_64 gen(24);
    StateVector psi = random_state(4, gen);
    for (int i = 0; i < 30; ++i) qc::apply(psi, random_gate(4, gen, true));

    // all four outcomes of a two-qubit register partition the distribution
    double total = 0.0;
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1)
            total += qc::marginal_probability(psi, {{1, b0}, {3, b1}});
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // oracle for one concrete marginal: direct amplitude accumulation
    double want = 0.0;
    for (std::size_t idx = 0; idx < psi.size(); ++idx)
        if (((idx >> psi.bit_of(1)) & 1) == 1) want += std::norm(psi.amp(idx));
    CHECK(qc::marginal_probability(psi, {{1, 1}}) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("invalid gates are rejected") {
    StateVector psi(2);
    CHECK_THROWS_AS(qc::apply(psi, qc::h(2)), std::out_of_range);
    CHECK_THROWS_AS(qc::apply(psi, qc::cnot(1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(qc::apply(psi, qc::controlled({{1, 1}}, qc::ry(1, 0.3))),
                    std::invalid_argument);
    CHECK_THROWS_AS(qc::apply(psi, qc::index_permutation({0, 1}, {0, 1, 2})),
                    std::invalid_argument);
    CHECK_THROWS_AS(qc::apply(psi, qc::index_permutation({0, 1}, {0, 1, 2, 2})),
                    std::invalid_argument);
}

}  // TEST_SUITE
