#include "doctest.h"

#include <array>
#include <cmath>
#include <random>
#include <set>

#include "qlbm/encoding.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/statevector.hpp"
#include "qlbm/symmetry.hpp"

using namespace qlbm;

namespace {

std::array<double, 9> random_densities(std::mt19937_64& gen, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> unit(lo, hi);
    std::array<double, 9> f{};
    for (double& x : f) x = unit(gen);
    return f;
}

// Matrix product of the 2x2 integer matrices, row major.
std::array<int, 4> matmul(const std::array<int, 4>& a, const std::array<int, 4>& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

}  // namespace

TEST_SUITE("symmetry") {

TEST_CASE("the eight elements are the signed permutation matrices of the plane") {
    const auto& els = sym::d8_elements();
    REQUIRE(els.size() == 8);

    std::set<std::array<int, 4>> mats;
    int rotations = 0;
    for (const auto& e : els) {
        // Orthogonality, exactly in integers.
        const auto& m = e.mat;
        CHECK(m[0] * m[0] + m[2] * m[2] == 1);
        CHECK(m[1] * m[1] + m[3] * m[3] == 1);
        CHECK(m[0] * m[1] + m[2] * m[3] == 0);
        int det = m[0] * m[3] - m[1] * m[2];
        CHECK(std::abs(det) == 1);
        if (det == 1) ++rotations;
        mats.insert(m);
    }
    CHECK(mats.size() == 8);   // all distinct
    CHECK(rotations == 4);     // four proper rotations, four reflections
}

TEST_CASE("element order and the generator permutations are pinned") {
    const auto& els = sym::d8_elements();
    const std::array<const char*, 8> names{"i", "r", "r2", "r3", "s", "rs", "r2s", "r3s"};
    for (int a = 0; a < 8; ++a) CHECK(els[a].name == names[a]);

    // Quarter turn (x, y) -> (-y, x) and mirror (x, y) -> (x, -y).
    CHECK(els[1].perm == std::array<int, 9>{0, 2, 3, 4, 1, 6, 7, 8, 5});
    CHECK(els[1].mat == std::array<int, 4>{0, -1, 1, 0});
    CHECK(els[4].perm == std::array<int, 9>{0, 1, 4, 3, 2, 8, 7, 6, 5});
    CHECK(els[4].mat == std::array<int, 4>{1, 0, 0, -1});

    // Identity really is the identity.
    for (int i = 0; i < 9; ++i) CHECK(els[0].perm[i] == i);
    CHECK(els[0].mat == std::array<int, 4>{1, 0, 0, 1});
}

TEST_CASE("each permutation realizes its matrix on the velocity set") {
    for (const auto& e : sym::d8_elements()) {
        for (int i = 0; i < 9; ++i) {
            int rx = e.mat[0] * lattice::EX[i] + e.mat[1] * lattice::EY[i];
            int ry = e.mat[2] * lattice::EX[i] + e.mat[3] * lattice::EY[i];
            CHECK(lattice::EX[e.perm[i]] == rx);
            CHECK(lattice::EY[e.perm[i]] == ry);
        }
        CHECK(e.perm[0] == 0);  // the rest particle never moves
    }
}

TEST_CASE("the element list is closed under composition and inversion") {
    const auto& els = sym::d8_elements();
    auto find_by_perm = [&](const std::array<int, 9>& p) -> int {
        for (int k = 0; k < 8; ++k)
            if (els[k].perm == p) return k;
        return -1;
    };

    for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
            // "a after b": permutations and matrices must compose to the
            // same group element.
            std::array<int, 9> composed{};
            for (int i = 0; i < 9; ++i) composed[i] = els[a].perm[els[b].perm[i]];
            int c = find_by_perm(composed);
            REQUIRE(c >= 0);
            CHECK(els[c].mat == matmul(els[a].mat, els[b].mat));
        }
        // Inverse exists in the list.
        std::array<int, 9> inv{};
        for (int i = 0; i < 9; ++i) inv[els[a].perm[i]] = i;
        CHECK(find_by_perm(inv) >= 0);
    }

    // rs means "apply s, then r".
    std::array<int, 9> rs{};
    for (int i = 0; i < 9; ++i) rs[i] = els[1].perm[els[4].perm[i]];
    CHECK(els[5].perm == rs);
}

TEST_CASE("transform_densities relabels and its moments rotate") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto f = random_densities(gen, 0.05, 1.0);
        auto [rho, ux, uy] = lattice::moments(f);
        for (const auto& e : sym::d8_elements()) {
            auto g = sym::transform_densities(e, f);
            for (int i = 0; i < 9; ++i) CHECK(g[e.perm[i]] == f[i]);
            auto [rho2, vx, vy] = lattice::moments(g);
            CHECK(rho2 == doctest::Approx(rho).epsilon(1e-14));
            CHECK(vx == doctest::Approx(e.mat[0] * ux + e.mat[1] * uy).epsilon(1e-12));
            CHECK(vy == doctest::Approx(e.mat[2] * ux + e.mat[3] * uy).epsilon(1e-12));
        }
    }
}

TEST_CASE("BGK collision commutes with every element") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> relax(0.1, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        auto f = random_densities(gen, 0.05, 1.0);
        double r = relax(gen);
        for (const auto& e : sym::d8_elements()) {
            auto lhs = lattice::bgk_collide(sym::transform_densities(e, f), r);
            auto rhs = sym::transform_densities(e, lattice::bgk_collide(f, r));
            for (int i = 0; i < 9; ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("the 16-state index permutation extends the direction permutation") {
    for (const auto& e : sym::d8_elements()) {
        auto p16 = sym::index_permutation_16(e);
        REQUIRE(p16.size() == 16);
        for (int i = 0; i < 9; ++i) CHECK(p16[i] == e.perm[i]);
        for (int i = 9; i < 16; ++i) CHECK(p16[i] == i);

        // Still a permutation.
        std::set<std::uint16_t> seen(p16.begin(), p16.end());
        CHECK(seen.size() == 16);
    }
}

TEST_CASE("symmetry block with an identity inner circuit decodes unchanged") {
    std::mt19937_64 gen(23);
    auto layout = enc::RegisterLayout::with_symmetry();
    qc::ParamCircuit inner;  // no gates, no parameters
    auto block = sym::controlled_symmetry_block(layout, inner);
    CHECK(block.n_params == 0);

    for (int trial = 0; trial < 100; ++trial) {
        auto f = random_densities(gen);
        auto psi = enc::encode(f, layout);
        qc::apply_bound(psi, block, {});
        CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
        auto back = enc::decode(psi, layout);
        for (int i = 0; i < 9; ++i) CHECK(back[i] == doctest::Approx(f[i]).epsilon(1e-12));
    }
}

TEST_CASE("symmetry block passes a commuting inner circuit straight through") {
    // A rotation on the value qubit commutes with index permutations, so the
    // sandwich must decode exactly like running that rotation on a bare
    // encoding with no ancillas at all.
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);

    auto sym_layout = enc::RegisterLayout::with_symmetry();
    auto bare = enc::RegisterLayout::bare();

    for (int trial = 0; trial < 50; ++trial) {
        auto f = random_densities(gen);
        double theta = angle(gen);

        qc::ParamCircuit inner;
        inner.n_params = 1;
        qc::ParamGate pg(qc::ry(sym_layout.value, 0.0));
        pg.bind[0] = qc::AngleRef{0, 1.0};
        inner.gates.push_back(pg);
        auto block = sym::controlled_symmetry_block(sym_layout, inner);
        CHECK(block.n_params == 1);

        auto psi = enc::encode(f, sym_layout);
        qc::apply_bound(psi, block, {theta});
        auto sandwiched = enc::decode(psi, sym_layout);

        auto phi = enc::encode(f, bare);
        qc::apply(phi, qc::ry(bare.value, theta));
        auto direct = enc::decode(phi, bare);

        for (int i = 0; i < 9; ++i)
            CHECK(sandwiched[i] == doctest::Approx(direct[i]).epsilon(1e-12));
    }
}

TEST_CASE("symmetry block starts by spreading the ancillas") {
    auto layout = enc::RegisterLayout::with_symmetry();
    qc::ParamCircuit inner;
    auto block = sym::controlled_symmetry_block(layout, inner);
    REQUIRE(block.gates.size() >= 3);
    std::set<std::uint32_t> spread;
    for (int k = 0; k < 3; ++k) {
        const auto& g = block.gates[k].gate;
        CHECK(g.kind == qc::Gate::Kind::H);
        spread.insert(g.q[0]);
    }
    CHECK(spread == std::set<std::uint32_t>(layout.ancilla.begin(), layout.ancilla.end()));
}

TEST_CASE("symmetry block permutes both copies of a second-order layout") {
    std::mt19937_64 gen(31);
    auto layout = enc::RegisterLayout::second_order(true);
    qc::ParamCircuit inner;
    auto block = sym::controlled_symmetry_block(layout, inner);

    for (int trial = 0; trial < 20; ++trial) {
        auto f = random_densities(gen);
        auto psi = enc::encode(f, layout);
        qc::apply_bound(psi, block, {});
        auto back = enc::decode(psi, layout);
        for (int i = 0; i < 9; ++i) CHECK(back[i] == doctest::Approx(f[i]).epsilon(1e-12));

        auto swapped = layout;
        std::swap(swapped.index, swapped.index2);
        std::swap(swapped.value, *swapped.value2);
        auto back2 = enc::decode(psi, swapped);
        for (int i = 0; i < 9; ++i) CHECK(back2[i] == doctest::Approx(f[i]).epsilon(1e-12));
    }
}

TEST_CASE("symmetry block requires the ancilla register") {
    auto layout = enc::RegisterLayout::bare();
    qc::ParamCircuit inner;
    CHECK_THROWS_AS(sym::controlled_symmetry_block(layout, inner), std::invalid_argument);
}

}  // TEST_SUITE
