#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "qlbm/dataset.hpp"
#include "qlbm/lattice.hpp"
#include "qlbm/symmetry.hpp"
#include "qlbm/training.hpp"

using namespace qlbm;

namespace {

ds::Dataset small_dataset(std::int64_t n, std::uint64_t seed, double sigma_max = 5e-4) {
    ds::DatasetConfig cfg;
    cfg.n_samples = n;
    cfg.seed = seed;
    cfg.sigma_max = sigma_max;
    cfg.sigma_min = std::min(cfg.sigma_min, sigma_max);
    return ds::generate_dataset(cfg);
}

train::Pipeline identity_pipeline() {
    ansatz::AnsatzSpec spec;  // sel-cry-inv-sel
    spec.layers = 1;
    return train::Pipeline::make(spec, false);
}

std::vector<double> random_params(int n, std::uint64_t seed, double scale = 0.3) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> p(n);
    for (double& x : p) x = u(gen);
    return p;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name)
        : path((std::filesystem::temp_directory_path() / name).string()) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("training") {

TEST_CASE("sample term composes density, mass and speed errors") {
    auto f = lattice::equilibrium(1.0, 0.05, 0.02);
    CHECK(train::sample_term(f, f) == 0.0);

    // Perturb the rest component: the density vector error and the mass
    // error are both eps, and the speed shrinks because mass grew while
    // momentum stayed put.
    const double eps = 1e-3;
    auto pred = f;
    pred[0] += eps;
    auto m_true = lattice::moments(f);
    auto m_pred = lattice::moments(pred);
    double du = std::hypot(m_pred.ux, m_pred.uy) - std::hypot(m_true.ux, m_true.uy);
    double expect = (eps * eps + eps * eps + du * du) / 3.0;
    CHECK(train::sample_term(pred, f) == doctest::Approx(expect).epsilon(1e-12));

    // A dead prediction falls back to zero velocity instead of dividing by
    // zero density.
    lattice::Densities zero{};
    double ff = 0.0;
    for (double x : f) ff += x * x;
    double u2 = m_true.ux * m_true.ux + m_true.uy * m_true.uy;
    double dead = (ff + m_true.rho * m_true.rho + u2) / 3.0;
    CHECK(train::sample_term(zero, f) == doctest::Approx(dead).epsilon(1e-12));
}

TEST_CASE("identity circuit scores at the noise floor") {
    // With tau = 1 the post state equals the drawn equilibrium, so an
    // identity model (zero angles on an inverse-paired form) is off by
    // exactly the injected perturbation. The loss must sit at the noise
    // scale, far below any constant-output baseline.
    auto pipe = identity_pipeline();
    std::vector<double> zeros(pipe.n_params(), 0.0);
    auto data = small_dataset(64, 3);
    double l = train::loss(pipe, zeros, data);
    CHECK(l > 0.0);
    CHECK(l < 1e-3);

    // Manual recomputation from the public pieces.
    double acc = 0.0;
    for (const auto& s : data)
        acc += train::sample_term(train::forward(pipe, zeros, s.f_pre), s.f_post);
    CHECK(l == doctest::Approx(std::sqrt(acc / data.size())).epsilon(1e-14));
}

TEST_CASE("zero-angle inverse-paired forward reproduces its input") {
    auto pipe = identity_pipeline();
    std::vector<double> zeros(pipe.n_params(), 0.0);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        lattice::Densities f{};
        for (double& x : f) x = u(gen);
        auto out = train::forward(pipe, zeros, f);
        for (int i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(f[i]).epsilon(1e-12));
    }

    // Same with the symmetry sandwich around it.
    ansatz::AnsatzSpec spec;
    spec.layers = 1;
    auto sym_pipe = train::Pipeline::make(spec, true);
    std::vector<double> zeros2(sym_pipe.n_params(), 0.0);
    for (int trial = 0; trial < 20; ++trial) {
        lattice::Densities f{};
        for (double& x : f) x = u(gen);
        auto out = train::forward(sym_pipe, zeros2, f);
        for (int i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(f[i]).epsilon(1e-12));
    }
}

TEST_CASE("forward output is always a valid density vector") {
    auto pipe = identity_pipeline();
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        auto params = random_params(pipe.n_params(), 1000 + trial, 3.0);
        lattice::Densities f{};
        for (double& x : f) x = u(gen);
        auto out = train::forward(pipe, params, f);
        for (double x : out) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
}

TEST_CASE("loss is invariant under batch permutation and duplication") {
    auto pipe = identity_pipeline();
    auto params = random_params(pipe.n_params(), 11);
    auto data = small_dataset(16, 21);

    double base = train::loss(pipe, params, data);
    auto shuffled = data;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(99));
    CHECK(train::loss(pipe, params, shuffled) == doctest::Approx(base).epsilon(1e-13));

    // Doubling every sample leaves the mean untouched.
    auto doubled = data;
    doubled.insert(doubled.end(), data.begin(), data.end());
    CHECK(train::loss(pipe, params, doubled) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("shift-rule gradient matches central differences and the adjoint sweep") {
    ansatz::AnsatzSpec spec;  // includes controlled rotations: 4-term rule
    spec.layers = 1;
    auto pipe = train::Pipeline::make(spec, false);
    auto params = random_params(pipe.n_params(), 555);
    auto data = small_dataset(4, 777);

    auto g_shift = train::gradient(pipe, params, data, train::GradientMethod::Shift);
    auto g_fd = train::gradient(pipe, params, data, train::GradientMethod::CentralDiff, 1e-5);
    auto g_adj = train::gradient(pipe, params, data, train::GradientMethod::Adjoint);
    REQUIRE(g_shift.size() == params.size());
    REQUIRE(g_fd.size() == params.size());
    REQUIRE(g_adj.size() == params.size());

    for (std::size_t j = 0; j < params.size(); ++j) {
        CHECK(g_shift[j] == doctest::Approx(g_fd[j]).epsilon(1e-5).scale(1.0));
        CHECK(g_shift[j] == doctest::Approx(g_adj[j]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("gradients agree on a controlled-U3 variant too") {
    ansatz::AnsatzSpec spec;
    spec.cop = ansatz::COPKind::CU3;
    spec.layers = 1;
    auto pipe = train::Pipeline::make(spec, false);
    auto params = random_params(pipe.n_params(), 314);
    auto data = small_dataset(2, 159);

    auto g_shift = train::gradient(pipe, params, data, train::GradientMethod::Shift);
    auto g_adj = train::gradient(pipe, params, data, train::GradientMethod::Adjoint);
    for (std::size_t j = 0; j < params.size(); ++j)
        CHECK(g_shift[j] == doctest::Approx(g_adj[j]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("gradient vanishes where the fit is exact") {
    // Make the targets equal the identity model's own outputs; at zero
    // angles the loss is exactly zero and so is its gradient.
    auto pipe = identity_pipeline();
    std::vector<double> zeros(pipe.n_params(), 0.0);
    auto data = small_dataset(4, 33);
    for (auto& s : data) s.f_post = train::forward(pipe, zeros, s.f_pre);

    CHECK(train::loss(pipe, zeros, data) < 1e-14);
    for (double g : train::gradient(pipe, zeros, data, train::GradientMethod::Shift))
        CHECK(std::abs(g) < 1e-12);
}

TEST_CASE("training reduces the loss on a tiny overfit problem") {
    auto data = small_dataset(8, 40, 5e-4);
    ansatz::AnsatzSpec spec;
    spec.layers = 1;
    auto pipe = train::Pipeline::make(spec, false);

    train::TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.seed = 2;
    cfg.learning_rate = 0.05;

    SUBCASE("adam") { cfg.optimizer = train::Optimizer::Adam; }
    SUBCASE("sgd") { cfg.optimizer = train::Optimizer::SGD; }

    auto ck = train::train(data, pipe, cfg);
    REQUIRE(ck.history.size() == 5);
    CHECK(ck.epoch == 5);
    for (const auto& log : ck.history) CHECK(std::isfinite(log.loss));
    CHECK(ck.history.back().loss < ck.history.front().loss);
    CHECK(ck.history.back().processed == 5 * 8);
}

TEST_CASE("learning-rate schedule switches at the stated epochs") {
    auto data = small_dataset(4, 41);
    auto pipe = identity_pipeline();
    train::TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 4;
    cfg.learning_rate = 0.3;
    cfg.schedule = {{3, 0.05}};

    auto ck = train::train(data, pipe, cfg);
    REQUIRE(ck.history.size() == 4);
    CHECK(ck.history[0].lr == 0.3);
    CHECK(ck.history[1].lr == 0.3);
    CHECK(ck.history[2].lr == 0.05);
    CHECK(ck.history[3].lr == 0.05);
}

TEST_CASE("checkpoints round trip through the text format") {
    auto data = small_dataset(4, 50);
    auto pipe = identity_pipeline();
    train::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.seed = 5;

    auto ck = train::train(data, pipe, cfg);
    TempFile tmp("qlbm_ck_roundtrip.txt");
    train::write_checkpoint(tmp.path, ck);
    auto back = train::read_checkpoint(tmp.path);

    CHECK(back.epoch == ck.epoch);
    CHECK(back.use_symmetry == ck.use_symmetry);
    CHECK(ansatz::canonical_name(back.spec) == ansatz::canonical_name(ck.spec));
    CHECK(back.spec.layers == ck.spec.layers);
    CHECK(back.spec.repetitions == ck.spec.repetitions);
    REQUIRE(back.params.size() == ck.params.size());
    for (std::size_t i = 0; i < ck.params.size(); ++i) CHECK(back.params[i] == ck.params[i]);
    REQUIRE(back.adam_m.size() == ck.adam_m.size());
    for (std::size_t i = 0; i < ck.adam_m.size(); ++i) {
        CHECK(back.adam_m[i] == ck.adam_m[i]);
        CHECK(back.adam_v[i] == ck.adam_v[i]);
    }
    CHECK(back.adam_t == ck.adam_t);
    REQUIRE(back.history.size() == ck.history.size());
    for (std::size_t i = 0; i < ck.history.size(); ++i) {
        CHECK(back.history[i].epoch == ck.history[i].epoch);
        CHECK(back.history[i].loss == ck.history[i].loss);
        CHECK(back.history[i].lr == ck.history[i].lr);
        CHECK(back.history[i].processed == ck.history[i].processed);
    }
}

TEST_CASE("checkpoint reader rejects garbage") {
    TempFile tmp("qlbm_ck_bad.txt");
    {
        std::ofstream out(tmp.path);
        out << "definitely not a checkpoint\n";
    }
    CHECK_THROWS_AS(train::read_checkpoint(tmp.path), std::runtime_error);
    CHECK_THROWS_AS(train::read_checkpoint("/nonexistent/ck.txt"), std::runtime_error);
}

TEST_CASE("resuming reproduces the uninterrupted run exactly") {
    auto data = small_dataset(8, 60);
    auto pipe = identity_pipeline();

    train::TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.seed = 17;
    cfg.learning_rate = 0.05;

    cfg.epochs = 6;
    auto straight = train::train(data, pipe, cfg);

    cfg.epochs = 3;
    auto half = train::train(data, pipe, cfg);
    // Epochs count onward from the checkpoint when resuming.
    auto resumed = train::train(data, pipe, cfg, &half);

    CHECK(resumed.epoch == 6);
    REQUIRE(resumed.history.size() == 6);
    REQUIRE(resumed.params.size() == straight.params.size());
    // Substreams are keyed on the absolute epoch and optimizer state rides
    // in the checkpoint, so the trajectories are bit-identical.
    for (std::size_t i = 0; i < straight.params.size(); ++i)
        CHECK(resumed.params[i] == straight.params[i]);
    for (std::size_t e = 0; e < 6; ++e) CHECK(resumed.history[e].loss == straight.history[e].loss);
}

TEST_CASE("non-finite targets raise the divergence signal with state attached") {
    auto data = small_dataset(4, 70);
    data[2].f_post[3] = std::nan("");
    auto pipe = identity_pipeline();
    train::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 4;

    bool thrown = false;
    try {
        train::train(data, pipe, cfg);
    } catch (const train::TrainingDiverged& e) {
        thrown = true;
        CHECK(e.state.params.size() == static_cast<std::size_t>(pipe.n_params()));
        CHECK(e.state.epoch == 0);  // failed inside the first epoch
        CHECK(std::string(e.what()).find("finite") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("config validation catches impossible setups") {
    train::TrainConfig cfg;
    cfg.batch_size = 64;
    CHECK_THROWS_AS(cfg.validate(32), std::invalid_argument);  // batch > dataset
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(64), std::invalid_argument);
    cfg = {};
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(64), std::invalid_argument);
    cfg = {};
    cfg.sample_size = 16;
    cfg.batch_size = 32;  // batch larger than the per-epoch draw
    CHECK_THROWS_AS(cfg.validate(64), std::invalid_argument);
    cfg = {};
    cfg.checkpoint_interval = 5;  // interval without a path
    CHECK_THROWS_AS(cfg.validate(64), std::invalid_argument);
    cfg = {};
    cfg.schedule = {{5, 0.1}, {2, 0.2}};  // stages out of order
    CHECK_THROWS_AS(cfg.validate(64), std::invalid_argument);
}

TEST_CASE("symmetry-wrapped model is exactly equivariant") {
    // Transforming the input by any lattice symmetry and transforming the
    // output back must agree with the plain forward pass: the group average
    // in the ancilla sandwich guarantees it for every parameter vector.
    ansatz::AnsatzSpec spec;
    spec.layers = 2;
    auto pipe = train::Pipeline::make(spec, true);
    auto params = random_params(pipe.n_params(), 2718);

    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        lattice::Densities f{};
        for (double& x : f) x = u(gen);
        auto base = train::forward(pipe, params, f);
        for (const auto& e : sym::d8_elements()) {
            auto twisted = train::forward(pipe, params, sym::transform_densities(e, f));
            auto expect = sym::transform_densities(e, base);
            for (int i = 0; i < 9; ++i)
                CHECK(twisted[i] == doctest::Approx(expect[i]).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("evaluate reports the same loss and sane error breakdowns") {
    auto pipe = identity_pipeline();
    auto params = random_params(pipe.n_params(), 404, 0.05);
    auto data = small_dataset(32, 80);

    auto ev = train::evaluate(pipe, params, data);
    CHECK(ev.loss == doctest::Approx(train::loss(pipe, params, data)).epsilon(1e-13));
    REQUIRE(ev.velocity_pairs.size() == data.size());

    // Oracle recomputation of the breakdowns from forward passes.
    double sf = 0.0, srho = 0.0, sumag = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        auto pred = train::forward(pipe, params, data[k].f_pre);
        auto mt = lattice::moments(data[k].f_post);
        double rho_p = 0.0;
        for (double x : pred) rho_p += x;
        for (int i = 0; i < 9; ++i) {
            double d = pred[i] - data[k].f_post[i];
            sf += d * d;
        }
        srho += (rho_p - mt.rho) * (rho_p - mt.rho);

        CHECK(ev.velocity_pairs[k][0] == doctest::Approx(mt.ux).epsilon(1e-12));
        CHECK(ev.velocity_pairs[k][1] == doctest::Approx(mt.uy).epsilon(1e-12));
    }
    CHECK(ev.rmse_f == doctest::Approx(std::sqrt(sf / (9.0 * data.size()))).epsilon(1e-12));
    CHECK(ev.rmse_rho == doctest::Approx(std::sqrt(srho / data.size())).epsilon(1e-12));
    CHECK(ev.rmse_umag >= 0.0);
    CHECK(std::isfinite(ev.rmse_umag));
}

}  // TEST_SUITE
