#include "doctest.h"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <vector>

#include "qlbm/dataset.hpp"
#include "qlbm/lbm_solver.hpp"
#include "qlbm/training.hpp"

using namespace qlbm;

// Every parallel code path must produce bit-identical results at any thread
// count: dataset generation keys its RNG on the sample index, the solver
// writes disjoint sites, and batch reductions sum in sample order. Each case
// runs the same computation pinned to 1 thread and at a forced 4, then
// compares exactly.

namespace {

struct ThreadGuard {
#ifdef _OPENMP
    int saved;
    ThreadGuard() : saved(omp_get_max_threads()) {}
    ~ThreadGuard() { omp_set_num_threads(saved); }
    static void set(int n) { omp_set_num_threads(n); }
#else
    static void set(int) {}
#endif
};

train::Pipeline small_pipeline() {
    ansatz::AnsatzSpec spec;
    spec.layers = 1;
    return train::Pipeline::make(spec, false);
}

}  // namespace

TEST_SUITE("parallel_consistency") {

TEST_CASE("dataset generation is thread-count invariant") {
    ThreadGuard guard;
    ds::DatasetConfig cfg;
    cfg.n_samples = 512;
    cfg.seed = 3141;

    ThreadGuard::set(1);
    auto one = ds::generate_dataset(cfg);
    ThreadGuard::set(4);
    auto four = ds::generate_dataset(cfg);

    REQUIRE(one.size() == four.size());
    for (std::size_t k = 0; k < one.size(); ++k)
        for (int i = 0; i < 9; ++i) {
            CHECK(one[k].f_pre[i] == four[k].f_pre[i]);
            CHECK(one[k].f_post[i] == four[k].f_post[i]);
        }
}

TEST_CASE("cavity stepping is thread-count invariant") {
    ThreadGuard guard;
    lbm::CavityConfig cfg;
    cfg.n = 24;
    cfg.max_steps = 300;

    ThreadGuard::set(1);
    auto one = lbm::run_cavity(cfg);
    ThreadGuard::set(4);
    auto four = lbm::run_cavity(cfg);

    CHECK(one.report.steps == four.report.steps);
    CHECK(one.report.final_residual == four.report.final_residual);
    CHECK(one.report.mass_final == four.report.mass_final);
    for (int i = 0; i < lattice::Q; ++i) CHECK(one.field.f[i] == four.field.f[i]);
}

TEST_CASE("loss, gradient and evaluation are thread-count invariant") {
    ThreadGuard guard;
    auto pipe = small_pipeline();
    ds::DatasetConfig dcfg;
    dcfg.n_samples = 24;
    dcfg.seed = 77;
    auto data = ds::generate_dataset(dcfg);
    std::vector<double> params(pipe.n_params());
    for (int i = 0; i < pipe.n_params(); ++i) params[i] = 0.01 * (i % 7) - 0.02;

    ThreadGuard::set(1);
    double loss_one = train::loss(pipe, params, data);
    auto grad_one = train::gradient(pipe, params, data, train::GradientMethod::Shift);
    auto eval_one = train::evaluate(pipe, params, data);

    ThreadGuard::set(4);
    double loss_four = train::loss(pipe, params, data);
    auto grad_four = train::gradient(pipe, params, data, train::GradientMethod::Shift);
    auto eval_four = train::evaluate(pipe, params, data);

    CHECK(loss_one == loss_four);
    REQUIRE(grad_one.size() == grad_four.size());
    for (std::size_t j = 0; j < grad_one.size(); ++j) CHECK(grad_one[j] == grad_four[j]);
    CHECK(eval_one.loss == eval_four.loss);
    CHECK(eval_one.rmse_f == eval_four.rmse_f);
    CHECK(eval_one.rmse_rho == eval_four.rmse_rho);
    CHECK(eval_one.rmse_umag == eval_four.rmse_umag);
}

TEST_CASE("a full training epoch is thread-count invariant") {
    ThreadGuard guard;
    auto pipe = small_pipeline();
    ds::DatasetConfig dcfg;
    dcfg.n_samples = 16;
    dcfg.seed = 5;
    auto data = ds::generate_dataset(dcfg);

    train::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.seed = 11;
    cfg.learning_rate = 0.05;

    ThreadGuard::set(1);
    auto one = train::train(data, pipe, cfg);
    ThreadGuard::set(4);
    auto four = train::train(data, pipe, cfg);

    REQUIRE(one.params.size() == four.params.size());
    for (std::size_t j = 0; j < one.params.size(); ++j) CHECK(one.params[j] == four.params[j]);
    REQUIRE(one.history.size() == four.history.size());
    for (std::size_t e = 0; e < one.history.size(); ++e)
        CHECK(one.history[e].loss == four.history[e].loss);
}

}  // TEST_SUITE
