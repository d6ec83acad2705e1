// Compares the OpenMP kernels against their serial reference twins: same
// bits out, wall-clock side by side. Exits non-zero on any mismatch, so this
// doubles as a consistency check on machines with unusual thread counts.

#include <chrono>
#include <cstdint>
#include <cstring>
#include <iostream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qlbm/dataset.hpp"
#include "qlbm/lbm_solver.hpp"
#include "qlbm/rng.hpp"
#include "qlbm/training.hpp"

namespace {

using namespace qlbm;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bits_equal(const lattice::Densities& a, const lattice::Densities& b) {
    return std::memcmp(a.data(), b.data(), sizeof(a)) == 0;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void report(const char* name, double parallel_s, double serial_s, bool identical) {
    std::cout << name << ": parallel " << parallel_s << " s, serial " << serial_s << " s, x"
              << (parallel_s > 0.0 ? serial_s / parallel_s : 0.0)
              << (identical ? ", outputs bit-identical" : ", OUTPUT MISMATCH") << '\n';
}

bool bench_dataset() {
    ds::DatasetConfig cfg;
    cfg.n_samples = 20000;
    cfg.seed = 42;

    const Clock::time_point t0 = Clock::now();
    const ds::Dataset parallel = ds::generate_dataset(cfg);
    const double tp = seconds_since(t0);

    const Clock::time_point t1 = Clock::now();
    const ds::Dataset serial = ds::reference::generate_dataset(cfg);
    const double ts = seconds_since(t1);

    bool same = parallel.size() == serial.size();
    for (std::size_t i = 0; same && i < parallel.size(); ++i) {
        same = bits_equal(parallel[i].f_pre, serial[i].f_pre) &&
               bits_equal(parallel[i].f_eq, serial[i].f_eq) &&
               bits_equal(parallel[i].f_post, serial[i].f_post);
    }
    report("dataset 20000 samples", tp, ts, same);
    return same;
}

bool bench_cavity() {
    const int n = 64;
    const long steps = 200;
    const double dt_over_tau = 1.0 / lbm::tau_from(40.0, 0.1, n);
    const double u_lid = 0.1 * std::sqrt(lattice::CS2);

    const auto run = [&](bool parallel) {
        lbm::FlowField field = lbm::FlowField::uniform(n, n, lattice::equilibrium(1.0, 0.0, 0.0));
        lbm::apply_lid(field, u_lid);
        for (long s = 0; s < steps; ++s) {
            if (parallel) {
                lbm::collide(field, dt_over_tau, lbm::CollisionMode::Classical, 0.0);
                lbm::stream(field);
            } else {
                lbm::reference::collide(field, dt_over_tau, lbm::CollisionMode::Classical, 0.0);
                lbm::reference::stream(field);
            }
            lbm::apply_lid(field, u_lid);
        }
        return field;
    };

    const Clock::time_point t0 = Clock::now();
    const lbm::FlowField parallel = run(true);
    const double tp = seconds_since(t0);

    const Clock::time_point t1 = Clock::now();
    const lbm::FlowField serial = run(false);
    const double ts = seconds_since(t1);

    bool same = true;
    for (int i = 0; i < lattice::Q; ++i) same = same && bits_equal(parallel.f[i], serial.f[i]);
    report("cavity 64x64, 200 steps", tp, ts, same);
    return same;
}

bool bench_gradient() {
    ds::DatasetConfig dcfg;
    dcfg.n_samples = 16;
    dcfg.seed = 7;
    const ds::Dataset data = ds::generate_dataset(dcfg);

    ansatz::AnsatzSpec spec = ansatz::parse_name("sel-cry-inv-sel");
    spec.layers = 2;
    const train::Pipeline pipe = train::Pipeline::make(spec, false);

    std::vector<double> params(static_cast<std::size_t>(pipe.n_params()));
    std::mt19937_64 gen = rng::substream(3, 0);
    std::uniform_real_distribution<double> dist(-0.5, 0.5);
    for (double& p : params) p = dist(gen);

    const Clock::time_point t0 = Clock::now();
    const std::vector<double> parallel =
        train::gradient(pipe, params, data, train::GradientMethod::Shift);
    const double tp = seconds_since(t0);

#ifdef _OPENMP
    const int restore = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const Clock::time_point t1 = Clock::now();
    const std::vector<double> serial =
        train::gradient(pipe, params, data, train::GradientMethod::Shift);
    const double ts = seconds_since(t1);
#ifdef _OPENMP
    omp_set_num_threads(restore);
#endif

    const bool same = bits_equal(parallel, serial);
    const std::string label =
        "batch gradient, 16 samples, " + std::to_string(pipe.n_params()) + " parameters";
    report(label.c_str(), tp, ts, same);
    return same;
}

}  // namespace

int main() {
    std::cout << "kernel benchmark, " << max_threads() << " thread(s) available\n";
    bool ok = true;
    ok = bench_dataset() && ok;
    ok = bench_cavity() && ok;
    ok = bench_gradient() && ok;
    if (!ok) {
        std::cerr << "parallel and serial kernels disagree\n";
        return 1;
    }
    return 0;
}
