#pragma once

// Trains the variational collision model. The model ("pipeline") is
// encode -> parameterized circuit -> decode, optionally with the circuit
// wrapped in the ancilla-controlled symmetry sandwich during training.
//
// The loss couples the decoded densities to their hydrodynamic moments:
//
//   loss = sqrt( (1/N) sum_n (1/3) [ |f~ - f|^2 + (rho~ - rho)^2
//                                    + (|u~| - |u|)^2 ] )
//
// where f is the true post-collision vector of sample n and the tilde
// quantities come from the decoded prediction. Circuit gradients are exact
// (shift rule or adjoint sweep) and the decode/loss chain rule is applied
// analytically on top; a central-difference mode exists as the oracle.
//
// Reproducibility: parameter init, per-epoch sample draws, and batch
// reductions all use fixed substreams and ordered summation, so a run is
// bit-identical for any thread count.

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlbm/ansatz.hpp"
#include "qlbm/dataset.hpp"
#include "qlbm/encoding.hpp"
#include "qlbm/symmetry.hpp"

namespace qlbm::train {

struct Pipeline {
    ansatz::AnsatzSpec spec;
    bool use_symmetry = false;
    enc::RegisterLayout layout;
    qc::ParamCircuit circuit;
    std::vector<std::vector<qc::BitConstraint>> projectors;

    // Builds the layout the family needs (duplicated registers for the
    // second-order form, ancillas when symmetry is requested), the circuit,
    // and the decode projectors. Training and inference share this.
    static Pipeline make(const ansatz::AnsatzSpec& spec, bool use_symmetry);

    int n_params() const { return circuit.n_params; }
};

// One collision: encode, run, decode. Inference-grade (no gradients).
lattice::Densities forward(const Pipeline& pipe, const std::vector<double>& params,
                           const lattice::Densities& f_pre);

enum class Optimizer { SGD, Adam };
enum class GradientMethod { Shift, CentralDiff, Adjoint };

// Learning-rate stage: `lr` applies from absolute epoch `epoch` onward.
struct LrStage {
    int epoch = 1;
    double lr = 0.0;
};

struct TrainConfig {
    double learning_rate = 0.3;
    std::vector<LrStage> schedule;  // staged manual reductions, ascending epochs
    int batch_size = 32;
    int sample_size = 0;  // samples drawn per epoch without replacement; 0 = all
    int epochs = 200;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    GradientMethod gradient = GradientMethod::Shift;
    double fd_step = 1e-5;
    std::uint64_t seed = 0;
    double init_scale = 0.1;      // fresh parameters ~ U(-init_scale, init_scale)
    int checkpoint_interval = 0;  // epochs between periodic checkpoint writes; 0 = none
    std::string checkpoint_path;  // needed when checkpoint_interval > 0

    void validate(std::size_t dataset_size) const;
};

struct EpochLog {
    int epoch = 0;               // absolute, 1-based, continues across resumes
    std::int64_t processed = 0;  // cumulative samples consumed since epoch 1
    double loss = 0.0;           // sqrt of the mean squared term over the epoch
    double lr = 0.0;
};

struct Checkpoint {
    ansatz::AnsatzSpec spec;
    bool use_symmetry = false;
    int epoch = 0;
    std::vector<double> params;
    Optimizer optimizer = Optimizer::Adam;
    std::vector<double> adam_m, adam_v;
    std::int64_t adam_t = 0;
    std::vector<EpochLog> history;
};

// Versioned text format; see training.cpp for the exact layout.
void write_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::string& path);

// Raised when the loss turns non-finite; carries the state at failure so
// the caller can persist a diagnostic checkpoint.
struct TrainingDiverged : std::runtime_error {
    Checkpoint state;
    TrainingDiverged(const std::string& what, Checkpoint ck)
        : std::runtime_error(what), state(std::move(ck)) {}
};

// Per-sample squared term (the bracket of the loss, already divided by 3).
// Degenerate predictions (zero density) fall back to zero velocity instead
// of failing, since a badly trained circuit may produce them.
double sample_term(const lattice::Densities& predicted, const lattice::Densities& f_post);

double loss(const Pipeline& pipe, const std::vector<double>& params,
            const std::vector<ds::Sample>& batch);

std::vector<double> gradient(const Pipeline& pipe, const std::vector<double>& params,
                             const std::vector<ds::Sample>& batch, GradientMethod method,
                             double fd_step = 1e-5);

using EpochCallback = std::function<void(const EpochLog&)>;

Checkpoint train(const ds::Dataset& data, const Pipeline& pipe, const TrainConfig& cfg,
                 const Checkpoint* resume = nullptr, const EpochCallback& on_epoch = {});

struct EvalResult {
    double loss = 0.0;
    double rmse_f = 0.0;     // per-component density error
    double rmse_rho = 0.0;
    double rmse_umag = 0.0;
    // ux_true, uy_true, ux_pred, uy_pred per sample; feeds the velocity
    // cutoff estimator unchanged.
    std::vector<std::array<double, 4>> velocity_pairs;
};

EvalResult evaluate(const Pipeline& pipe, const std::vector<double>& params,
                    const ds::Dataset& data);

}  // namespace qlbm::train
