#include "qlbm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "qlbm/rng.hpp"

namespace qlbm::train {

namespace {

// Below this, 1/x guards kick in rather than produce huge or NaN factors.
constexpr double kTiny = 1e-30;

struct DecodedPrediction {
    std::array<double, 9> f{};     // clamped to [0, 1]
    std::array<double, 9> dfdp{};  // d f_k / d p_k; 0 where a guard or the clamp is active
    double rho = 0.0, ux = 0.0, uy = 0.0, umag = 0.0;
};

DecodedPrediction decode_probabilities(const std::vector<double>& p) {
    DecodedPrediction d;
    for (int k = 0; k < 9; ++k) {
        const double raw = 9.0 * std::max(p[k], 0.0);
        if (p[k] < kTiny) continue;  // f = 0, derivative guarded
        const double f = std::sqrt(raw);
        if (f >= 1.0) {
            d.f[k] = 1.0;  // clamp active, flat
        } else {
            d.f[k] = f;
            d.dfdp[k] = 9.0 / (2.0 * f);
        }
    }
    double mx = 0.0, my = 0.0;
    for (int k = 0; k < 9; ++k) {
        d.rho += d.f[k];
        mx += d.f[k] * lattice::EX[k];
        my += d.f[k] * lattice::EY[k];
    }
    if (d.rho > kTiny) {
        d.ux = mx / d.rho;
        d.uy = my / d.rho;
        d.umag = std::hypot(d.ux, d.uy);
    }
    return d;
}

struct TrueMoments {
    double rho = 0.0, umag = 0.0;
};

TrueMoments true_moments(const lattice::Densities& f_post) {
    TrueMoments t;
    double mx = 0.0, my = 0.0;
    for (int k = 0; k < 9; ++k) {
        t.rho += f_post[k];
        mx += f_post[k] * lattice::EX[k];
        my += f_post[k] * lattice::EY[k];
    }
    if (t.rho > kTiny) t.umag = std::hypot(mx / t.rho, my / t.rho);
    return t;
}

double squared_term(const DecodedPrediction& d, const lattice::Densities& f_post) {
    const TrueMoments t = true_moments(f_post);
    double sum_f = 0.0;
    for (int k = 0; k < 9; ++k) {
        const double r = d.f[k] - f_post[k];
        sum_f += r * r;
    }
    const double r_rho = d.rho - t.rho;
    const double r_u = d.umag - t.umag;
    return (sum_f + r_rho * r_rho + r_u * r_u) / 3.0;
}

// dS/dp_k for one sample: residual terms chained through the moments of the
// prediction and through the decode square root.
std::array<double, 9> term_probability_gradient(const DecodedPrediction& d,
                                                const lattice::Densities& f_post) {
    const TrueMoments t = true_moments(f_post);
    const double r_rho = d.rho - t.rho;
    const double r_u = d.umag - t.umag;
    std::array<double, 9> g{};
    for (int k = 0; k < 9; ++k) {
        double dS_df = 2.0 * (d.f[k] - f_post[k]) + 2.0 * r_rho;
        if (d.umag > kTiny && d.rho > kTiny) {
            const double dumag_df = (d.ux * (lattice::EX[k] - d.ux) +
                                     d.uy * (lattice::EY[k] - d.uy)) /
                                    (d.umag * d.rho);
            dS_df += 2.0 * r_u * dumag_df;
        }
        g[k] = (dS_df / 3.0) * d.dfdp[k];
    }
    return g;
}

double stage_lr(const TrainConfig& cfg, int epoch) {
    double lr = cfg.learning_rate;
    for (const LrStage& s : cfg.schedule)
        if (epoch >= s.epoch) lr = s.lr;
    return lr;
}

std::string optimizer_name(Optimizer o) { return o == Optimizer::Adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(const std::string& s) {
    if (s == "adam") return Optimizer::Adam;
    if (s == "sgd") return Optimizer::SGD;
    throw std::runtime_error("checkpoint: unknown optimizer '" + s + "'");
}

std::string boundary_name(ansatz::Boundary b) {
    return b == ansatz::Boundary::Circular ? "circular" : "linear";
}

// Per-sample squared terms and, when grads is non-null, dS/dtheta rows.
// Parallel over samples; every output lands in its own slot so reductions
// done by the caller stay ordered.
void batch_terms(const Pipeline& pipe, const std::vector<double>& params,
                 const std::vector<ds::Sample>& batch, GradientMethod method,
                 std::vector<double>& terms, std::vector<std::vector<double>>* grads) {
    const std::int64_t n = static_cast<std::int64_t>(batch.size());
    terms.assign(batch.size(), 0.0);
    if (grads) grads->assign(batch.size(), {});
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const ds::Sample& s = batch[static_cast<std::size_t>(i)];
        const qc::StateVector psi0 = enc::encode(s.f_pre, pipe.layout);
        const std::vector<double> p =
            qc::run_probabilities(psi0, pipe.circuit, params, pipe.projectors);
        const DecodedPrediction d = decode_probabilities(p);
        terms[static_cast<std::size_t>(i)] = squared_term(d, s.f_post);
        if (!grads) continue;

        const std::array<double, 9> dS_dp = term_probability_gradient(d, s.f_post);
        const auto jac = method == GradientMethod::Adjoint
                             ? qc::probability_jacobian_adjoint(psi0, pipe.circuit, params,
                                                                pipe.projectors)
                             : qc::probability_jacobian_shift(psi0, pipe.circuit, params,
                                                              pipe.projectors);
        std::vector<double>& row = (*grads)[static_cast<std::size_t>(i)];
        row.assign(params.size(), 0.0);
        for (std::size_t j = 0; j < params.size(); ++j) {
            double acc = 0.0;
            for (int k = 0; k < 9; ++k) acc += dS_dp[k] * jac[j][k];
            row[j] = acc;
        }
    }
}

double loss_from_terms(const std::vector<double>& terms) {
    double sum = 0.0;
    for (double t : terms) sum += t;
    return std::sqrt(sum / static_cast<double>(terms.size()));
}

Checkpoint snapshot(const Pipeline& pipe, const std::vector<double>& params,
                    const TrainConfig& cfg, const std::vector<double>& m,
                    const std::vector<double>& v, std::int64_t adam_t, int epoch,
                    const std::vector<EpochLog>& history) {
    Checkpoint ck;
    ck.spec = pipe.spec;
    ck.use_symmetry = pipe.use_symmetry;
    ck.epoch = epoch;
    ck.params = params;
    ck.optimizer = cfg.optimizer;
    ck.adam_m = m;
    ck.adam_v = v;
    ck.adam_t = adam_t;
    ck.history = history;
    return ck;
}

}  // namespace

Pipeline Pipeline::make(const ansatz::AnsatzSpec& spec, bool use_symmetry) {
    spec.validate();
    Pipeline pipe;
    pipe.spec = spec;
    pipe.use_symmetry = use_symmetry;
    if (spec.family == ansatz::Family::SecondOrder)
        pipe.layout = enc::RegisterLayout::second_order(use_symmetry);
    else
        pipe.layout = use_symmetry ? enc::RegisterLayout::with_symmetry()
                                   : enc::RegisterLayout::bare();
    const qc::ParamCircuit inner = ansatz::build(spec, pipe.layout);
    pipe.circuit = use_symmetry ? sym::controlled_symmetry_block(pipe.layout, inner) : inner;
    pipe.projectors = enc::decode_projectors(pipe.layout);
    return pipe;
}

lattice::Densities forward(const Pipeline& pipe, const std::vector<double>& params,
                           const lattice::Densities& f_pre) {
    qc::StateVector psi = enc::encode(f_pre, pipe.layout);
    qc::apply_bound(psi, pipe.circuit, params);
    return enc::decode(psi, pipe.layout);
}

void TrainConfig::validate(std::size_t dataset_size) const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("train config: batch size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (sample_size < 0) throw std::invalid_argument("train config: sample size must be >= 0");
    const std::size_t per_epoch = sample_size == 0 ? dataset_size
                                                   : std::min<std::size_t>(sample_size, dataset_size);
    if (per_epoch == 0) throw std::invalid_argument("train config: empty dataset");
    if (static_cast<std::size_t>(batch_size) > per_epoch)
        throw std::invalid_argument("train config: batch size exceeds the per-epoch sample draw");
    if (!(fd_step > 0.0)) throw std::invalid_argument("train config: fd step must be > 0");
    if (!(init_scale >= 0.0)) throw std::invalid_argument("train config: init scale must be >= 0");
    if (checkpoint_interval < 0)
        throw std::invalid_argument("train config: checkpoint interval must be >= 0");
    if (checkpoint_interval > 0 && checkpoint_path.empty())
        throw std::invalid_argument("train config: periodic checkpoints need a checkpoint path");
    int prev = 0;
    for (const LrStage& s : schedule) {
        if (s.epoch <= prev)
            throw std::invalid_argument("train config: schedule epochs must be ascending");
        if (!(s.lr > 0.0)) throw std::invalid_argument("train config: schedule lr must be > 0");
        prev = s.epoch;
    }
}

double sample_term(const lattice::Densities& predicted, const lattice::Densities& f_post) {
    DecodedPrediction d;
    d.f = predicted;
    for (int k = 0; k < 9; ++k) {
        d.rho += d.f[k];
    }
    double mx = 0.0, my = 0.0;
    for (int k = 0; k < 9; ++k) {
        mx += d.f[k] * lattice::EX[k];
        my += d.f[k] * lattice::EY[k];
    }
    if (d.rho > kTiny) {
        d.ux = mx / d.rho;
        d.uy = my / d.rho;
        d.umag = std::hypot(d.ux, d.uy);
    }
    return squared_term(d, f_post);
}

double loss(const Pipeline& pipe, const std::vector<double>& params,
            const std::vector<ds::Sample>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    std::vector<double> terms;
    batch_terms(pipe, params, batch, GradientMethod::Shift, terms, nullptr);
    return loss_from_terms(terms);
}

std::vector<double> gradient(const Pipeline& pipe, const std::vector<double>& params,
                             const std::vector<ds::Sample>& batch, GradientMethod method,
                             double fd_step) {
    if (batch.empty()) throw std::invalid_argument("gradient: empty batch");
    std::vector<double> g(params.size(), 0.0);

    if (method == GradientMethod::CentralDiff) {
        std::vector<double> shifted = params;
        for (std::size_t j = 0; j < params.size(); ++j) {
            shifted[j] = params[j] + fd_step;
            const double lp = loss(pipe, shifted, batch);
            shifted[j] = params[j] - fd_step;
            const double lm = loss(pipe, shifted, batch);
            shifted[j] = params[j];
            g[j] = (lp - lm) / (2.0 * fd_step);
        }
        return g;
    }

    std::vector<double> terms;
    std::vector<std::vector<double>> rows;
    batch_terms(pipe, params, batch, method, terms, &rows);
    const double l = loss_from_terms(terms);
    if (l < kTiny) return g;  // at the floor the loss is flat in every direction

    for (const std::vector<double>& row : rows)
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += row[j];
    const double scale = 1.0 / (2.0 * l * static_cast<double>(batch.size()));
    for (double& x : g) x *= scale;
    return g;
}

Checkpoint train(const ds::Dataset& data, const Pipeline& pipe, const TrainConfig& cfg,
                 const Checkpoint* resume, const EpochCallback& on_epoch) {
    cfg.validate(data.size());

    std::vector<double> params;
    std::vector<double> m, v;
    std::int64_t adam_t = 0;
    int epoch0 = 0;
    std::vector<EpochLog> history;
    std::int64_t processed = 0;

    if (resume) {
        if (ansatz::canonical_name(resume->spec) != ansatz::canonical_name(pipe.spec) ||
            resume->spec.layers != pipe.spec.layers ||
            resume->spec.repetitions != pipe.spec.repetitions ||
            resume->spec.boundary != pipe.spec.boundary ||
            resume->use_symmetry != pipe.use_symmetry)
            throw std::invalid_argument(
                "train: checkpoint was produced by a different model configuration");
        if (resume->params.size() != static_cast<std::size_t>(pipe.n_params()))
            throw std::invalid_argument("train: checkpoint parameter count mismatch");
        params = resume->params;
        m = resume->adam_m;
        v = resume->adam_v;
        adam_t = resume->adam_t;
        epoch0 = resume->epoch;
        history = resume->history;
        if (!history.empty()) processed = history.back().processed;
    } else {
        params.resize(static_cast<std::size_t>(pipe.n_params()));
        std::mt19937_64 gen = rng::substream(cfg.seed, 0);
        std::uniform_real_distribution<double> init(-cfg.init_scale, cfg.init_scale);
        for (double& p : params) p = init(gen);
    }
    if (m.size() != params.size()) m.assign(params.size(), 0.0);
    if (v.size() != params.size()) v.assign(params.size(), 0.0);

    const std::size_t per_epoch =
        cfg.sample_size == 0 ? data.size() : std::min<std::size_t>(cfg.sample_size, data.size());

    std::vector<std::size_t> order(data.size());
    std::vector<ds::Sample> batch;

    for (int epoch = epoch0 + 1; epoch <= epoch0 + cfg.epochs; ++epoch) {
        const double lr = stage_lr(cfg, epoch);

        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 gen = rng::substream(cfg.seed, 0x1000u + static_cast<std::uint64_t>(epoch));
        rng::shuffle(order, gen);

        double epoch_sq_sum = 0.0;
        std::size_t epoch_count = 0;

        for (std::size_t start = 0; start < per_epoch; start += cfg.batch_size) {
            const std::size_t stop = std::min(per_epoch, start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);

            std::vector<double> terms;
            batch_terms(pipe, params, batch, cfg.gradient, terms, nullptr);
            const double batch_loss = loss_from_terms(terms);
            if (!std::isfinite(batch_loss))
                throw TrainingDiverged(
                    "train: non-finite loss at epoch " + std::to_string(epoch),
                    snapshot(pipe, params, cfg, m, v, adam_t, epoch - 1, history));
            for (double t : terms) epoch_sq_sum += t;
            epoch_count += terms.size();

            const std::vector<double> g =
                gradient(pipe, params, batch, cfg.gradient, cfg.fd_step);

            if (cfg.optimizer == Optimizer::SGD) {
                for (std::size_t j = 0; j < params.size(); ++j) params[j] -= lr * g[j];
            } else {
                ++adam_t;
                const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
                const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
                for (std::size_t j = 0; j < params.size(); ++j) {
                    m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g[j];
                    v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g[j] * g[j];
                    params[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.adam_eps);
                }
            }
        }

        processed += static_cast<std::int64_t>(epoch_count);
        EpochLog log{epoch, processed,
                     std::sqrt(epoch_sq_sum / static_cast<double>(epoch_count)), lr};
        history.push_back(log);
        if (on_epoch) on_epoch(log);

        if (cfg.checkpoint_interval > 0 && (epoch - epoch0) % cfg.checkpoint_interval == 0)
            write_checkpoint(cfg.checkpoint_path,
                             snapshot(pipe, params, cfg, m, v, adam_t, epoch, history));
    }

    return snapshot(pipe, params, cfg, m, v, adam_t, epoch0 + cfg.epochs, history);
}

EvalResult evaluate(const Pipeline& pipe, const std::vector<double>& params,
                    const ds::Dataset& data) {
    if (data.empty()) throw std::invalid_argument("evaluate: empty dataset");
    const std::int64_t n = static_cast<std::int64_t>(data.size());
    std::vector<double> terms(data.size());
    std::vector<double> sq_f(data.size()), sq_rho(data.size()), sq_u(data.size());
    std::vector<std::array<double, 4>> pairs(data.size());

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const ds::Sample& s = data[static_cast<std::size_t>(i)];
        const qc::StateVector psi0 = enc::encode(s.f_pre, pipe.layout);
        const std::vector<double> p =
            qc::run_probabilities(psi0, pipe.circuit, params, pipe.projectors);
        const DecodedPrediction d = decode_probabilities(p);
        terms[static_cast<std::size_t>(i)] = squared_term(d, s.f_post);

        double acc = 0.0;
        for (int k = 0; k < 9; ++k) {
            const double r = d.f[k] - s.f_post[k];
            acc += r * r;
        }
        sq_f[static_cast<std::size_t>(i)] = acc / 9.0;

        const lattice::Moments t = lattice::moments(s.f_post);
        const double r_rho = d.rho - t.rho;
        const double r_u = d.umag - std::hypot(t.ux, t.uy);
        sq_rho[static_cast<std::size_t>(i)] = r_rho * r_rho;
        sq_u[static_cast<std::size_t>(i)] = r_u * r_u;
        pairs[static_cast<std::size_t>(i)] = {t.ux, t.uy, d.ux, d.uy};
    }

    EvalResult res;
    res.loss = loss_from_terms(terms);
    double af = 0.0, ar = 0.0, au = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        af += sq_f[i];
        ar += sq_rho[i];
        au += sq_u[i];
    }
    res.rmse_f = std::sqrt(af / static_cast<double>(data.size()));
    res.rmse_rho = std::sqrt(ar / static_cast<double>(data.size()));
    res.rmse_umag = std::sqrt(au / static_cast<double>(data.size()));
    res.velocity_pairs = std::move(pairs);
    return res;
}

void write_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    out << "qlbm checkpoint v1\n";
    out << "ansatz = " << ansatz::canonical_name(ck.spec) << "\n";
    out << "layers = " << ck.spec.layers << "\n";
    out << "repetitions = " << ck.spec.repetitions << "\n";
    out << "boundary = " << boundary_name(ck.spec.boundary) << "\n";
    out << "symmetry = " << (ck.use_symmetry ? 1 : 0) << "\n";
    out << "optimizer = " << optimizer_name(ck.optimizer) << "\n";
    out << "epoch = " << ck.epoch << "\n";
    out << "adam_t = " << ck.adam_t << "\n";
    out << std::setprecision(17);
    out << "params " << ck.params.size() << "\n";
    for (double p : ck.params) out << p << "\n";
    out << "adam_m " << ck.adam_m.size() << "\n";
    for (double x : ck.adam_m) out << x << "\n";
    out << "adam_v " << ck.adam_v.size() << "\n";
    for (double x : ck.adam_v) out << x << "\n";
    out << "history " << ck.history.size() << "\n";
    for (const EpochLog& e : ck.history)
        out << e.epoch << "," << e.processed << "," << e.loss << "," << e.lr << "\n";
    out << "end\n";
    if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

namespace {

std::string next_line(std::istream& in, int& lineno) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("checkpoint: unexpected end of file");
    ++lineno;
    return line;
}

std::string keyed_value(const std::string& line, const std::string& key, int lineno) {
    const std::string prefix = key + " = ";
    if (line.rfind(prefix, 0) != 0)
        throw std::runtime_error("checkpoint: line " + std::to_string(lineno) + ": expected '" +
                                 key + " = ...'");
    return line.substr(prefix.size());
}

std::size_t section_count(const std::string& line, const std::string& name, int lineno) {
    std::istringstream ss(line);
    std::string tag;
    long long count = -1;
    ss >> tag >> count;
    if (tag != name || count < 0)
        throw std::runtime_error("checkpoint: line " + std::to_string(lineno) +
                                 ": expected section '" + name + " <count>'");
    return static_cast<std::size_t>(count);
}

std::vector<double> read_values(std::istream& in, std::size_t count, int& lineno) {
    std::vector<double> vals(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string line = next_line(in, lineno);
        try {
            std::size_t used = 0;
            vals[i] = std::stod(line, &used);
            if (used != line.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::runtime_error("checkpoint: line " + std::to_string(lineno) +
                                     ": malformed number '" + line + "'");
        }
    }
    return vals;
}

}  // namespace

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
    int lineno = 0;

    if (next_line(in, lineno) != "qlbm checkpoint v1")
        throw std::runtime_error("checkpoint: " + path + ": unrecognized header");

    Checkpoint ck;
    ck.spec = ansatz::parse_name(keyed_value(next_line(in, lineno), "ansatz", lineno));
    ck.spec.layers = std::stoi(keyed_value(next_line(in, lineno), "layers", lineno));
    ck.spec.repetitions = std::stoi(keyed_value(next_line(in, lineno), "repetitions", lineno));
    const std::string boundary = keyed_value(next_line(in, lineno), "boundary", lineno);
    if (boundary == "circular")
        ck.spec.boundary = ansatz::Boundary::Circular;
    else if (boundary == "linear")
        ck.spec.boundary = ansatz::Boundary::Linear;
    else
        throw std::runtime_error("checkpoint: unknown boundary '" + boundary + "'");
    ck.use_symmetry = std::stoi(keyed_value(next_line(in, lineno), "symmetry", lineno)) != 0;
    ck.optimizer = parse_optimizer(keyed_value(next_line(in, lineno), "optimizer", lineno));
    ck.epoch = std::stoi(keyed_value(next_line(in, lineno), "epoch", lineno));
    ck.adam_t = std::stoll(keyed_value(next_line(in, lineno), "adam_t", lineno));

    ck.params = read_values(in, section_count(next_line(in, lineno), "params", lineno), lineno);
    ck.adam_m = read_values(in, section_count(next_line(in, lineno), "adam_m", lineno), lineno);
    ck.adam_v = read_values(in, section_count(next_line(in, lineno), "adam_v", lineno), lineno);

    const std::size_t n_hist = section_count(next_line(in, lineno), "history", lineno);
    ck.history.reserve(n_hist);
    for (std::size_t i = 0; i < n_hist; ++i) {
        const std::string line = next_line(in, lineno);
        EpochLog e;
        char c1 = 0, c2 = 0, c3 = 0;
        std::istringstream ss(line);
        ss >> e.epoch >> c1 >> e.processed >> c2 >> e.loss >> c3 >> e.lr;
        if (!ss || c1 != ',' || c2 != ',' || c3 != ',')
            throw std::runtime_error("checkpoint: line " + std::to_string(lineno) +
                                     ": malformed history row");
        ck.history.push_back(e);
    }
    if (next_line(in, lineno) != "end")
        throw std::runtime_error("checkpoint: " + path + ": missing end marker");

    ck.spec.validate();
    if (ck.params.size() != static_cast<std::size_t>(ansatz::parameter_count(
                                ck.spec, enc::kIndexQubits)))
        throw std::runtime_error("checkpoint: " + path +
                                 ": parameter count does not match the declared model");
    return ck;
}

}  // namespace qlbm::train
