// Command-line front end: dataset generation, circuit training, checkpoint
// evaluation, cavity runs, and the error-model/complexity reports. Every
// subcommand works inside a run directory (timestamp + seed unless
// overridden) and leaves a manifest there describing what ran.
//
// Exit codes: 0 success, 1 invalid configuration, 2 the computation itself
// diverged (non-finite loss, diverging cavity), 3 file I/O trouble. Hitting
// the step limit in a cavity run is a completed run, not an error.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "qlbm/analysis.hpp"
#include "qlbm/ansatz.hpp"
#include "qlbm/dataset.hpp"
#include "qlbm/lbm_solver.hpp"
#include "qlbm/run_manifest.hpp"
#include "qlbm/training.hpp"

namespace {

using namespace qlbm;

struct RunContext {
    std::string dir;
    manifest::RunManifest m;
    std::chrono::steady_clock::time_point t0;
    bool open = false;

    void start() {
        std::filesystem::create_directories(dir);
        m.started_at = manifest::utc_iso8601();
        t0 = std::chrono::steady_clock::now();
        open = true;
        manifest::write_manifest(dir + "/manifest.txt", m);
    }

    void add_output(const std::string& path) { m.outputs.push_back(path); }

    void add_config(const std::string& key, const std::string& value) {
        m.config.emplace_back(key, value);
    }
    template <typename T>
    void add_config(const std::string& key, const T& value) {
        std::ostringstream s;
        s << std::setprecision(17) << value;
        m.config.emplace_back(key, s.str());
    }

    // First finish wins; later calls are no-ops so a command can record a
    // specific failure status before the generic wrapper closes up.
    void finish(const std::string& status) {
        if (!open) return;
        open = false;
        m.status = status;
        m.finished_at = manifest::utc_iso8601();
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest::write_manifest(dir + "/manifest.txt", m);
    }
};

RunContext make_context(const std::string& command, const std::string& dir_flag,
                        std::uint64_t seed, const std::string& invocation) {
    RunContext ctx;
    ctx.dir = dir_flag.empty()
                  ? "runs/" + manifest::utc_timestamp_compact() + "-seed" + std::to_string(seed)
                  : dir_flag;
    ctx.m.command = command;
    ctx.m.invocation = invocation;
    ctx.m.seed = seed;
    return ctx;
}

// Paths from --out style flags land in the run directory unless the caller
// gave an explicit location.
std::string in_run_dir(const RunContext& ctx, const std::string& name) {
    if (name.find('/') != std::string::npos) return name;
    return ctx.dir + "/" + name;
}

int execute(RunContext& ctx, const std::function<int()>& body) {
    try {
        const int code = body();
        ctx.finish(code == 0 ? "ok" : "failed");
        return code;
    } catch (const std::logic_error& e) {  // invalid_argument, domain_error
        std::cerr << "error: " << e.what() << '\n';
        ctx.finish(std::string("failed: ") + e.what());
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        ctx.finish(std::string("failed: ") + e.what());
        return 3;
    }
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

std::string join_args(int argc, char** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (i) out += ' ';
        out += argv[i];
    }
    return out;
}

const char* outcome_name(lbm::Outcome o) {
    switch (o) {
        case lbm::Outcome::Converged: return "converged";
        case lbm::Outcome::MaxSteps: return "max-steps";
        case lbm::Outcome::Diverged: return "diverged";
    }
    return "unknown";
}

void write_history_csv(const std::string& path, const std::vector<train::EpochLog>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << std::setprecision(17) << "epoch,processed,loss,lr\n";
    for (const train::EpochLog& row : history)
        out << row.epoch << ',' << row.processed << ',' << row.loss << ',' << row.lr << '\n';
    if (!out.good()) throw std::runtime_error("failed writing " + path);
}

void write_velocity_pairs_csv(const std::string& path,
                              const std::vector<std::array<double, 4>>& pairs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << std::setprecision(17) << "ux_true,uy_true,ux_pred,uy_pred\n";
    for (const auto& row : pairs)
        out << row[0] << ',' << row[1] << ',' << row[2] << ',' << row[3] << '\n';
    if (!out.good()) throw std::runtime_error("failed writing " + path);
}

std::vector<std::array<double, 4>> read_velocity_pairs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<std::array<double, 4>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.find("ux_true") != std::string::npos) continue;
        std::array<double, 4> row{};
        std::istringstream fields(line);
        std::string field;
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(fields, field, ','))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": expected 4 comma-separated values");
            row[static_cast<std::size_t>(i)] = std::stod(field);
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<train::LrStage> parse_lr_stages(const std::vector<std::string>& specs) {
    std::vector<train::LrStage> stages;
    for (const std::string& s : specs) {
        const auto colon = s.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= s.size())
            throw std::invalid_argument("--lr-stage wants epoch:lr, got '" + s + "'");
        train::LrStage stage;
        try {
            stage.epoch = std::stoi(s.substr(0, colon));
            stage.lr = std::stod(s.substr(colon + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("--lr-stage wants epoch:lr, got '" + s + "'");
        }
        stages.push_back(stage);
    }
    return stages;
}

// ---------------------------------------------------------------- gen-data

struct GenDataOpts {
    ds::DatasetConfig cfg;
    std::string out = "dataset.bin";
    bool csv = false;
};

int cmd_gen_data(const GenDataOpts& opt, const std::string& dir_flag,
                 const std::string& invocation) {
    opt.cfg.validate();
    RunContext ctx = make_context("gen-data", dir_flag, opt.cfg.seed, invocation);
    ctx.add_config("n_samples", opt.cfg.n_samples);
    ctx.add_config("seed", opt.cfg.seed);
    ctx.add_config("u_max", opt.cfg.u_max);
    ctx.add_config("rho_min", opt.cfg.rho_min);
    ctx.add_config("rho_max", opt.cfg.rho_max);
    ctx.add_config("sigma_min", opt.cfg.sigma_min);
    ctx.add_config("sigma_max", opt.cfg.sigma_max);
    ctx.add_config("tau_min", opt.cfg.tau_min);
    ctx.add_config("tau_max", opt.cfg.tau_max);
    ctx.start();
    return execute(ctx, [&]() {
        const ds::Dataset data = ds::generate_dataset(opt.cfg);
        const std::string path = in_run_dir(ctx, opt.out);
        ds::write_dataset(path, data);
        ctx.add_output(path);
        if (opt.csv) {
            const std::string csv_path = in_run_dir(ctx, "dataset.csv");
            ds::write_dataset_csv(csv_path, data);
            ctx.add_output(csv_path);
        }
        std::cout << "wrote " << data.size() << " samples to " << path << '\n';
        return 0;
    });
}

// ------------------------------------------------------------------- train

struct TrainOpts {
    std::string data;
    std::string ansatz_name = "sel-cry-inv-sel";
    int layers = 1;
    int repetitions = 1;
    ansatz::Boundary boundary = ansatz::Boundary::Circular;
    bool symmetry = false;
    std::vector<std::string> lr_stages;
    std::string resume;
    train::TrainConfig cfg;
};

int cmd_train(const TrainOpts& opt, const std::string& dir_flag, const std::string& invocation) {
    ansatz::AnsatzSpec spec = ansatz::parse_name(opt.ansatz_name);
    spec.layers = opt.layers;
    spec.repetitions = opt.repetitions;
    spec.boundary = opt.boundary;
    spec.validate();

    train::TrainConfig cfg = opt.cfg;
    cfg.schedule = parse_lr_stages(opt.lr_stages);

    RunContext ctx = make_context("train", dir_flag, cfg.seed, invocation);
    ctx.add_config("data", opt.data);
    ctx.add_config("ansatz", ansatz::canonical_name(spec));
    ctx.add_config("layers", spec.layers);
    ctx.add_config("repetitions", spec.repetitions);
    ctx.add_config("boundary",
                   spec.boundary == ansatz::Boundary::Circular ? "circular" : "linear");
    ctx.add_config("symmetry", opt.symmetry ? "true" : "false");
    ctx.add_config("learning_rate", cfg.learning_rate);
    for (const train::LrStage& s : cfg.schedule)
        ctx.add_config("lr_stage", std::to_string(s.epoch) + ":" + std::to_string(s.lr));
    ctx.add_config("batch_size", cfg.batch_size);
    ctx.add_config("sample_size", cfg.sample_size);
    ctx.add_config("epochs", cfg.epochs);
    ctx.add_config("optimizer", cfg.optimizer == train::Optimizer::Adam ? "adam" : "sgd");
    ctx.add_config("gradient", cfg.gradient == train::GradientMethod::Shift ? "shift"
                               : cfg.gradient == train::GradientMethod::Adjoint
                                   ? "adjoint"
                                   : "central-diff");
    ctx.add_config("fd_step", cfg.fd_step);
    ctx.add_config("seed", cfg.seed);
    ctx.add_config("init_scale", cfg.init_scale);
    ctx.add_config("checkpoint_interval", cfg.checkpoint_interval);
    if (!opt.resume.empty()) ctx.add_config("resume", opt.resume);
    ctx.start();

    return execute(ctx, [&]() {
        const ds::Dataset data = ds::read_dataset(opt.data);
        cfg.checkpoint_path = ctx.dir + "/checkpoint.txt";
        cfg.validate(data.size());

        const train::Pipeline pipe = train::Pipeline::make(spec, opt.symmetry);
        std::cout << "circuit: " << ansatz::canonical_name(spec) << ", "
                  << pipe.layout.n_qubits << " qubits, " << pipe.n_params() << " parameters\n";

        train::Checkpoint resume_ck;
        const train::Checkpoint* resume = nullptr;
        if (!opt.resume.empty()) {
            resume_ck = train::read_checkpoint(opt.resume);
            resume = &resume_ck;
        }

        const auto on_epoch = [](const train::EpochLog& row) {
            std::cout << "epoch " << row.epoch << "  loss " << std::setprecision(8) << row.loss
                      << "  lr " << row.lr << '\n';
        };

        train::Checkpoint ck;
        try {
            ck = train::train(data, pipe, cfg, resume, on_epoch);
        } catch (const train::TrainingDiverged& e) {
            const std::string diag = ctx.dir + "/diverged_checkpoint.txt";
            train::write_checkpoint(diag, e.state);
            write_history_csv(ctx.dir + "/training_log.csv", e.state.history);
            ctx.add_output(diag);
            std::cerr << "error: " << e.what() << " (state saved to " << diag << ")\n";
            ctx.finish(std::string("failed: ") + e.what());
            return 2;
        }

        train::write_checkpoint(cfg.checkpoint_path, ck);
        ctx.add_output(cfg.checkpoint_path);
        const std::string log_path = ctx.dir + "/training_log.csv";
        write_history_csv(log_path, ck.history);
        ctx.add_output(log_path);
        if (!ck.history.empty())
            std::cout << "final loss " << std::setprecision(10) << ck.history.back().loss
                      << " after epoch " << ck.history.back().epoch << '\n';
        std::cout << "checkpoint written to " << cfg.checkpoint_path << '\n';
        return 0;
    });
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
    std::string checkpoint;
    std::string data;
};

int cmd_eval(const EvalOpts& opt, const std::string& dir_flag, const std::string& invocation) {
    RunContext ctx = make_context("eval", dir_flag, 0, invocation);
    ctx.add_config("checkpoint", opt.checkpoint);
    ctx.add_config("data", opt.data);
    ctx.start();
    return execute(ctx, [&]() {
        const train::Checkpoint ck = train::read_checkpoint(opt.checkpoint);
        const ds::Dataset data = ds::read_dataset(opt.data);
        const train::Pipeline pipe = train::Pipeline::make(ck.spec, ck.use_symmetry);
        const train::EvalResult res = train::evaluate(pipe, ck.params, data);

        std::ostringstream report;
        report << std::setprecision(10);
        report << "samples = " << data.size() << '\n';
        report << "loss = " << res.loss << '\n';
        report << "rmse_f = " << res.rmse_f << '\n';
        report << "rmse_rho = " << res.rmse_rho << '\n';
        report << "rmse_umag = " << res.rmse_umag << '\n';
        if (res.velocity_pairs.size() >= 100) {
            const analysis::CutoffStats stats = analysis::velocity_cutoff(res.velocity_pairs);
            report << "velocity_error_sigma_x = " << stats.sigma_x << '\n';
            report << "velocity_error_sigma_y = " << stats.sigma_y << '\n';
            report << "velocity_error_combined = " << stats.combined << '\n';
        } else {
            report << "velocity_error_combined = n/a (needs 100+ samples)\n";
        }

        const std::string pairs_path = ctx.dir + "/velocity_pairs.csv";
        write_velocity_pairs_csv(pairs_path, res.velocity_pairs);
        ctx.add_output(pairs_path);
        const std::string report_path = ctx.dir + "/eval.txt";
        std::ofstream out(report_path);
        if (!out) throw std::runtime_error("cannot open " + report_path + " for writing");
        out << report.str();
        if (!out.good()) throw std::runtime_error("failed writing " + report_path);
        ctx.add_output(report_path);

        std::cout << report.str();
        return 0;
    });
}

// ------------------------------------------------------------------ cavity

struct CavityOpts {
    std::string preset;
    lbm::CavityConfig cfg;
    std::string checkpoint;
    // set while parsing: which flags were given explicitly
    bool has_n = false, has_mach = false, has_reynolds = false;
};

int cmd_cavity(const CavityOpts& opt, const std::string& dir_flag,
               const std::string& invocation) {
    lbm::CavityConfig cfg = opt.cfg;
    if (opt.preset == "re10") {
        if (!opt.has_n) cfg.n = 32;
        if (!opt.has_mach) cfg.mach = 0.1;
        if (!opt.has_reynolds) cfg.reynolds = 10.0;
    } else if (opt.preset == "re40") {
        if (!opt.has_n) cfg.n = 256;
        if (!opt.has_mach) cfg.mach = 0.1;
        if (!opt.has_reynolds) cfg.reynolds = 40.0;
    }
    cfg.validate();
    if (cfg.mode != lbm::CollisionMode::Classical && opt.checkpoint.empty())
        throw std::invalid_argument("quantum and hybrid modes need --checkpoint");

    RunContext ctx = make_context("cavity", dir_flag, 0, invocation);
    if (!opt.preset.empty()) ctx.add_config("preset", opt.preset);
    ctx.add_config("n", cfg.n);
    ctx.add_config("mach", cfg.mach);
    ctx.add_config("reynolds", cfg.reynolds);
    ctx.add_config("max_steps", cfg.max_steps);
    ctx.add_config("residual_interval", cfg.residual_interval);
    ctx.add_config("convergence_tol", cfg.convergence_tol);
    ctx.add_config("cutoff", cfg.cutoff);
    ctx.add_config("mode", cfg.mode == lbm::CollisionMode::Classical  ? "classical"
                           : cfg.mode == lbm::CollisionMode::Quantum ? "quantum"
                                                                     : "hybrid");
    if (!opt.checkpoint.empty()) ctx.add_config("checkpoint", opt.checkpoint);
    ctx.start();

    return execute(ctx, [&]() {
        train::Checkpoint ck;
        train::Pipeline pipe;
        const train::Pipeline* pipe_ptr = nullptr;
        const std::vector<double>* params_ptr = nullptr;
        if (cfg.mode != lbm::CollisionMode::Classical) {
            ck = train::read_checkpoint(opt.checkpoint);
            pipe = train::Pipeline::make(ck.spec, ck.use_symmetry);
            pipe_ptr = &pipe;
            params_ptr = &ck.params;
        }

        std::cout << "cavity " << cfg.n << "x" << cfg.n << ", Re " << cfg.reynolds << ", Ma "
                  << cfg.mach << ", tau/dt "
                  << std::setprecision(10) << lbm::tau_from(cfg.reynolds, cfg.mach, cfg.n)
                  << '\n';
        const lbm::CavityResult result = lbm::run_cavity(cfg, pipe_ptr, params_ptr);
        const lbm::CavityReport& rep = result.report;

        const std::string report_path = ctx.dir + "/report.csv";
        lbm::write_report_csv(report_path, rep);
        ctx.add_output(report_path);
        const std::string speed_path = ctx.dir + "/speed.csv";
        lbm::write_speed_csv(speed_path, result.field, cfg.lid_speed());
        ctx.add_output(speed_path);
        const std::string ux_path = ctx.dir + "/ux.csv";
        lbm::write_component_csv(ux_path, result.field, 0);
        ctx.add_output(ux_path);
        const std::string uy_path = ctx.dir + "/uy.csv";
        lbm::write_component_csv(uy_path, result.field, 1);
        ctx.add_output(uy_path);

        std::cout << std::setprecision(10);
        std::cout << "outcome " << outcome_name(rep.outcome) << " after " << rep.steps
                  << " steps\n";
        std::cout << "final residual " << rep.final_residual << '\n';
        std::cout << "mass " << rep.mass_initial << " -> " << rep.mass_final
                  << " (lid exchange " << rep.lid_exchange << ", interior drift "
                  << rep.interior_drift << ")\n";
        if (rep.outcome == lbm::Outcome::Diverged) {
            std::cerr << "error: " << rep.diagnostic << '\n';
            ctx.finish("failed: " + rep.diagnostic);
            return 2;
        }
        return 0;
    });
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOpts {
    bool complexity = false;
    bool a_range = false;
    bool growth = false;
    bool error_curve = false;
    std::string cutoff_from;
    analysis::ErrorModelParams params;
    bool has_rho_ref = false;
    double threshold = 1e-2;
    long t_limit = 500;
    double grid_points = 1024.0;
    double time_steps = 1000.0;
};

int cmd_analyze(const AnalyzeOpts& opt, const std::string& dir_flag,
                const std::string& invocation) {
    opt.params.validate();
    const bool all = !opt.complexity && !opt.a_range && !opt.growth && !opt.error_curve &&
                     opt.cutoff_from.empty();

    RunContext ctx = make_context("analyze", dir_flag, 0, invocation);
    ctx.add_config("dt_over_tau", opt.params.dt_over_tau);
    ctx.add_config("mach", opt.params.mach);
    ctx.add_config("q", opt.params.q);
    ctx.add_config("rho_ref", opt.params.rho_ref);
    ctx.add_config("w_ref", opt.params.w_ref);
    ctx.add_config("b1", opt.params.b1);
    ctx.add_config("b2", opt.params.b2);
    ctx.add_config("threshold", opt.threshold);
    ctx.start();

    return execute(ctx, [&]() {
        std::ostringstream report;
        report << std::setprecision(10);

        if (all || opt.complexity) {
            report << "[complexity]\n";
            for (int d = 1; d <= 3; ++d) {
                const analysis::ComplexityEstimate est = analysis::collision_complexity(d);
                report << "collision d=" << d << ": " << est.qubits << " qubits, " << est.gates
                       << " gates\n";
            }
            report << analysis::full_algorithm_note(2, opt.grid_points, opt.time_steps) << '\n';
        }

        if (all || opt.a_range) {
            // Unless overridden, the range uses the top of the sampled
            // density band, where the growth factor is largest.
            const double rho = opt.has_rho_ref ? opt.params.rho_ref : 1.05;
            const analysis::Interval range =
                analysis::a_subunit_range(opt.params.mach, opt.params.q, opt.params.w_ref, rho);
            report << "[a_subunit_range]\n";
            report << "rho_ref = " << rho << ", mach = " << opt.params.mach
                   << ", w_ref = " << opt.params.w_ref << '\n';
            report << "dt_over_tau in [" << range.lo << ", " << std::setprecision(7) << range.hi
                   << std::setprecision(10) << "] keeps the growth factor below 1\n";
        }

        if (all || opt.growth) {
            const analysis::GrowthReport g = analysis::growth_report(opt.params, opt.threshold);
            report << "[error_growth]\n";
            report << "assumptions: dt_over_tau = " << g.params.dt_over_tau
                   << ", mach = " << g.params.mach << ", rho_ref = " << g.params.rho_ref
                   << ", w_ref = " << g.params.w_ref << ", b1 = " << g.params.b1
                   << ", b2 = " << g.params.b2 << '\n';
            report << "A = " << g.coeff.a << ", B = " << g.coeff.b << ", threshold sigma = "
                   << g.threshold << '\n';
            const auto steps_text = [](long t) {
                return t == analysis::kNever ? std::string("never") : std::to_string(t);
            };
            report << "steps to threshold at computed A: " << steps_text(g.t_exponential)
                   << '\n';
            report << "steps to threshold with A pinned to 1 (linear accumulation): "
                   << steps_text(g.t_marginal) << '\n';
        }

        if (opt.error_curve) {
            const std::string curve_path = ctx.dir + "/sigma_curve.csv";
            std::ofstream out(curve_path);
            if (!out) throw std::runtime_error("cannot open " + curve_path + " for writing");
            out << std::setprecision(17) << "t,sigma\n";
            for (long t = 0; t <= opt.t_limit; ++t)
                out << t << ',' << std::sqrt(analysis::error_variance(t, opt.params)) << '\n';
            if (!out.good()) throw std::runtime_error("failed writing " + curve_path);
            ctx.add_output(curve_path);
            report << "[error_curve]\nsigma(t) for t <= " << opt.t_limit << " written to "
                   << curve_path << '\n';
        }

        if (!opt.cutoff_from.empty()) {
            const auto pairs = read_velocity_pairs_csv(opt.cutoff_from);
            const analysis::CutoffStats stats = analysis::velocity_cutoff(pairs);
            report << "[velocity_cutoff]\n";
            report << "samples = " << pairs.size() << '\n';
            report << "sigma_x = " << stats.sigma_x << '\n';
            report << "sigma_y = " << stats.sigma_y << '\n';
            report << "combined = " << stats.combined << '\n';
        }

        const std::string report_path = ctx.dir + "/analysis.txt";
        std::ofstream out(report_path);
        if (!out) throw std::runtime_error("cannot open " + report_path + " for writing");
        out << report.str();
        if (!out.good()) throw std::runtime_error("failed writing " + report_path);
        ctx.add_output(report_path);

        std::cout << report.str();
        return 0;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Variational-circuit collision operator toolkit: dataset generation, training, "
        "evaluation, lid-driven cavity runs, and error/complexity reports"};
    app.require_subcommand(1);
    app.set_version_flag("--version", manifest::kToolVersion);
    app.set_config("--config", "", "Key = value file with defaults; flags win");

    int threads = 0;
    app.add_option("--threads", threads,
                   "Worker thread cap (0 = library default; any value is bit-reproducible)");
    std::string run_dir;
    app.add_option("--run-dir", run_dir, "Output directory (default runs/<timestamp>-seed<seed>)");

    const std::string invocation = join_args(argc, argv);

    // gen-data
    GenDataOpts gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "Generate a pre/post collision dataset");
    gen_cmd->fallthrough();
    gen_cmd->add_option("--n", gen.cfg.n_samples, "Sample count")->capture_default_str();
    gen_cmd->add_option("--seed", gen.cfg.seed, "Base seed")->capture_default_str();
    gen_cmd->add_option("--u-max", gen.cfg.u_max, "Speed upper bound")->capture_default_str();
    gen_cmd->add_option("--rho-min", gen.cfg.rho_min, "Density lower bound")->capture_default_str();
    gen_cmd->add_option("--rho-max", gen.cfg.rho_max, "Density upper bound")->capture_default_str();
    gen_cmd->add_option("--sigma-min", gen.cfg.sigma_min, "Noise level lower bound")
        ->capture_default_str();
    gen_cmd->add_option("--sigma-max", gen.cfg.sigma_max, "Noise level upper bound")
        ->capture_default_str();
    gen_cmd->add_option("--tau-min", gen.cfg.tau_min, "Relaxation time lower bound")
        ->capture_default_str();
    gen_cmd->add_option("--tau-max", gen.cfg.tau_max, "Relaxation time upper bound")
        ->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "Dataset file name")->capture_default_str();
    gen_cmd->add_flag("--csv", gen.csv, "Also write a CSV copy");

    // train
    TrainOpts tr;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a collision circuit");
    train_cmd->fallthrough();
    train_cmd->add_option("--data", tr.data, "Dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--ansatz", tr.ansatz_name,
                          "Variant name (strong, strong-cry, strong-cu3, scrambler, "
                          "sel-cry-inv-sel, bel-cry-rep, 2nd-sel-cu3-inv-sel, ...)")
        ->capture_default_str();
    train_cmd->add_option("--layers", tr.layers, "Entangling layers per block")
        ->capture_default_str();
    train_cmd->add_option("--repetitions", tr.repetitions, "Whole-circuit repetitions")
        ->capture_default_str();
    const std::map<std::string, ansatz::Boundary> boundary_map{
        {"circular", ansatz::Boundary::Circular}, {"linear", ansatz::Boundary::Linear}};
    train_cmd->add_option("--boundary", tr.boundary, "CNOT web wrap-around")
        ->transform(CLI::CheckedTransformer(boundary_map, CLI::ignore_case))
        ->capture_default_str();
    train_cmd->add_flag("--symmetry", tr.symmetry, "Wrap the circuit in the symmetry average");
    train_cmd->add_option("--lr", tr.cfg.learning_rate, "Learning rate")->capture_default_str();
    train_cmd->add_option("--lr-stage", tr.lr_stages,
                          "Staged rate change as epoch:lr, repeatable, ascending epochs");
    train_cmd->add_option("--batch-size", tr.cfg.batch_size, "Samples per update")
        ->capture_default_str();
    train_cmd->add_option("--sample-size", tr.cfg.sample_size,
                          "Samples drawn per epoch without replacement (0 = all)")
        ->capture_default_str();
    train_cmd->add_option("--epochs", tr.cfg.epochs, "Epochs to run")->capture_default_str();
    const std::map<std::string, train::Optimizer> opt_map{{"adam", train::Optimizer::Adam},
                                                          {"sgd", train::Optimizer::SGD}};
    train_cmd->add_option("--optimizer", tr.cfg.optimizer, "Parameter update rule")
        ->transform(CLI::CheckedTransformer(opt_map, CLI::ignore_case))
        ->capture_default_str();
    const std::map<std::string, train::GradientMethod> grad_map{
        {"shift", train::GradientMethod::Shift},
        {"central-diff", train::GradientMethod::CentralDiff},
        {"adjoint", train::GradientMethod::Adjoint}};
    train_cmd->add_option("--gradient", tr.cfg.gradient, "Gradient method")
        ->transform(CLI::CheckedTransformer(grad_map, CLI::ignore_case))
        ->capture_default_str();
    train_cmd->add_option("--fd-step", tr.cfg.fd_step, "Finite-difference step")
        ->capture_default_str();
    train_cmd->add_option("--seed", tr.cfg.seed, "Base seed")->capture_default_str();
    train_cmd->add_option("--init-scale", tr.cfg.init_scale,
                          "Fresh parameters drawn uniformly from +/- this")
        ->capture_default_str();
    train_cmd->add_option("--checkpoint-interval", tr.cfg.checkpoint_interval,
                          "Epochs between periodic checkpoint writes (0 = final only)")
        ->capture_default_str();
    train_cmd->add_option("--resume", tr.resume, "Checkpoint to continue from")
        ->check(CLI::ExistingFile);

    // eval
    EvalOpts ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", ev.data, "Dataset file")->required()->check(CLI::ExistingFile);

    // cavity
    CavityOpts cav;
    CLI::App* cavity_cmd = app.add_subcommand("cavity", "Run the lid-driven cavity");
    cavity_cmd->fallthrough();
    cavity_cmd->add_option("--preset", cav.preset, "re10 (32x32) or re40 (256x256)")
        ->check(CLI::IsMember({"re10", "re40"}));
    CLI::Option* n_opt = cavity_cmd->add_option("--n", cav.cfg.n, "Grid side length")
                             ->capture_default_str();
    CLI::Option* mach_opt =
        cavity_cmd->add_option("--mach", cav.cfg.mach, "Lid Mach number")->capture_default_str();
    CLI::Option* re_opt = cavity_cmd->add_option("--reynolds", cav.cfg.reynolds, "Reynolds number")
                              ->capture_default_str();
    cavity_cmd->add_option("--max-steps", cav.cfg.max_steps, "Step limit")->capture_default_str();
    cavity_cmd
        ->add_option("--residual-interval", cav.cfg.residual_interval, "Steps between checks")
        ->capture_default_str();
    cavity_cmd->add_option("--tol", cav.cfg.convergence_tol, "Convergence residual")
        ->capture_default_str();
    cavity_cmd->add_option("--cutoff", cav.cfg.cutoff, "Hybrid speed cutoff (inf accepted)")
        ->capture_default_str();
    const std::map<std::string, lbm::CollisionMode> mode_map{
        {"classical", lbm::CollisionMode::Classical},
        {"quantum", lbm::CollisionMode::Quantum},
        {"hybrid", lbm::CollisionMode::Hybrid}};
    cavity_cmd->add_option("--mode", cav.cfg.mode, "Collision operator")
        ->transform(CLI::CheckedTransformer(mode_map, CLI::ignore_case))
        ->capture_default_str();
    cavity_cmd->add_option("--checkpoint", cav.checkpoint,
                           "Trained circuit (required for quantum/hybrid)")
        ->check(CLI::ExistingFile);

    // analyze
    AnalyzeOpts an;
    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "Error-propagation and complexity reports");
    analyze_cmd->fallthrough();
    analyze_cmd->add_flag("--complexity", an.complexity, "Qubit/gate cost table");
    analyze_cmd->add_flag("--a-range", an.a_range, "dt/tau range with growth factor below 1");
    analyze_cmd->add_flag("--t-max", an.growth, "Steps until noise crosses the threshold");
    analyze_cmd->add_flag("--error-curve", an.error_curve, "Write sigma(t) CSV");
    analyze_cmd->add_option("--cutoff-from", an.cutoff_from,
                            "velocity_pairs.csv from eval; reports the cutoff statistic")
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--dt-over-tau", an.params.dt_over_tau, "Relaxation ratio")
        ->capture_default_str();
    analyze_cmd->add_option("--mach", an.params.mach, "Mach number")->capture_default_str();
    analyze_cmd->add_option("--q", an.params.q, "Direction count")->capture_default_str();
    CLI::Option* rho_opt = analyze_cmd->add_option("--rho-ref", an.params.rho_ref,
                                                   "Reference density in the bounds")
                               ->capture_default_str();
    analyze_cmd->add_option("--w-ref", an.params.w_ref, "Reference weight")->capture_default_str();
    analyze_cmd->add_option("--b1", an.params.b1, "Injected noise std, density channel")
        ->capture_default_str();
    analyze_cmd->add_option("--b2", an.params.b2, "Injected noise std, speed channel")
        ->capture_default_str();
    analyze_cmd->add_option("--threshold", an.threshold, "Sigma threshold for --t-max")
        ->capture_default_str();
    analyze_cmd->add_option("--t-limit", an.t_limit, "Last step in --error-curve")
        ->capture_default_str();
    analyze_cmd->add_option("--grid-points", an.grid_points, "Sites in the full-run note")
        ->capture_default_str();
    analyze_cmd->add_option("--steps", an.time_steps, "Steps in the full-run note")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version are successes; anything else is a config error.
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    apply_threads(threads);
    cav.has_n = n_opt->count() > 0;
    cav.has_mach = mach_opt->count() > 0;
    cav.has_reynolds = re_opt->count() > 0;
    an.has_rho_ref = rho_opt->count() > 0;

    try {
        if (app.got_subcommand(gen_cmd)) return cmd_gen_data(gen, run_dir, invocation);
        if (app.got_subcommand(train_cmd)) return cmd_train(tr, run_dir, invocation);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(ev, run_dir, invocation);
        if (app.got_subcommand(cavity_cmd)) return cmd_cavity(cav, run_dir, invocation);
        if (app.got_subcommand(analyze_cmd)) return cmd_analyze(an, run_dir, invocation);
    } catch (const std::logic_error& e) {
        // Validation that fires before a run context exists.
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
