#include "qlbm/lbm_solver.hpp"

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace qlbm::lbm {

namespace {

constexpr std::size_t kNoSite = std::numeric_limits<std::size_t>::max();

bool finite_site(const lattice::Densities& f) {
    for (double v : f) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Collides one site in place. Returns an empty string on success, otherwise
// the reason (the caller prefixes the coordinates). Never throws: the wall
// clock for a whole cavity run lives inside parallel loops and exceptions
// must not cross them.
std::string collide_site(lattice::Densities& f, double dt_over_tau, CollisionMode mode,
                         double cutoff, const train::Pipeline* quantum,
                         const std::vector<double>* params) {
    if (!finite_site(f)) return "non-finite density";
    double rho = 0.0, mx = 0.0, my = 0.0;
    for (int i = 0; i < lattice::Q; ++i) {
        rho += f[i];
        mx += f[i] * lattice::EX[i];
        my += f[i] * lattice::EY[i];
    }
    if (!(rho > 0.0)) return "non-positive density";

    bool classical = mode == CollisionMode::Classical;
    if (mode == CollisionMode::Hybrid) {
        const double speed = std::sqrt(mx * mx + my * my) / rho;
        // <= cutoff stays classical, so cutoff = inf makes every site take
        // the plain BGK branch below, bit for bit.
        classical = !(speed > cutoff);
    }

    if (classical) {
        const double ux = mx / rho, uy = my / rho;
        const lattice::Densities feq = lattice::equilibrium(rho, ux, uy);
        for (int i = 0; i < lattice::Q; ++i) f[i] -= dt_over_tau * (f[i] - feq[i]);
        return {};
    }

    for (double v : f) {
        if (v < 0.0 || v > 1.0) return "density outside [0, 1] on the circuit path";
    }
    f = train::forward(*quantum, *params, f);
    return {};
}

std::string site_prefix(int x, int y) {
    return "site (" + std::to_string(x) + ", " + std::to_string(y) + "): ";
}

std::string collide_grid(FlowField& field, double dt_over_tau, CollisionMode mode, double cutoff,
                         const train::Pipeline* quantum, const std::vector<double>* params,
                         bool parallel) {
    const int nx = field.nx, ny = field.ny;
    const long long total = static_cast<long long>(nx) * ny;
    std::size_t bad_flat = kNoSite;
    std::string bad_text;

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long s = 0; s < total; ++s) {
            const int x = static_cast<int>(s % nx);
            const int y = static_cast<int>(s / nx);
            lattice::Densities f = field.site(x, y);
            const std::string err =
                collide_site(f, dt_over_tau, mode, cutoff, quantum, params);
            if (!err.empty()) {
                // Keep the lowest-index offender so the message does not
                // depend on thread scheduling.
#pragma omp critical(qlbm_collide_error)
                {
                    if (static_cast<std::size_t>(s) < bad_flat) {
                        bad_flat = static_cast<std::size_t>(s);
                        bad_text = site_prefix(x, y) + err;
                    }
                }
                continue;
            }
            field.set_site(x, y, f);
        }
    } else {
        for (long long s = 0; s < total; ++s) {
            const int x = static_cast<int>(s % nx);
            const int y = static_cast<int>(s / nx);
            lattice::Densities f = field.site(x, y);
            const std::string err =
                collide_site(f, dt_over_tau, mode, cutoff, quantum, params);
            if (!err.empty()) {
                if (static_cast<std::size_t>(s) < bad_flat) {
                    bad_flat = static_cast<std::size_t>(s);
                    bad_text = site_prefix(x, y) + err;
                }
                continue;
            }
            field.set_site(x, y, f);
        }
    }

    return bad_flat == kNoSite ? std::string{} : bad_text;
}

// Push streaming. Every (site, direction) value lands in exactly one slot:
// in-grid targets take the translated value, wall crossings reflect into the
// opposite direction at the source site, and the interior push that would
// compete for that reflected slot would have to originate outside the grid.
// The move is therefore a permutation of storage and conserves mass exactly.
void stream_grid(FlowField& field, bool parallel) {
    const int nx = field.nx, ny = field.ny;
    const long long total = static_cast<long long>(nx) * ny;
    std::array<std::vector<double>, lattice::Q> next;
    next[0] = field.f[0];
    for (int i = 1; i < lattice::Q; ++i)
        next[i].assign(static_cast<std::size_t>(total), 0.0);

    const auto move = [&](long long s) {
        const int x = static_cast<int>(s % nx);
        const int y = static_cast<int>(s / nx);
        for (int i = 1; i < lattice::Q; ++i) {
            const int tx = x + lattice::EX[i];
            const int ty = y + lattice::EY[i];
            const double v = field.f[i][static_cast<std::size_t>(s)];
            if (tx >= 0 && tx < nx && ty >= 0 && ty < ny) {
                next[i][field.idx(tx, ty)] = v;
            } else {
                next[lattice::OPPOSITE[i]][static_cast<std::size_t>(s)] = v;
            }
        }
    };

    if (parallel) {
#pragma omp parallel for schedule(static)
        for (long long s = 0; s < total; ++s) move(s);
    } else {
        for (long long s = 0; s < total; ++s) move(s);
    }

    field.f = std::move(next);
}

// Velocity snapshot for the residual check. Collision has already rejected
// non-positive densities, so plain division is safe here; anything that
// slipped through shows up as a non-finite residual and is flagged by the
// caller.
void gather_velocities(const FlowField& field, std::vector<double>& ux, std::vector<double>& uy,
                       double& max_speed) {
    const std::size_t total = field.f[0].size();
    ux.resize(total);
    uy.resize(total);
    max_speed = 0.0;
    for (std::size_t s = 0; s < total; ++s) {
        double rho = 0.0, mx = 0.0, my = 0.0;
        for (int i = 0; i < lattice::Q; ++i) {
            rho += field.f[i][s];
            mx += field.f[i][s] * lattice::EX[i];
            my += field.f[i][s] * lattice::EY[i];
        }
        ux[s] = mx / rho;
        uy[s] = my / rho;
        const double speed = std::sqrt(ux[s] * ux[s] + uy[s] * uy[s]);
        if (speed > max_speed) max_speed = speed;
    }
}

double relative_velocity_change(const std::vector<double>& ux, const std::vector<double>& uy,
                                const std::vector<double>& pux, const std::vector<double>& puy) {
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < ux.size(); ++s) {
        const double dx = ux[s] - pux[s];
        const double dy = uy[s] - puy[s];
        num += dx * dx + dy * dy;
        den += ux[s] * ux[s] + uy[s] * uy[s];
    }
    if (den > 0.0) return std::sqrt(num / den);
    return std::sqrt(num);
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << std::setprecision(17);
    return out;
}

// u_x or u_y per site without throwing, so fields from aborted runs can
// still be dumped for inspection.
double component_or_nan(const lattice::Densities& f, int component) {
    double rho = 0.0, mx = 0.0, my = 0.0;
    for (int i = 0; i < lattice::Q; ++i) {
        rho += f[i];
        mx += f[i] * lattice::EX[i];
        my += f[i] * lattice::EY[i];
    }
    if (!(rho > 0.0) || !std::isfinite(rho))
        return std::numeric_limits<double>::quiet_NaN();
    return component == 0 ? mx / rho : my / rho;
}

}  // namespace

double tau_from(double reynolds, double mach, int n) {
    if (!(reynolds > 0.0)) throw std::invalid_argument("tau_from: reynolds must be positive");
    if (!(mach > 0.0)) throw std::invalid_argument("tau_from: mach must be positive");
    if (n < 1) throw std::invalid_argument("tau_from: grid size must be at least 1");
    const double tau = 0.5 + mach * n / (std::sqrt(lattice::CS2) * reynolds);
    if (tau <= 0.5) throw std::domain_error("tau_from: relaxation time not above 1/2");
    return tau;
}

void CavityConfig::validate() const {
    if (n < 8) throw std::invalid_argument("cavity: grid size must be at least 8");
    if (!(mach > 0.0) || mach > 0.3)
        throw std::invalid_argument("cavity: mach must be in (0, 0.3]");
    if (!(reynolds > 0.0)) throw std::invalid_argument("cavity: reynolds must be positive");
    if (max_steps < 1) throw std::invalid_argument("cavity: max_steps must be at least 1");
    if (residual_interval < 1)
        throw std::invalid_argument("cavity: residual_interval must be at least 1");
    if (!(convergence_tol > 0.0))
        throw std::invalid_argument("cavity: convergence_tol must be positive");
    if (!(cutoff >= 0.0)) throw std::invalid_argument("cavity: cutoff must be non-negative");
}

double CavityConfig::lid_speed() const { return mach * std::sqrt(lattice::CS2); }

FlowField FlowField::uniform(int nx, int ny, const lattice::Densities& site) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("FlowField: grid sides must be positive");
    FlowField field;
    field.nx = nx;
    field.ny = ny;
    const std::size_t total = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    for (int i = 0; i < lattice::Q; ++i) field.f[i].assign(total, site[i]);
    return field;
}

lattice::Densities FlowField::site(int x, int y) const {
    lattice::Densities out;
    const std::size_t s = idx(x, y);
    for (int i = 0; i < lattice::Q; ++i) out[i] = f[i][s];
    return out;
}

void FlowField::set_site(int x, int y, const lattice::Densities& v) {
    const std::size_t s = idx(x, y);
    for (int i = 0; i < lattice::Q; ++i) f[i][s] = v[i];
}

double FlowField::mass() const {
    // Neumaier-compensated so the mass ledger in run_cavity measures the
    // physics, not the summation order.
    double sum = 0.0, comp = 0.0;
    for (int i = 0; i < lattice::Q; ++i) {
        for (double v : f[i]) {
            const double t = sum + v;
            if (std::abs(sum) >= std::abs(v))
                comp += (sum - t) + v;
            else
                comp += (v - t) + sum;
            sum = t;
        }
    }
    return sum + comp;
}

double FlowField::l2_norm() const {
    double sum = 0.0;
    for (int i = 0; i < lattice::Q; ++i) {
        for (double v : f[i]) sum += v * v;
    }
    return std::sqrt(sum);
}

std::string collide(FlowField& field, double dt_over_tau, CollisionMode mode, double cutoff,
                    const train::Pipeline* quantum, const std::vector<double>* params) {
    return collide_grid(field, dt_over_tau, mode, cutoff, quantum, params, true);
}

void stream(FlowField& field) { stream_grid(field, true); }

namespace reference {

std::string collide(FlowField& field, double dt_over_tau, CollisionMode mode, double cutoff,
                    const train::Pipeline* quantum, const std::vector<double>* params) {
    return collide_grid(field, dt_over_tau, mode, cutoff, quantum, params, false);
}

void stream(FlowField& field) { stream_grid(field, false); }

}  // namespace reference

double apply_lid(FlowField& field, double u_lid) {
    const lattice::Densities eq = lattice::equilibrium(1.0, u_lid, 0.0);
    double eq_mass = 0.0;
    for (double v : eq) eq_mass += v;
    const int y = field.ny - 1;
    double delta = 0.0;
    for (int x = 0; x < field.nx; ++x) {
        double row_mass = 0.0;
        const std::size_t s = field.idx(x, y);
        for (int i = 0; i < lattice::Q; ++i) row_mass += field.f[i][s];
        delta += eq_mass - row_mass;
        field.set_site(x, y, eq);
    }
    return delta;
}

CavityResult run_cavity(const CavityConfig& cfg, const train::Pipeline* quantum,
                        const std::vector<double>* params) {
    cfg.validate();
    if (cfg.mode != CollisionMode::Classical) {
        if (quantum == nullptr || params == nullptr)
            throw std::invalid_argument(
                "run_cavity: quantum and hybrid modes need a circuit pipeline and parameters");
        if (static_cast<int>(params->size()) != quantum->n_params())
            throw std::invalid_argument("run_cavity: parameter count does not match the circuit");
    }

    const double dt_over_tau = 1.0 / tau_from(cfg.reynolds, cfg.mach, cfg.n);
    const double u_lid = cfg.lid_speed();

    CavityResult result;
    result.field = FlowField::uniform(cfg.n, cfg.n, lattice::equilibrium(1.0, 0.0, 0.0));
    apply_lid(result.field, u_lid);  // the lid is part of the initial condition

    CavityReport& report = result.report;
    report.mass_initial = result.field.mass();
    report.residuals.reserve(
        static_cast<std::size_t>(cfg.max_steps / cfg.residual_interval) + 1);
    const double norm_initial = result.field.l2_norm();

    std::vector<double> prev_ux, prev_uy, cur_ux, cur_uy;
    double max_speed = 0.0;
    gather_velocities(result.field, prev_ux, prev_uy, max_speed);

    double mass_before = report.mass_initial;
    report.outcome = Outcome::MaxSteps;

    for (long step = 1; step <= cfg.max_steps; ++step) {
        const std::string err = collide(result.field, dt_over_tau, cfg.mode, cfg.cutoff,
                                        quantum, params);
        if (!err.empty()) {
            report.outcome = Outcome::Diverged;
            report.diagnostic = "collision failed at step " + std::to_string(step) + ", " + err;
            report.steps = step;
            break;
        }
        stream(result.field);
        const double lid_delta = apply_lid(result.field, u_lid);

        const double mass_after = result.field.mass();
        report.lid_exchange += lid_delta;
        report.interior_drift += (mass_after - mass_before) - lid_delta;
        mass_before = mass_after;
        report.steps = step;

        if (step % cfg.residual_interval != 0) continue;

        const double norm = result.field.l2_norm();
        if (!std::isfinite(norm) || norm > 10.0 * norm_initial) {
            report.outcome = Outcome::Diverged;
            report.diagnostic = "density norm " + std::to_string(norm) + " at step " +
                                std::to_string(step) + " (initial " +
                                std::to_string(norm_initial) + ")";
            break;
        }

        gather_velocities(result.field, cur_ux, cur_uy, max_speed);
        const double residual = relative_velocity_change(cur_ux, cur_uy, prev_ux, prev_uy);
        report.final_residual = residual;
        report.residuals.push_back({step, residual, mass_after, max_speed});
        if (!std::isfinite(residual)) {
            report.outcome = Outcome::Diverged;
            report.diagnostic = "non-finite velocity residual at step " + std::to_string(step);
            break;
        }
        if (residual < cfg.convergence_tol) {
            report.outcome = Outcome::Converged;
            break;
        }
        prev_ux.swap(cur_ux);
        prev_uy.swap(cur_uy);
    }

    report.mass_final = result.field.mass();
    return result;
}

void write_speed_csv(const std::string& path, const FlowField& field, double scale) {
    if (!(scale != 0.0)) throw std::invalid_argument("write_speed_csv: scale must be non-zero");
    std::ofstream out = open_csv(path);
    for (int y = 0; y < field.ny; ++y) {
        for (int x = 0; x < field.nx; ++x) {
            const lattice::Densities f = field.site(x, y);
            const double ux = component_or_nan(f, 0);
            const double uy = component_or_nan(f, 1);
            if (x) out << ',';
            out << std::sqrt(ux * ux + uy * uy) / scale;
        }
        out << '\n';
    }
    if (!out.good()) throw std::runtime_error("failed writing " + path);
}

void write_component_csv(const std::string& path, const FlowField& field, int component) {
    if (component != 0 && component != 1)
        throw std::invalid_argument("write_component_csv: component must be 0 (u_x) or 1 (u_y)");
    std::ofstream out = open_csv(path);
    for (int y = 0; y < field.ny; ++y) {
        for (int x = 0; x < field.nx; ++x) {
            if (x) out << ',';
            out << component_or_nan(field.site(x, y), component);
        }
        out << '\n';
    }
    if (!out.good()) throw std::runtime_error("failed writing " + path);
}

void write_report_csv(const std::string& path, const CavityReport& report) {
    std::ofstream out = open_csv(path);
    out << "step,residual,mass,max_speed\n";
    for (const ResidualRow& row : report.residuals)
        out << row.step << ',' << row.residual << ',' << row.mass << ',' << row.max_speed
            << '\n';
    if (!out.good()) throw std::runtime_error("failed writing " + path);
}

std::vector<double> centerline_ux(const FlowField& field) {
    const int x = field.nx / 2;
    std::vector<double> profile;
    profile.reserve(static_cast<std::size_t>(field.ny));
    for (int y = 0; y < field.ny; ++y)
        profile.push_back(component_or_nan(field.site(x, y), 0));
    return profile;
}

int sign_changes(const std::vector<double>& profile, double eps) {
    int changes = 0;
    int last = 0;
    for (double v : profile) {
        if (!(std::abs(v) > eps)) continue;
        const int sign = v > 0.0 ? 1 : -1;
        if (last != 0 && sign != last) ++changes;
        last = sign;
    }
    return changes;
}

}  // namespace qlbm::lbm
