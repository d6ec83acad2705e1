#pragma once

// D2Q9 lid-driven cavity. Streaming and boundaries are classical; the
// per-site collision is classical BGK, the trained circuit, or a hybrid that
// picks by velocity magnitude (at or below the cutoff the site collides
// classically, above it the circuit runs). With an infinite cutoff the
// hybrid path degenerates to the classical one bit for bit.
//
// Geometry: x runs 0..nx-1 left to right, y runs 0..ny-1 bottom to top, the
// moving lid is the top row. The three resting walls are halfway bounce-back
// planes half a spacing outside the outermost sites; the lid row is reset to
// the precalculated equilibrium at (rho = 1, u = (U, 0)) after every
// streaming step. Streaming, including wall reflections, permutes storage
// exactly, so any mass change per step beyond roundoff comes from the lid
// reset alone; the run report accounts for the two separately.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qlbm/lattice.hpp"
#include "qlbm/training.hpp"

namespace qlbm::lbm {

// Relaxation ratio tau/dt giving the target Reynolds number for a cavity of
// n sites at lid Mach number `mach`: tau/dt = 1/2 + Ma n / (c_s Re).
double tau_from(double reynolds, double mach, int n);

enum class CollisionMode { Classical, Quantum, Hybrid };
enum class Outcome { Converged, MaxSteps, Diverged };

struct CavityConfig {
    int n = 32;
    double mach = 0.1;
    double reynolds = 10.0;
    long max_steps = 20000;
    long residual_interval = 100;   // steps between convergence/divergence checks
    double convergence_tol = 1e-7;  // relative L2 velocity change per interval
    double cutoff = 4.3e-3;         // hybrid dispatch threshold on |u|
    CollisionMode mode = CollisionMode::Classical;

    void validate() const;
    double lid_speed() const;  // Ma * c_s
};

struct FlowField {
    int nx = 0, ny = 0;
    std::array<std::vector<double>, lattice::Q> f;  // f[i][y * nx + x]

    static FlowField uniform(int nx, int ny, const lattice::Densities& site);

    std::size_t idx(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    lattice::Densities site(int x, int y) const;
    void set_site(int x, int y, const lattice::Densities& v);

    double mass() const;     // ordered summation, deterministic
    double l2_norm() const;  // over all stored densities
};

struct ResidualRow {
    long step = 0;
    double residual = 0.0;
    double mass = 0.0;
    double max_speed = 0.0;
};

struct CavityReport {
    Outcome outcome = Outcome::MaxSteps;
    long steps = 0;
    double final_residual = 0.0;
    double mass_initial = 0.0;
    double mass_final = 0.0;
    double lid_exchange = 0.0;    // net mass injected by the lid resets
    double interior_drift = 0.0;  // net mass change not attributable to the lid
    std::vector<ResidualRow> residuals;
    std::string diagnostic;  // set when outcome is Diverged
};

struct CavityResult {
    FlowField field;
    CavityReport report;
};

// Collides every site in place. Returns an empty string on success, or a
// description of the first offending site (non-finite or non-positive
// density, or densities outside [0,1] reaching the circuit path).
std::string collide(FlowField& field, double dt_over_tau, CollisionMode mode, double cutoff,
                    const train::Pipeline* quantum = nullptr,
                    const std::vector<double>* params = nullptr);

// Advects all densities one step, reflecting wall-crossing values back into
// their opposite direction at the same site (an exact permutation of
// storage).
void stream(FlowField& field);

// Resets the top row to the lid equilibrium; returns the mass difference
// this introduced.
double apply_lid(FlowField& field, double u_lid);

// Full run: equilibrium-at-rest start with the lid row active from step 0,
// then collide/stream/lid steps until the residual drops below tolerance,
// the field diverges, or max_steps elapse. Quantum and hybrid modes need the
// pipeline and parameters.
CavityResult run_cavity(const CavityConfig& cfg, const train::Pipeline* quantum = nullptr,
                        const std::vector<double>* params = nullptr);

namespace reference {
// Serial counterparts of the parallel kernels; bit-identical output.
std::string collide(FlowField& field, double dt_over_tau, CollisionMode mode, double cutoff,
                    const train::Pipeline* quantum = nullptr,
                    const std::vector<double>* params = nullptr);
void stream(FlowField& field);
}  // namespace reference

// Grid of |u| / scale, one CSV row per y starting at the bottom row.
void write_speed_csv(const std::string& path, const FlowField& field, double scale);
// Grid of one velocity component (0 = u_x, 1 = u_y), raw lattice units.
void write_component_csv(const std::string& path, const FlowField& field, int component);
void write_report_csv(const std::string& path, const CavityReport& report);

// u_x sampled along the vertical centerline x = nx / 2, bottom to top.
std::vector<double> centerline_ux(const FlowField& field);
// Sign flips along a profile, ignoring entries with |v| <= eps.
int sign_changes(const std::vector<double>& profile, double eps);

}  // namespace qlbm::lbm
