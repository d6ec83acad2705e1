#pragma once

// D2Q9 lattice constants and the BGK collision rule.
//
// Direction ordering is fixed across the whole project: index 0 is the rest
// particle, 1..4 are the axis directions (+x, +y, -x, -y), 5..8 the diagonals
// (+x+y, -x+y, -x-y, +x-y). Several other modules (encoding, symmetry, the
// dataset shift step) bake this ordering in, so do not reorder.

#include <array>
#include <stdexcept>

namespace qlbm::lattice {

inline constexpr int Q = 9;

inline constexpr std::array<int, Q> EX = {0, 1, 0, -1, 0, 1, -1, -1, 1};
inline constexpr std::array<int, Q> EY = {0, 0, 1, 0, -1, 1, 1, -1, -1};

inline constexpr std::array<double, Q> W = {
    4.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,  1.0 / 9.0,
    1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0};

// Squared lattice speed of sound, c_s^2 = 1/3 in lattice units.
inline constexpr double CS2 = 1.0 / 3.0;

// OPPOSITE[i] is the direction with e reversed; used by bounce-back walls.
inline constexpr std::array<int, Q> OPPOSITE = {0, 3, 4, 1, 2, 7, 8, 5, 6};

using Densities = std::array<double, Q>;

struct Moments {
    double rho;
    double ux;
    double uy;
};

// Zeroth and first moments of a density vector. Velocity needs rho > 0.
inline Moments moments(const Densities& f) {
    double rho = 0.0, mx = 0.0, my = 0.0;
    for (int i = 0; i < Q; ++i) {
        rho += f[i];
        mx += f[i] * EX[i];
        my += f[i] * EY[i];
    }
    if (rho <= 0.0)
        throw std::domain_error("moments: non-positive density, velocity undefined");
    return {rho, mx / rho, my / rho};
}

// Second-order (low Mach) equilibrium distribution.
inline Densities equilibrium(double rho, double ux, double uy) {
    if (rho <= 0.0)
        throw std::invalid_argument("equilibrium: rho must be positive");
    const double usq = (ux * ux + uy * uy) / (2.0 * CS2);
    Densities feq{};
    for (int i = 0; i < Q; ++i) {
        const double eu = (EX[i] * ux + EY[i] * uy) / CS2;
        feq[i] = W[i] * rho * (1.0 + eu + 0.5 * eu * eu - usq);
    }
    return feq;
}

// Single BGK relaxation step, f <- f - (dt/tau) (f - f_eq). The relaxation
// ratio dt/tau is carried as one number everywhere; linear stability needs
// dt/tau <= 2 but that is the caller's concern, not enforced here.
inline Densities bgk_collide(const Densities& f, double dt_over_tau) {
    if (dt_over_tau <= 0.0)
        throw std::invalid_argument("bgk_collide: dt_over_tau must be positive");
    const Moments m = moments(f);
    const Densities feq = equilibrium(m.rho, m.ux, m.uy);
    Densities out{};
    for (int i = 0; i < Q; ++i)
        out[i] = f[i] - dt_over_tau * (f[i] - feq[i]);
    return out;
}

}  // namespace qlbm::lattice
