#include "qlbm/analysis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qlbm/lattice.hpp"

namespace qlbm::analysis {

namespace {

// A evaluated at a given ratio with everything else fixed; the bisections
// below probe this.
double a_of(double dt_over_tau, double mach, int q, double w_ref, double rho_ref) {
    ErrorModelParams p;
    p.dt_over_tau = dt_over_tau;
    p.mach = mach;
    p.q = q;
    p.w_ref = w_ref;
    p.rho_ref = rho_ref;
    return coefficients(p).a;
}

}  // namespace

void ErrorModelParams::validate() const {
    if (!(dt_over_tau >= 0.0) || dt_over_tau > 1.0)
        throw std::invalid_argument("error model: dt_over_tau must be in [0, 1]");
    if (!(mach >= 0.0)) throw std::invalid_argument("error model: mach must be non-negative");
    if (q < 1) throw std::invalid_argument("error model: need at least one direction");
    if (!(rho_ref > 0.0)) throw std::invalid_argument("error model: rho_ref must be positive");
    if (!(w_ref > 0.0)) throw std::invalid_argument("error model: w_ref must be positive");
    if (!(b1 >= 0.0) || !(b2 >= 0.0))
        throw std::invalid_argument("error model: noise levels must be non-negative");
}

Coefficients coefficients(const ErrorModelParams& p) {
    p.validate();
    const double r = p.dt_over_tau;
    const double cs = std::sqrt(lattice::CS2);
    const double d_rho = p.w_ref * (1.0 + 2.0 * p.mach - 0.5 * p.mach * p.mach);
    const double d_u = p.w_ref * (p.rho_ref / cs) * (1.0 - p.mach);
    Coefficients c;
    c.a = (1.0 - r) * (1.0 - r) + p.q * r * r * (d_rho * d_rho + 2.0 * d_u * d_u);
    c.b = r * r * (d_rho * d_rho * p.b1 * p.b1 + 2.0 * d_u * d_u * p.b2 * p.b2);
    return c;
}

double error_variance(long t, double a, double b) {
    if (t < 0) throw std::invalid_argument("error_variance: steps must be non-negative");
    if (a == 1.0) return b * static_cast<double>(t);
    return b * (1.0 - std::pow(a, static_cast<double>(t))) / (1.0 - a);
}

double error_variance(long t, const ErrorModelParams& p) {
    const Coefficients c = coefficients(p);
    return error_variance(t, c.a, c.b);
}

Interval a_subunit_range(double mach, int q, double w_ref, double rho_ref) {
    const auto below_one = [&](double r) { return a_of(r, mach, q, w_ref, rho_ref) < 1.0; };

    // The sub-unit set is a single interval: A is an upward parabola in the
    // ratio, so {A < 1} is where it dips under the horizontal line. Find an
    // interior point first, then bisect each edge down to adjacent doubles.
    double inside = 1e-3;
    while (inside > 0.0 && !below_one(inside)) inside /= 2.0;
    if (inside == 0.0)
        throw std::domain_error("a_subunit_range: A never drops below 1 for these parameters");

    Interval out;
    {
        double lo = 0.0, hi = inside;  // predicate false at lo, true at hi
        while (true) {
            const double mid = lo + (hi - lo) / 2.0;
            if (mid == lo || mid == hi) break;
            (below_one(mid) ? hi : lo) = mid;
        }
        out.lo = hi;
    }
    if (below_one(1.0)) {
        out.hi = 1.0;
    } else {
        double lo = inside, hi = 1.0;  // predicate true at lo, false at hi
        while (true) {
            const double mid = lo + (hi - lo) / 2.0;
            if (mid == lo || mid == hi) break;
            (below_one(mid) ? lo : hi) = mid;
        }
        out.hi = lo;
    }
    return out;
}

long t_max(const ErrorModelParams& p, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("t_max: threshold must be positive");
    const Coefficients c = coefficients(p);
    if (c.b == 0.0 || !std::isfinite(threshold)) return kNever;
    const double target = threshold * threshold;

    if (c.a < 1.0) {
        const double asymptote = c.b / (1.0 - c.a);
        if (target >= asymptote) return kNever;
    }

    // Closed-form estimate, then nudge to the exact crossing in case the
    // logs landed a step off.
    double estimate;
    if (c.a == 1.0) {
        estimate = target / c.b;
    } else if (c.a > 1.0) {
        estimate = std::log1p(target * (c.a - 1.0) / c.b) / std::log(c.a);
    } else {
        estimate = std::log1p(-target * (1.0 - c.a) / c.b) / std::log(c.a);
    }
    long t = static_cast<long>(std::floor(estimate)) + 1;
    if (t < 1) t = 1;
    while (t > 1 && error_variance(t - 1, c.a, c.b) > target) --t;
    while (!(error_variance(t, c.a, c.b) > target)) ++t;
    return t;
}

GrowthReport growth_report(const ErrorModelParams& p, double threshold) {
    GrowthReport report;
    report.params = p;
    report.threshold = threshold;
    report.coeff = coefficients(p);
    report.t_exponential = t_max(p, threshold);
    if (report.coeff.b == 0.0 || !std::isfinite(threshold)) {
        report.t_marginal = kNever;
    } else {
        long t = static_cast<long>(std::floor(threshold * threshold / report.coeff.b)) + 1;
        if (t < 1) t = 1;
        while (t > 1 && error_variance(t - 1, 1.0, report.coeff.b) > threshold * threshold) --t;
        while (!(error_variance(t, 1.0, report.coeff.b) > threshold * threshold)) ++t;
        report.t_marginal = t;
    }
    return report;
}

ComplexityEstimate collision_complexity(int dimensions) {
    if (dimensions < 1 || dimensions > 3)
        throw std::invalid_argument("collision_complexity: dimensions must be 1, 2, or 3");
    std::int64_t states = 1;
    for (int i = 0; i < dimensions; ++i) states *= 3;
    int m = 0;
    while ((std::int64_t{1} << m) < states) ++m;
    const std::int64_t pow_m = std::int64_t{1} << m;
    ComplexityEstimate est;
    est.qubits = m + 1;
    est.gates = (8 * (m + pow_m) + 1) * pow_m;
    return est;
}

std::string full_algorithm_note(int dimensions, double grid_points, double time_steps) {
    if (dimensions < 1 || dimensions > 3)
        throw std::invalid_argument("full_algorithm_note: dimensions must be 1, 2, or 3");
    if (!(grid_points >= 1.0) || !(time_steps >= 1.0))
        throw std::invalid_argument("full_algorithm_note: grid and steps must be at least 1");
    const ComplexityEstimate one = collision_complexity(dimensions);
    const double log_g = std::log2(grid_points);
    const double qubits = 2.0 * dimensions + log_g + 1.0;
    const double gates = time_steps * (static_cast<double>(one.gates) +
                                       dimensions * log_g * log_g);
    std::ostringstream out;
    out << "full run, D=" << dimensions << ", G=" << grid_points << " sites, T=" << time_steps
        << " steps: ~" << std::ceil(qubits) << " qubits (2D + log2 G + 1), ~" << gates
        << " gates (T x (collision " << one.gates << " + D log2^2 G for streaming))";
    return out.str();
}

CutoffStats velocity_cutoff(const std::vector<std::array<double, 4>>& samples) {
    if (samples.size() < 100)
        throw std::invalid_argument("velocity_cutoff: need at least 100 samples");
    bool any_scale = false;
    double sx = 0.0, sy = 0.0;
    for (const auto& row : samples) {
        if (row[0] != 0.0 || row[1] != 0.0) any_scale = true;
        const double ex = row[2] - row[0];
        const double ey = row[3] - row[1];
        sx += ex * ex;
        sy += ey * ey;
    }
    if (!any_scale)
        throw std::domain_error("velocity_cutoff: every true velocity is zero");
    CutoffStats stats;
    const double n = static_cast<double>(samples.size());
    stats.sigma_x = std::sqrt(sx / n);
    stats.sigma_y = std::sqrt(sy / n);
    stats.combined = std::sqrt(stats.sigma_x * stats.sigma_x + stats.sigma_y * stats.sigma_y);
    return stats;
}

}  // namespace qlbm::analysis
