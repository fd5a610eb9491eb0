#pragma once

// The auxiliary functions P_alpha and Q, the minimal stabilizing function
// k0(n), and angular stabilizer tables with periodic linear interpolation.
//
// Feasibility of a stabilizer value alpha at the direction pair (n, nhat)
// means P_alpha(n, nhat) >= Q(n, nhat). P_alpha is monotone nondecreasing
// in alpha, so the per-direction minimum has a closed form and the sup over
// nhat in the definition of k0 reduces to a max over an angular grid.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "aniflow/anisotropy.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/geometry.hpp"

namespace aniflow {

/// P_alpha(n, nhat) = 2 sqrt((gamma(n) + alpha t^2) gamma(n)) with t = nhat . n^perp.
inline double p_alpha(double gamma_n, double t, double alpha) {
    if (!(gamma_n > 0.0)) throw Error("p_alpha: gamma(n) must be positive");
    if (alpha < 0.0) throw Error("p_alpha: alpha must be nonnegative");
    return 2.0 * std::sqrt((gamma_n + alpha * t * t) * gamma_n);
}

/// Q(n, nhat) = gamma(nhat) + gamma(n)(n . nhat) - (xi . n^perp)(nhat . n^perp).
inline double q_fn(const Anisotropy& a, const UnitVec2& n, const UnitVec2& nhat) {
    const Vec2 nperp = n.perp();
    return a.gamma(nhat) + a.gamma(n) * n.dot(nhat) - a.xi(n).dot(nperp) * nhat.dot(nperp);
}

namespace detail {
// Closed-form per-direction minimum with gamma(n) and xi(n).n^perp hoisted.
inline double min_alpha_impl(double gamma_n, double gamma_nhat, double xi_tau,
                             double dot_nn, double t) {
    const double q = gamma_nhat + gamma_n * dot_nn - xi_tau * t;
    if (q <= 2.0 * gamma_n) return 0.0;
    const double t2 = t * t;
    if (t2 < 1e-14)
        throw ConditionViolated(
            "P_alpha >= Q is infeasible at an antipodal direction; "
            "3*gamma(n) > gamma(-n) fails");
    return (q * q / (4.0 * gamma_n) - gamma_n) / t2;
}
}

/// Smallest alpha >= 0 with P_alpha(n, nhat) >= Q(n, nhat).
inline double min_alpha_for_direction(const Anisotropy& a, const UnitVec2& n,
                                      const UnitVec2& nhat) {
    const Vec2 nperp = n.perp();
    return detail::min_alpha_impl(a.gamma(n), a.gamma(nhat), a.xi(n).dot(nperp),
                                  n.dot(nhat), nhat.dot(nperp));
}

namespace detail {

// Unclamped feasibility ratio (Q - 2 gamma)(Q + 2 gamma) / (4 gamma t^2) at
// the direction theta_n + s. Negative where alpha = 0 already suffices.
inline double alpha_ratio_at_offset(const Anisotropy& a, const UnitVec2& n, double gamma_n,
                                    double xi_tau, double theta_n, double s) {
    const UnitVec2 nhat = normal_at(theta_n + s);
    const Vec2 nperp = n.perp();
    const double t = nhat.dot(nperp);
    const double q = a.gamma(nhat) + gamma_n * n.dot(nhat) - xi_tau * t;
    return (q - 2.0 * gamma_n) * (q + 2.0 * gamma_n) / (4.0 * gamma_n * t * t);
}

// Contribution of the neighborhood nhat -> n, where the direct formula is a
// 0/0 (Q - 2 gamma and t^2 both vanish quadratically) and cancellation
// swamps grid evaluation. The unclamped ratio is smooth on each side of the
// axis; interpolate it through a geometric ladder of offsets and take the
// maximum of the interpolant over [0, s0], including the extrapolated limit
// at 0 (which equals (gamma''(theta) - gamma(theta))/2 for smooth gamma).
inline double axis_candidate(const Anisotropy& a, const UnitVec2& n, double gamma_n,
                             double xi_tau) {
    const double theta_n = theta_of(n);
    constexpr int nodes = 6;
    constexpr double s0 = 0.04;
    double best = 0.0;
    for (const double side : {1.0, -1.0}) {
        double s[nodes], r[nodes];
        for (int k = 0; k < nodes; ++k) {
            s[k] = side * s0 / static_cast<double>(1 << k);
            r[k] = alpha_ratio_at_offset(a, n, gamma_n, xi_tau, theta_n, s[k]);
        }
        // Newton divided differences.
        double coef[nodes];
        for (int k = 0; k < nodes; ++k) coef[k] = r[k];
        for (int level = 1; level < nodes; ++level)
            for (int k = nodes - 1; k >= level; --k)
                coef[k] = (coef[k] - coef[k - 1]) / (s[k] - s[k - level]);
        const auto interp = [&](double x) {
            double acc = coef[nodes - 1];
            for (int k = nodes - 2; k >= 0; --k) acc = acc * (x - s[k]) + coef[k];
            return acc;
        };
        for (int i = 0; i <= 400; ++i)
            best = std::max(best, interp(side * s0 * static_cast<double>(i) / 400.0));
    }
    return best;
}

} // namespace detail

/// k0(n): sup over nhat of the per-direction minimum. A coarse scan over a
/// uniform nhat grid locates interior maxima, each refined locally to the
/// true peak; the limit as nhat -> n (where the closed form degenerates to
/// 0/0) enters as an explicit extrapolated candidate. The result tracks the
/// sup to rounding, so table entries stay feasible against arbitrary
/// directions, not only grid ones.
inline double k0_at(const Anisotropy& a, const UnitVec2& n, int grid_size_nhat) {
    if (grid_size_nhat < 64) throw Error("k0_at: grid_size_nhat must be >= 64");
    const double gamma_n = a.gamma(n);
    const UnitVec2 minus_n(-n.x, -n.y);
    if (3.0 * gamma_n - a.gamma(minus_n) <= 0.0)
        throw ConditionViolated("k0_at: 3*gamma(n) > gamma(-n) fails at theta = " +
                                std::to_string(theta_of(n)));
    const Vec2 nperp = n.perp();
    const double xi_tau = a.xi(n).dot(nperp);
    const double theta_n = theta_of(n);

    // Directions with |t| below the cutoff belong to the axis candidate.
    constexpr double t_cut = 1e-3;
    const auto alpha_needed = [&](double th) {
        const UnitVec2 nhat = normal_at(th);
        const double t = nhat.dot(nperp);
        if (std::abs(t) < t_cut && n.dot(nhat) > 0.0) return 0.0;
        return detail::min_alpha_impl(gamma_n, a.gamma(nhat), xi_tau, n.dot(nhat), t);
    };

    double best = detail::axis_candidate(a, n, gamma_n, xi_tau);

    const std::size_t g = static_cast<std::size_t>(grid_size_nhat);
    const double dth = two_pi / static_cast<double>(g);
    std::vector<double> coarse(g);
    for (std::size_t i = 0; i < g; ++i)
        coarse[i] = alpha_needed(theta_n + static_cast<double>(i) * dth);

    // Refine every coarse local maximum; near-tied peaks can swap order
    // between the grid scan and the true landscape.
    for (std::size_t i = 0; i < g; ++i) {
        if (coarse[i] == 0.0) continue;
        if (coarse[i] < coarse[(i + g - 1) % g] || coarse[i] < coarse[(i + 1) % g]) continue;
        double peak_th = theta_n + static_cast<double>(i) * dth;
        double peak = coarse[i];
        double lo = peak_th - dth;
        double hi = peak_th + dth;
        for (int round = 0; round < 6; ++round) {
            const double w = (hi - lo) / 32.0;
            for (int v = 0; v <= 32; ++v) {
                const double th = lo + static_cast<double>(v) * w;
                const double alpha = alpha_needed(th);
                if (alpha > peak) {
                    peak = alpha;
                    peak_th = th;
                }
            }
            lo = peak_th - w;
            hi = peak_th + w;
        }
        best = std::max(best, peak);
    }
    return best;
}

/// Angular table of the stabilizing function k(n) >= 0 on a uniform grid over
/// [0, 2*pi), evaluated with periodic linear interpolation in theta.
class StabilizerTable {
public:
    StabilizerTable(std::vector<double> k_values) : k_(std::move(k_values)) {
        if (k_.size() < 1) throw Error("StabilizerTable: empty table");
        for (double k : k_)
            if (!(k >= 0.0) || !std::isfinite(k))
                throw Error("StabilizerTable: entries must be finite and >= 0");
    }

    static StabilizerTable constant(double value, std::size_t points = 20) {
        return StabilizerTable(std::vector<double>(points, value));
    }

    std::size_t size() const { return k_.size(); }
    const std::vector<double>& values() const { return k_; }

    std::vector<double> angles() const {
        std::vector<double> th(k_.size());
        for (std::size_t i = 0; i < k_.size(); ++i)
            th[i] = two_pi * static_cast<double>(i) / static_cast<double>(k_.size());
        return th;
    }

    double evaluate(double theta) const {
        const auto m = static_cast<double>(k_.size());
        double pos = std::fmod(theta, two_pi) / (two_pi / m);
        if (pos < 0.0) pos += m;
        const auto i0 = static_cast<std::size_t>(pos) % k_.size();
        const std::size_t i1 = (i0 + 1) % k_.size();
        const double frac = pos - std::floor(pos);
        return (1.0 - frac) * k_[i0] + frac * k_[i1];
    }

    double evaluate(const UnitVec2& n) const { return evaluate(theta_of(n)); }

private:
    std::vector<double> k_;
};

/// Tabulates safety * k0 at M_n uniform angles. The default M_n = 20 matches
/// the construction used in practice; safety = 1 can be raised to compensate
/// interpolation undershoot between grid angles.
inline StabilizerTable build_stabilizer_table(const Anisotropy& a, int m_n = 20,
                                              int grid_size_nhat = 1024,
                                              double safety = 1.0) {
    if (m_n < 1) throw Error("build_stabilizer_table: M_n must be >= 1");
    if (safety < 1.0) throw Error("build_stabilizer_table: safety must be >= 1");
    const StabilityReport rep = check_stability_condition(a, std::max(1024, 4 * m_n));
    if (!rep.holds)
        throw ConditionViolated("3*gamma(n) > gamma(-n) fails at theta = " +
                                std::to_string(rep.worst_angle) + " (margin " +
                                std::to_string(rep.worst_margin) + ")");
    std::vector<double> k(static_cast<std::size_t>(m_n));
    for (int i = 0; i < m_n; ++i) {
        const double th = two_pi * static_cast<double>(i) / static_cast<double>(m_n);
        k[static_cast<std::size_t>(i)] = safety * k0_at(a, normal_at(th), grid_size_nhat);
    }
    return StabilizerTable(std::move(k));
}

} // namespace aniflow
