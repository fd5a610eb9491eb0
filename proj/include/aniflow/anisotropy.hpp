#pragma once

// Surface energy densities gamma(n), their one-homogeneous extensions to
// the plane, and the associated xi-vector (gradient of the extension at n).
//
// Angle convention: theta is the angle with n = (sin theta, -cos theta),
// recovered by theta_of() as atan2(n1, -n2) wrapped to [0, 2*pi).

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "aniflow/errors.hpp"
#include "aniflow/geometry.hpp"

namespace aniflow {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Angle theta in [0, 2*pi) such that n = (sin theta, -cos theta).
inline double theta_of(const UnitVec2& n) {
    double th = std::atan2(n.x, -n.y);
    if (th < 0.0) th += two_pi;
    return th;
}

/// Unit normal at angle theta, per the convention above.
inline UnitVec2 normal_at(double theta) {
    return UnitVec2(std::sin(theta), -std::cos(theta));
}

/// Evaluator bundle for gamma(n) and xi(n). Immutable after construction;
/// evaluation is pure, so instances are freely shared across threads.
class Anisotropy {
public:
    using GammaFn = std::function<double(const UnitVec2&)>;
    using XiFn = std::function<Vec2(const UnitVec2&)>;

    Anisotropy(std::string label, GammaFn gamma, XiFn xi)
        : label_(std::move(label)), gamma_(std::move(gamma)), xi_(std::move(xi)) {}

    double gamma(const UnitVec2& n) const { return gamma_(n); }
    Vec2 xi(const UnitVec2& n) const { return xi_(n); }
    const std::string& label() const { return label_; }

    static Anisotropy isotropic();
    static Anisotropy case1();
    static Anisotropy kfold(double beta, int k, double phase);
    /// Piecewise-linear periodic gamma(theta) on a uniform grid starting at 0;
    /// xi comes from the finite-difference fallback (lower accuracy).
    static Anisotropy from_table(std::vector<double> theta, std::vector<double> gamma);
    static Anisotropy sum(const Anisotropy& a, const Anisotropy& b);
    static Anisotropy scaled(const Anisotropy& a, double c);

private:
    std::string label_;
    GammaFn gamma_;
    XiFn xi_;
};

/// One-homogeneous extension: |p| gamma(p/|p|) for p != 0, and 0 at p = 0.
inline double gamma_extension(const Anisotropy& a, const Vec2& p) {
    const double n = p.norm();
    if (n == 0.0) return 0.0;
    return n * a.gamma(UnitVec2(p.x / n, p.y / n));
}

namespace detail {
inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double case1_gamma(const UnitVec2& n) {
    const double a = 2.5 + 1.5 * sgn(n.x);
    return std::sqrt(a * n.x * n.x + n.y * n.y);
}
}

/// xi for gamma(n) = sqrt((5/2 + 3/2 sgn(n1)) n1^2 + n2^2); the gradient is
/// continuous across n1 = 0, where sgn(0) := 0.
inline Vec2 xi_case1(const UnitVec2& n) {
    const double a = 2.5 + 1.5 * detail::sgn(n.x);
    const double g = detail::case1_gamma(n);
    return Vec2(a * n.x, n.y) / g;
}

/// xi for gamma(theta) = 1 + beta cos(k theta + phase):
/// gamma(theta) n + k beta sin(k theta + phase) tau with tau = n^perp.
inline Vec2 xi_kfold(double beta, int k, double phase, const UnitVec2& n) {
    const double th = theta_of(n);
    const double g = 1.0 + beta * std::cos(k * th + phase);
    const Vec2 tau = n.perp();
    return g * n.vec() + (k * beta * std::sin(k * th + phase)) * tau;
}

/// Finite-difference xi for anisotropies without an analytic gradient:
/// central differences of the one-homogeneous extension at p = n with step
/// 1e-6, then the normal component is replaced so xi . n = gamma(n) exactly.
inline Vec2 xi_numeric(const Anisotropy& a, const UnitVec2& n) {
    constexpr double step = 1e-6;
    const Vec2 p = n.vec();
    const double gxp = gamma_extension(a, p + Vec2(step, 0.0));
    const double gxm = gamma_extension(a, p - Vec2(step, 0.0));
    const double gyp = gamma_extension(a, p + Vec2(0.0, step));
    const double gym = gamma_extension(a, p - Vec2(0.0, step));
    if (!std::isfinite(gxp) || !std::isfinite(gxm) || !std::isfinite(gyp) || !std::isfinite(gym))
        throw NonFinite("xi_numeric: gamma evaluation is not finite");
    Vec2 g((gxp - gxm) / (2.0 * step), (gyp - gym) / (2.0 * step));
    const double gn = a.gamma(n);
    return g + (gn - g.dot(p)) * p;
}

inline Anisotropy Anisotropy::isotropic() {
    return Anisotropy(
        "isotropic",
        [](const UnitVec2&) { return 1.0; },
        [](const UnitVec2& n) { return n.vec(); });
}

inline Anisotropy Anisotropy::case1() {
    return Anisotropy("case1", detail::case1_gamma, xi_case1);
}

inline Anisotropy Anisotropy::kfold(double beta, int k, double phase) {
    if (!(std::abs(beta) < 1.0))
        throw Error("kfold anisotropy requires |beta| < 1");
    if (k < 1) throw Error("kfold anisotropy requires k >= 1");
    std::string label = "kfold(beta=" + std::to_string(beta) + ",k=" + std::to_string(k) +
                        ",phase=" + std::to_string(phase) + ")";
    return Anisotropy(
        std::move(label),
        [beta, k, phase](const UnitVec2& n) {
            return 1.0 + beta * std::cos(k * theta_of(n) + phase);
        },
        [beta, k, phase](const UnitVec2& n) { return xi_kfold(beta, k, phase, n); });
}

/// Weak/strong classification of the k-fold family (metadata only).
inline bool kfold_weakly_anisotropic(double beta) { return std::abs(beta) < 0.125; }

inline Anisotropy Anisotropy::from_table(std::vector<double> theta, std::vector<double> gamma) {
    const std::size_t m = theta.size();
    if (m < 8 || gamma.size() != m)
        throw Error("table anisotropy: need >= 8 matched (theta, gamma) samples");
    const double dt = two_pi / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(theta[i] - static_cast<double>(i) * dt) > 1e-9)
            throw Error("table anisotropy: theta grid must be uniform on [0, 2*pi) from 0");
        if (!(gamma[i] > 0.0) || !std::isfinite(gamma[i]))
            throw Error("table anisotropy: gamma values must be positive and finite");
    }
    auto values = std::make_shared<std::vector<double>>(std::move(gamma));
    auto gamma_fn = [values, dt, m](const UnitVec2& n) {
        const double th = theta_of(n);
        const double pos = th / dt;
        const auto i0 = static_cast<std::size_t>(pos) % m;
        const std::size_t i1 = (i0 + 1) % m;
        const double frac = pos - std::floor(pos);
        return (1.0 - frac) * (*values)[i0] + frac * (*values)[i1];
    };
    auto xi_fn = [gamma_fn](const UnitVec2& n) {
        return xi_numeric(Anisotropy("table", gamma_fn, nullptr), n);
    };
    return Anisotropy("table", gamma_fn, std::move(xi_fn));
}

inline Anisotropy Anisotropy::sum(const Anisotropy& a, const Anisotropy& b) {
    return Anisotropy(
        a.label() + "+" + b.label(),
        [a, b](const UnitVec2& n) { return a.gamma(n) + b.gamma(n); },
        [a, b](const UnitVec2& n) { return a.xi(n) + b.xi(n); });
}

inline Anisotropy Anisotropy::scaled(const Anisotropy& a, double c) {
    if (!(c > 0.0)) throw Error("scaled anisotropy requires c > 0");
    return Anisotropy(
        std::to_string(c) + "*" + a.label(),
        [a, c](const UnitVec2& n) { return c * a.gamma(n); },
        [a, c](const UnitVec2& n) { return c * a.xi(n); });
}

struct StabilityReport {
    bool holds;
    double worst_margin;  // min over the grid of 3*gamma(n) - gamma(-n)
    double worst_angle;
};

/// Evaluates m(theta) = 3*gamma(n(theta)) - gamma(-n(theta)) on a uniform
/// angular grid; the condition holds iff the minimum is positive.
inline StabilityReport check_stability_condition(const Anisotropy& a, int grid_size) {
    if (grid_size < 16) throw Error("check_stability_condition: grid_size must be >= 16");
    double worst = std::numeric_limits<double>::infinity();
    double worst_angle = 0.0;
    for (int i = 0; i < grid_size; ++i) {
        const double th = two_pi * static_cast<double>(i) / static_cast<double>(grid_size);
        const UnitVec2 n = normal_at(th);
        const UnitVec2 minus_n(-n.x, -n.y);
        const double margin = 3.0 * a.gamma(n) - a.gamma(minus_n);
        if (margin < worst) {
            worst = margin;
            worst_angle = th;
        }
    }
    return StabilityReport{worst > 0.0, worst, worst_angle};
}

} // namespace aniflow
