#pragma once

// Test-only oracles, independent of the library's implementation paths:
// literal two-limit mass-lumped sums, finite-difference gradients and
// Jacobians, a bisection solver for the minimal stabilizing value, a
// grid rasterization of polygon intersections, and seeded generators.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "aniflow/anisotropy.hpp"
#include "aniflow/assembly.hpp"
#include "aniflow/geometry.hpp"
#include "aniflow/stabilization.hpp"

namespace oracle {

using aniflow::Anisotropy;
using aniflow::ClosedCurve;
using aniflow::UnitVec2;
using aniflow::Vec2;

// Literal evaluation of (u, v)^h = (1/2) sum_j |h_j| [(uv)(rho_{j-1}^+) + (uv)(rho_j^-)]
// where each factor is described by its one-sided limits on every edge.
struct TwoLimitFunction {
    std::vector<double> left;   // value at rho_{j-1}^+ on edge j
    std::vector<double> right;  // value at rho_j^- on edge j
};

inline TwoLimitFunction limits_of_nodal(const std::vector<double>& u) {
    const std::size_t n = u.size();
    TwoLimitFunction f{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        f.left[j] = u[(j + n - 1) % n];
        f.right[j] = u[j];
    }
    return f;
}

inline TwoLimitFunction limits_of_edgewise(const std::vector<double>& p) {
    return TwoLimitFunction{p, p};
}

inline double mass_lumped_two_limit(const TwoLimitFunction& u, const TwoLimitFunction& v,
                                    const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Vec2 h = curve.node(static_cast<std::ptrdiff_t>(j)) -
                       curve.node(static_cast<std::ptrdiff_t>(j) - 1);
        acc += h.norm() * (u.left[j] * v.left[j] + u.right[j] * v.right[j]);
    }
    return 0.5 * acc;
}

// Central-difference gradient of the one-homogeneous extension at p = n.
inline Vec2 fd_xi(const Anisotropy& a, const UnitVec2& n, double step = 1e-6) {
    const Vec2 p = n.vec();
    const auto ext = [&](const Vec2& q) { return aniflow::gamma_extension(a, q); };
    return Vec2((ext(p + Vec2(step, 0)) - ext(p - Vec2(step, 0))) / (2 * step),
                (ext(p + Vec2(0, step)) - ext(p - Vec2(0, step))) / (2 * step));
}

// Smallest alpha with P_alpha >= Q found by bisection on the monotone map
// alpha -> P_alpha - Q; returns 0 when already feasible at alpha = 0.
inline double bisect_min_alpha(const Anisotropy& a, const UnitVec2& n, const UnitVec2& nhat) {
    const double gamma_n = a.gamma(n);
    const double t = nhat.dot(n.perp());
    const double q = aniflow::q_fn(a, n, nhat);
    const auto gap = [&](double alpha) { return aniflow::p_alpha(gamma_n, t, alpha) - q; };
    if (gap(0.0) >= 0.0) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (gap(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12) return hi;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < 0.0 ? lo : hi) = mid;
    }
    return hi;
}

// Central-difference Jacobian of a residual map R^n -> R^n.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& u, double step = 1e-7) {
    const Eigen::Index n = u.size();
    Eigen::MatrixXd j(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::VectorXd up = u, dn = u;
        up[c] += step;
        dn[c] -= step;
        j.col(c) = (f(up) - f(dn)) / (2.0 * step);
    }
    return j;
}

inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& v) {
    bool inside = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % v.size()];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

// Intersection area by cell-center sampling on a grid over the overlap of
// the two bounding boxes.
inline double rasterized_intersection_area(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                                           int resolution = 2048) {
    const auto bbox = [](const std::vector<Vec2>& v, Vec2& lo, Vec2& hi) {
        lo = hi = v[0];
        for (const Vec2& p : v) {
            lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
        }
    };
    Vec2 alo, ahi, blo, bhi;
    bbox(a, alo, ahi);
    bbox(b, blo, bhi);
    const Vec2 lo(std::max(alo.x, blo.x), std::max(alo.y, blo.y));
    const Vec2 hi(std::min(ahi.x, bhi.x), std::min(ahi.y, bhi.y));
    if (lo.x >= hi.x || lo.y >= hi.y) return 0.0;
    const double dx = (hi.x - lo.x) / resolution;
    const double dy = (hi.y - lo.y) / resolution;
    long count = 0;
    for (int i = 0; i < resolution; ++i) {
        const double y = lo.y + (i + 0.5) * dy;
        for (int j = 0; j < resolution; ++j) {
            const Vec2 p(lo.x + (j + 0.5) * dx, y);
            if (point_in_polygon(p, a) && point_in_polygon(p, b)) ++count;
        }
    }
    return static_cast<double>(count) * dx * dy;
}

// --- seeded generators -----------------------------------------------------

inline UnitVec2 random_unit(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, aniflow::two_pi);
    return aniflow::normal_at(angle(rng));
}

// Clockwise star-shaped polygon: a regular n-gon with radius and angle jitter.
inline ClosedCurve random_curve(std::mt19937_64& rng, std::size_t n, double base_radius = 1.0,
                                double jitter = 0.25) {
    std::uniform_real_distribution<double> rj(-jitter, jitter);
    std::vector<Vec2> nodes(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double th = -aniflow::two_pi * static_cast<double>(j) / static_cast<double>(n) +
                          0.3 * rj(rng) / static_cast<double>(n);
        const double r = base_radius * (1.0 + rj(rng));
        nodes[j] = Vec2(r * std::cos(th), r * std::sin(th));
    }
    return ClosedCurve(std::move(nodes));
}

// Convex polygon: vertices on a circle at sorted random angles.
inline std::vector<Vec2> random_convex_polygon(std::mt19937_64& rng, int n_vertices,
                                               Vec2 center = {0, 0}, double radius = 1.0) {
    std::uniform_real_distribution<double> angle(0.0, aniflow::two_pi);
    std::vector<double> th(static_cast<std::size_t>(n_vertices));
    for (double& t : th) t = angle(rng);
    std::sort(th.begin(), th.end());
    std::vector<Vec2> v;
    v.reserve(th.size());
    for (double t : th) v.emplace_back(center.x + radius * std::cos(t),
                                       center.y + radius * std::sin(t));
    return v;
}

inline ClosedCurve translated(const ClosedCurve& c, const Vec2& d) {
    std::vector<Vec2> nodes = c.nodes();
    for (Vec2& p : nodes) p += d;
    return ClosedCurve(std::move(nodes));
}

inline ClosedCurve rotated(const ClosedCurve& c, double angle) {
    const double cs = std::cos(angle), sn = std::sin(angle);
    std::vector<Vec2> nodes = c.nodes();
    for (Vec2& p : nodes) p = Vec2(cs * p.x - sn * p.y, sn * p.x + cs * p.y);
    return ClosedCurve(std::move(nodes));
}

inline ClosedCurve reversed(const ClosedCurve& c) {
    std::vector<Vec2> nodes(c.nodes().rbegin(), c.nodes().rend());
    return ClosedCurve(std::move(nodes));
}

inline ClosedCurve scaled_about(const ClosedCurve& c, const Vec2& center, double factor) {
    std::vector<Vec2> nodes = c.nodes();
    for (Vec2& p : nodes) p = center + factor * (p - center);
    return ClosedCurve(std::move(nodes));
}

inline ClosedCurve regular_polygon(std::size_t n, double radius = 1.0) {
    std::vector<Vec2> nodes(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double th = -aniflow::two_pi * static_cast<double>(j) / static_cast<double>(n);
        nodes[j] = Vec2(radius * std::cos(th), radius * std::sin(th));
    }
    return ClosedCurve(std::move(nodes));
}

inline ClosedCurve ellipse_curve(std::size_t n, double a, double b) {
    std::vector<Vec2> nodes(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double rho = static_cast<double>(j) / static_cast<double>(n);
        nodes[j] = Vec2(a * std::cos(aniflow::two_pi * rho), -b * std::sin(aniflow::two_pi * rho));
    }
    return ClosedCurve(std::move(nodes));
}

} // namespace oracle
