#pragma once

// Discrete closed curves: periodic node storage, per-edge frames,
// mass-lumped inner products and discrete arc-length derivatives.
//
// Conventions (used consistently across the library):
//   * perp() is the clockwise rotation (x,y) -> (y,-x).
//   * Curves are traversed clockwise; the outward unit normal of edge j
//     (joining node j-1 to node j) is n_j = -h_j^perp / |h_j|, and the
//     enclosed-area formula below is then positive.
//   * Storage holds N distinct nodes; indexing is periodic (j mod N),
//     there is never a duplicated closing node.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "aniflow/errors.hpp"

namespace aniflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x, double y) : x(x), y(y) {}

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    /// Clockwise quarter turn: (x,y) -> (y,-x).
    constexpr Vec2 perp() const { return {y, -x}; }
    /// z-component of the cross product this x o.
    constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double squared_norm() const { return x * x + y * y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// A vector of unit length (within 1e-12). Construct via of() or normalized().
struct UnitVec2 {
    double x;
    double y;

    UnitVec2(double x, double y) : x(x), y(y) {
        const double n2 = x * x + y * y;
        if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 2.5e-12)
            throw Error("UnitVec2: components are not unit length");
    }

    /// Normalizes v; throws on zero or non-finite input.
    static UnitVec2 of(const Vec2& v) {
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw NonFinite("UnitVec2::of: zero or non-finite vector");
        return UnitVec2(v.x / n, v.y / n);
    }

    constexpr Vec2 vec() const { return {x, y}; }
    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    constexpr double dot(const UnitVec2& o) const { return x * o.x + y * o.y; }
    constexpr Vec2 perp() const { return {y, -x}; }
};

using NodalScalar = std::vector<double>;
using NodalVector = std::vector<Vec2>;
using EdgeScalars = std::vector<double>;
using EdgeVectors = std::vector<Vec2>;

/// N-node periodic polyline. Node validity (N >= 3, finite, distinct
/// consecutive nodes) is checked on construction; orientation is not, so
/// both traversals can be represented (see ensure_clockwise).
class ClosedCurve {
public:
    explicit ClosedCurve(std::vector<Vec2> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 3)
            throw Error("ClosedCurve: need at least 3 nodes, got " +
                        std::to_string(nodes_.size()));
        for (const Vec2& p : nodes_)
            if (!p.finite()) throw NonFinite("ClosedCurve: non-finite node");
        for (std::size_t j = 0; j < nodes_.size(); ++j) {
            const Vec2& a = nodes_[j];
            const Vec2& b = nodes_[(j + 1) % nodes_.size()];
            if (a.x == b.x && a.y == b.y)
                throw DegenerateEdge("ClosedCurve: duplicated consecutive node at index " +
                                     std::to_string(j));
        }
    }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<Vec2>& nodes() const { return nodes_; }

    /// Periodic access: node(j) == node(j mod N) for any integer j.
    const Vec2& node(std::ptrdiff_t j) const {
        const auto n = static_cast<std::ptrdiff_t>(nodes_.size());
        return nodes_[static_cast<std::size_t>(((j % n) + n) % n)];
    }

    double bounding_box_diagonal() const {
        double xmin = nodes_[0].x, xmax = xmin, ymin = nodes_[0].y, ymax = ymin;
        for (const Vec2& p : nodes_) {
            xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
        }
        return std::hypot(xmax - xmin, ymax - ymin);
    }

private:
    std::vector<Vec2> nodes_;
};

/// Edge vector, length, outward normal and tangent of one edge.
struct EdgeFrame {
    Vec2 h;        // X_j - X_{j-1}
    double len;    // |h| > 0
    UnitVec2 n;    // -h^perp / |h|, outward for clockwise curves
    UnitVec2 tau;  // n^perp = h / |h|
};

namespace detail {
inline double degenerate_edge_threshold(const ClosedCurve& curve) {
    return 1e-14 * curve.bounding_box_diagonal();
}
}

/// Lengths |h_j| of all N edges; edge j joins node j-1 to node j.
inline EdgeScalars edge_lengths(const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    const double tiny = detail::degenerate_edge_threshold(curve);
    EdgeScalars len(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Vec2 h = curve.node(static_cast<std::ptrdiff_t>(j)) -
                       curve.node(static_cast<std::ptrdiff_t>(j) - 1);
        len[j] = h.norm();
        if (!(len[j] > tiny))
            throw DegenerateEdge("edge " + std::to_string(j) + " is degenerate (|h| = " +
                                 std::to_string(len[j]) + ")");
    }
    return len;
}

/// N frames; frame j is built from h_j = X_j - X_{j-1}.
inline std::vector<EdgeFrame> edge_frames(const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    const double tiny = detail::degenerate_edge_threshold(curve);
    std::vector<EdgeFrame> frames;
    frames.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Vec2 h = curve.node(static_cast<std::ptrdiff_t>(j)) -
                       curve.node(static_cast<std::ptrdiff_t>(j) - 1);
        const double len = h.norm();
        if (!(len > tiny))
            throw DegenerateEdge("edge " + std::to_string(j) + " is degenerate");
        const Vec2 nv = -h.perp() / len;
        const UnitVec2 normal(nv.x, nv.y);
        frames.push_back(EdgeFrame{h, len, normal, UnitVec2(nv.y, -nv.x)});
    }
    return frames;
}

/// Enclosed area (1/2) sum_j (x_j - x_{j-1})(y_j + y_{j-1});
/// positive for clockwise traversal.
inline double polygon_area(const ClosedCurve& curve) {
    const auto n = static_cast<std::ptrdiff_t>(curve.size());
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const Vec2& a = curve.node(j - 1);
        const Vec2& b = curve.node(j);
        acc += (b.x - a.x) * (b.y + a.y);
    }
    return 0.5 * acc;
}

inline double perimeter(const ClosedCurve& curve) {
    const EdgeScalars len = edge_lengths(curve);
    double acc = 0.0;
    for (double l : len) acc += l;
    return acc;
}

/// Returns the curve with node order normalized so polygon_area > 0.
inline ClosedCurve ensure_clockwise(const ClosedCurve& curve) {
    const double area = polygon_area(curve);
    if (std::abs(area) < 1e-14)
        throw ZeroArea("ensure_clockwise: |area| < 1e-14, orientation undefined");
    if (area > 0.0) return curve;
    std::vector<Vec2> reversed(curve.nodes().rbegin(), curve.nodes().rend());
    return ClosedCurve(std::move(reversed));
}

/// Mass-lumped inner product of two continuous piecewise-linear functions:
/// (1/2) sum_j |h_j| (u_{j-1} v_{j-1} + u_j v_j).
inline double mass_lumped_inner_scalar(const NodalScalar& u, const NodalScalar& v,
                                       const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    if (u.size() != n || v.size() != n)
        throw Error("mass_lumped_inner_scalar: size mismatch");
    const EdgeScalars len = edge_lengths(curve);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t prev = (j + n - 1) % n;
        acc += len[j] * (u[prev] * v[prev] + u[j] * v[j]);
    }
    return 0.5 * acc;
}

/// Mass-lumped inner product of two piecewise-constant (per-edge) functions:
/// sum_j |h_j| p_j q_j (both one-sided limits equal the edge value).
inline double mass_lumped_inner_edgewise(const EdgeScalars& p, const EdgeScalars& q,
                                         const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    if (p.size() != n || q.size() != n)
        throw Error("mass_lumped_inner_edgewise: size mismatch");
    const EdgeScalars len = edge_lengths(curve);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += len[j] * p[j] * q[j];
    return acc;
}

/// Discrete arc-length derivative: edge j carries (f_j - f_{j-1}) / |h_j|.
inline EdgeScalars discrete_ds(const NodalScalar& f, const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    if (f.size() != n) throw Error("discrete_ds: size mismatch");
    const EdgeScalars len = edge_lengths(curve);
    EdgeScalars out(n);
    for (std::size_t j = 0; j < n; ++j)
        out[j] = (f[j] - f[(j + n - 1) % n]) / len[j];
    return out;
}

inline EdgeVectors discrete_ds(const NodalVector& f, const ClosedCurve& curve) {
    const std::size_t n = curve.size();
    if (f.size() != n) throw Error("discrete_ds: size mismatch");
    const EdgeScalars len = edge_lengths(curve);
    EdgeVectors out(n);
    for (std::size_t j = 0; j < n; ++j)
        out[j] = (f[j] - f[(j + n - 1) % n]) / len[j];
    return out;
}

/// Half-step normal n^{m+1/2}_j = -(1/2)(h^m_j + h^{m+1}_j)^perp / |h^m_j|.
/// Generally not unit length; must never be re-normalized (the discrete
/// area-conservation identity depends on this exact form).
inline EdgeVectors half_step_normal(const ClosedCurve& old_curve, const ClosedCurve& new_curve) {
    const std::size_t n = old_curve.size();
    if (new_curve.size() != n) throw Error("half_step_normal: size mismatch");
    const double tiny = detail::degenerate_edge_threshold(old_curve);
    EdgeVectors out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto sj = static_cast<std::ptrdiff_t>(j);
        const Vec2 h_old = old_curve.node(sj) - old_curve.node(sj - 1);
        const Vec2 h_new = new_curve.node(sj) - new_curve.node(sj - 1);
        const double len = h_old.norm();
        if (!(len > tiny))
            throw DegenerateEdge("half_step_normal: old edge " + std::to_string(j) +
                                 " is degenerate");
        out[j] = -0.5 * (h_old + h_new).perp() / len;
    }
    return out;
}

} // namespace aniflow
