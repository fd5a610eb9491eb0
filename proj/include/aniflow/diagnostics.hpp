#pragma once

// Conserved-quantity and mesh-quality indicators, the manifold distance
// between two closed curves, and convergence-order estimation.
//
// The manifold distance M(G1, G2) = 2|O1 u O2| - |O1| - |O2| is the area of
// the symmetric difference of the enclosed regions. It is computed as
// |O1| + |O2| - 2|O1 n O2| (identical by inclusion-exclusion); the
// intersection area comes from splitting each polygon's edges at all
// crossings with the other polygon and integrating x dy - y dx over the
// boundary fragments that lie inside the other region (both polygons
// canonicalized counterclockwise, unsigned areas throughout). Degenerate
// contacts -- shared vertices, vertex-on-edge, collinear overlapping edges --
// are detected by vertex-to-edge proximity and resolved by a deterministic
// offset of the second polygon at 1e-13 x scale, retried with rotated
// direction until the configuration is clean.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "aniflow/anisotropy.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/geometry.hpp"

namespace aniflow {

/// Per-step indicator row.
struct DiagnosticsRecord {
    double t = 0.0;
    double area = 0.0;
    double energy = 0.0;
    double rel_area_loss = 0.0;  // (A^m - A^0) / A^0, signed
    double norm_energy = 0.0;    // W^m / W^0
    double mesh_ratio = 0.0;
    int newton_iterations = 0;
};

/// W = sum_j |h_j| gamma(n_j).
inline double discrete_energy(const ClosedCurve& curve, const Anisotropy& a) {
    const auto frames = edge_frames(curve);
    double acc = 0.0;
    for (const EdgeFrame& f : frames) acc += f.len * a.gamma(f.n);
    return acc;
}

/// R_gamma = max_j |h_j| gamma(n_j) / min_j |h_j| gamma(n_j) >= 1.
inline double weighted_mesh_ratio(const ClosedCurve& curve, const Anisotropy& a) {
    const auto frames = edge_frames(curve);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const EdgeFrame& f : frames) {
        const double w = f.len * a.gamma(f.n);
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    return hi / lo;
}

namespace polyclip {

inline double signed_area(const std::vector<Vec2>& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += v[i].cross(v[(i + 1) % v.size()]);
    return 0.5 * acc;
}

inline std::vector<Vec2> counterclockwise(std::vector<Vec2> v) {
    if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
    return v;
}

inline double bbox_diagonal(const std::vector<Vec2>& v) {
    double xmin = v[0].x, xmax = xmin, ymin = v[0].y, ymax = ymin;
    for (const Vec2& p : v) {
        xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double l2 = d.squared_norm();
    if (l2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(d) / l2, 0.0, 1.0);
    return (p - (a + t * d)).norm();
}

/// True if the segments p1q1 and p2q2 properly cross (strict orientations).
inline bool segments_properly_cross(const Vec2& p1, const Vec2& q1, const Vec2& p2,
                                    const Vec2& q2) {
    const auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        return (b - a).cross(c - a);
    };
    const double o1 = orient(p1, q1, p2);
    const double o2 = orient(p1, q1, q2);
    const double o3 = orient(p2, q2, p1);
    const double o4 = orient(p2, q2, q1);
    return ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) &&
           ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0));
}

/// Crossing-number test; reliable for points off the boundary.
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

/// Any vertex of one polygon within tol of the other polygon's boundary.
inline bool degenerate_contact(const std::vector<Vec2>& a, const std::vector<Vec2>& b,
                               double tol) {
    const auto near_boundary = [tol](const std::vector<Vec2>& pts, const std::vector<Vec2>& poly) {
        for (const Vec2& p : pts)
            for (std::size_t j = 0; j < poly.size(); ++j)
                if (dist_point_segment(p, poly[j], poly[(j + 1) % poly.size()]) < tol)
                    return true;
        return false;
    };
    return near_boundary(a, b) || near_boundary(b, a);
}

/// Green's-theorem contribution of the fragments of P's boundary strictly
/// inside Q. Both polygons counterclockwise; assumes a clean configuration.
inline double fragment_integral(const std::vector<Vec2>& p, const std::vector<Vec2>& q) {
    double acc = 0.0;
    std::vector<double> ts;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % p.size()];
        const Vec2 d1 = b - a;
        ts.clear();
        ts.push_back(0.0);
        ts.push_back(1.0);
        for (std::size_t j = 0; j < q.size(); ++j) {
            const Vec2& c = q[j];
            const Vec2 d2 = q[(j + 1) % q.size()] - c;
            const double denom = d1.cross(d2);
            if (std::abs(denom) <= 1e-14 * d1.norm() * d2.norm()) continue;
            const Vec2 ca = c - a;
            const double t = ca.cross(d2) / denom;
            const double u = ca.cross(d1) / denom;
            if (t > 0.0 && t < 1.0 && u > 0.0 && u < 1.0) ts.push_back(t);
        }
        std::sort(ts.begin(), ts.end());
        for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
            if (ts[k + 1] - ts[k] <= 1e-12) continue;
            const Vec2 mid = a + (0.5 * (ts[k] + ts[k + 1])) * d1;
            if (!point_in_polygon(mid, q)) continue;
            const Vec2 u0 = a + ts[k] * d1;
            const Vec2 u1 = a + ts[k + 1] * d1;
            acc += 0.5 * u0.cross(u1);
        }
    }
    return acc;
}

/// True when the vertex loops coincide exactly, up to cyclic rotation and
/// traversal direction.
inline bool identical_loops(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
    const std::size_t n = a.size();
    if (b.size() != n) return false;
    for (std::size_t shift = 0; shift < n; ++shift) {
        bool fwd = true, bwd = true;
        for (std::size_t i = 0; i < n && (fwd || bwd); ++i) {
            const Vec2& bi = b[(shift + i) % n];
            if (a[i].x != bi.x || a[i].y != bi.y) fwd = false;
            const Vec2& bj = b[(shift + n - i) % n];
            if (a[i].x != bj.x || a[i].y != bj.y) bwd = false;
        }
        if (fwd || bwd) return true;
    }
    return false;
}

} // namespace polyclip

/// A simple (non-self-intersecting) closed polygon; simplicity is checked on
/// construction by testing all non-adjacent edge pairs for proper crossings.
class SimplePolygon {
public:
    explicit SimplePolygon(std::vector<Vec2> vertices) : v_(std::move(vertices)) {
        if (v_.size() < 3) throw NonSimpleInput("SimplePolygon: fewer than 3 vertices");
        const std::size_t n = v_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent
                if (polyclip::segments_properly_cross(v_[i], v_[(i + 1) % n], v_[j],
                                                      v_[(j + 1) % n]))
                    throw NonSimpleInput("SimplePolygon: edges " + std::to_string(i) + " and " +
                                         std::to_string(j) + " cross");
            }
        }
    }

    explicit SimplePolygon(const ClosedCurve& curve) : SimplePolygon(curve.nodes()) {}

    const std::vector<Vec2>& vertices() const { return v_; }
    double unsigned_area() const { return std::abs(polyclip::signed_area(v_)); }

private:
    std::vector<Vec2> v_;
};

/// Area of the intersection of the enclosed regions.
inline double polygon_intersection_area(const SimplePolygon& p1, const SimplePolygon& p2) {
    using namespace polyclip;
    std::vector<Vec2> a = counterclockwise(p1.vertices());
    std::vector<Vec2> b = counterclockwise(p2.vertices());
    const double scale = std::max(bbox_diagonal(a), bbox_diagonal(b));
    const double tol = 1e-12 * scale;
    for (int attempt = 0; attempt < 12 && degenerate_contact(a, b, tol); ++attempt) {
        const double mag = 1e-13 * scale * static_cast<double>(attempt + 1);
        const double ang = 1.0 + 0.7 * static_cast<double>(attempt);
        const Vec2 delta(mag * std::cos(ang), mag * std::sin(ang));
        b = counterclockwise(p2.vertices());
        for (Vec2& p : b) p += delta;
    }
    const double inter = fragment_integral(a, b) + fragment_integral(b, a);
    return std::max(0.0, inter);
}

/// M(G1, G2) = 2|O1 u O2| - |O1| - |O2|, the area of the symmetric difference.
inline double manifold_distance(const SimplePolygon& p1, const SimplePolygon& p2) {
    if (polyclip::identical_loops(p1.vertices(), p2.vertices())) return 0.0;
    const double inter = polygon_intersection_area(p1, p2);
    return std::max(0.0, p1.unsigned_area() + p2.unsigned_area() - 2.0 * inter);
}

/// Estimated orders log(e_i / e_{i+1}) / log(h_i / h_{i+1}) for entries sorted
/// by decreasing h (log2 of the error ratio when h halves).
inline std::vector<double> convergence_order(const std::vector<std::pair<double, double>>& errors) {
    if (errors.size() < 2) throw Error("convergence_order: need at least 2 entries");
    for (const auto& [h, e] : errors) {
        if (!(e > 0.0)) throw NonPositiveError("convergence_order: errors must be positive");
        if (!(h > 0.0)) throw Error("convergence_order: h must be positive");
    }
    std::vector<double> orders;
    orders.reserve(errors.size() - 1);
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const auto& [h0, e0] = errors[i];
        const auto& [h1, e1] = errors[i + 1];
        if (!(h1 < h0)) throw Error("convergence_order: h must be strictly decreasing");
        orders.push_back(std::log(e0 / e1) / std::log(h0 / h1));
    }
    return orders;
}

} // namespace aniflow
