#pragma once

// Surface energy matrix G_k(n) and the coupled (X, mu) residual/Jacobian
// assembly shared by the three flows.
//
// Unknown layout (size 3N): x_0..x_{N-1}, y_0..y_{N-1}, mu_0..mu_{N-1}.
// Row layout: rows 0..N-1 test the velocity equation against the nodal hat
// functions; rows N+i and 2N+i test the mu-equation against the x- and
// y-coordinate hat functions of node i.
//
// Everything lagged lives on the old curve Gamma^m: edge lengths, normals,
// G_k(n^m) and all mass-lumped weights. The unknowns enter through
// X^{m+1}, mu^{m+1} and (when fully implicit) the half-step normal, whose
// hat-weighted form at node i reduces to
//   w_i = -(1/4) (X^m_{i+1} - X^m_{i-1} + X^{m+1}_{i+1} - X^{m+1}_{i-1})^perp,
// linear in the new nodes. The semi-implicit variant freezes w_i at its
// old-curve value, which makes the whole system linear.
//
// For the area-conserved flow, lambda^{m+1/2} = (mu,1)^h / (1,1)^h is
// eliminated inline; its Jacobian contribution is the rank-one outer product
// rank_one_u * rank_one_v^T on top of the periodic-banded part.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "aniflow/anisotropy.hpp"
#include "aniflow/errors.hpp"
#include "aniflow/flows.hpp"
#include "aniflow/geometry.hpp"
#include "aniflow/stabilization.hpp"

namespace aniflow {

struct Mat2 {
    double xx = 0.0, xy = 0.0, yx = 0.0, yy = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr Mat2 outer(const Vec2& u, const Vec2& v) {
        return {u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y};
    }

    constexpr Mat2 operator+(const Mat2& o) const {
        return {xx + o.xx, xy + o.xy, yx + o.yx, yy + o.yy};
    }
    constexpr Mat2 operator-(const Mat2& o) const {
        return {xx - o.xx, xy - o.xy, yx - o.yx, yy - o.yy};
    }
    constexpr Mat2 operator*(double s) const { return {xx * s, xy * s, yx * s, yy * s}; }
    constexpr Vec2 operator*(const Vec2& v) const {
        return {xx * v.x + xy * v.y, yx * v.x + yy * v.y};
    }
    constexpr Mat2 transpose() const { return {xx, yx, xy, yy}; }
};

inline constexpr Mat2 operator*(double s, const Mat2& m) { return m * s; }

/// G_k(n) = gamma(n) I - n xi^T + xi n^T + k n n^T.
inline Mat2 g_matrix(const Anisotropy& a, double k, const UnitVec2& n) {
    const Vec2 nv = n.vec();
    const Vec2 xi = a.xi(n);
    return a.gamma(n) * Mat2::identity() - Mat2::outer(nv, xi) + Mat2::outer(xi, nv) +
           k * Mat2::outer(nv, nv);
}

/// The split G_k = G_k^(s) + G^(a): symmetric positive definite part
/// gamma I + k n n^T and anti-symmetric part xi n^T - n xi^T.
struct GkSplit {
    Mat2 sym;
    Mat2 anti;
};

inline GkSplit g_matrix_split(const Anisotropy& a, double k, const UnitVec2& n) {
    const Vec2 nv = n.vec();
    const Vec2 xi = a.xi(n);
    return GkSplit{a.gamma(n) * Mat2::identity() + k * Mat2::outer(nv, nv),
                   Mat2::outer(xi, nv) - Mat2::outer(nv, xi)};
}

/// |G_k(n) tau - (gamma(n) tau - (xi . tau) n)|; zero up to rounding for any
/// admissible anisotropy, any k (the stabilizing term annihilates tau).
inline double g_times_tangent_identity_check(const Anisotropy& a, double k, const UnitVec2& n) {
    const Vec2 tau = n.perp();
    const Vec2 lhs = g_matrix(a, k, n) * tau;
    const Vec2 rhs = a.gamma(n) * tau - a.xi(n).dot(tau) * n.vec();
    return (lhs - rhs).norm();
}

/// Analytic Jacobian as a periodic-banded sparse part plus an optional
/// rank-one outer product (area-conserved flow only).
struct JacobianMatrix {
    Eigen::SparseMatrix<double> banded;
    bool has_rank_one = false;
    Eigen::VectorXd rank_one_u;
    Eigen::VectorXd rank_one_v;

    /// Materializes banded + u v^T (test and small-system use).
    Eigen::SparseMatrix<double> full() const {
        if (!has_rank_one) return banded;
        Eigen::SparseMatrix<double> m = banded;
        std::vector<Eigen::Triplet<double>> t;
        for (int i = 0; i < rank_one_u.size(); ++i) {
            if (rank_one_u[i] == 0.0) continue;
            for (int j = 0; j < rank_one_v.size(); ++j)
                if (rank_one_v[j] != 0.0)
                    t.emplace_back(i, j, rank_one_u[i] * rank_one_v[j]);
        }
        Eigen::SparseMatrix<double> r(banded.rows(), banded.cols());
        r.setFromTriplets(t.begin(), t.end());
        return m + r;
    }
};

/// One time step's lagged data and the residual/Jacobian it induces.
/// Pure given its inputs; build once per step, evaluate many times.
class SchemeSystem {
public:
    SchemeSystem(FlowKind flow, const ClosedCurve& old_curve, const Anisotropy& a,
                 const StabilizerTable& ktable, double tau, bool implicit)
        : flow_(flow), tau_(tau), implicit_(implicit), n_(old_curve.size()),
          old_nodes_(old_curve.nodes()) {
        if (!(tau > 0.0)) throw Error("SchemeSystem: tau must be positive");
        const auto frames = edge_frames(old_curve);
        len_.resize(n_);
        g_.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            len_[j] = frames[j].len;
            g_[j] = g_matrix(a, ktable.evaluate(frames[j].n), frames[j].n);
        }
        mass_.resize(n_);
        perimeter_ = 0.0;
        chord_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            mass_[i] = 0.5 * (len_[i] + len_[(i + 1) % n_]);
            perimeter_ += len_[i];
            chord_[i] = node(i + 1) - node(i - 1);  // X^m_{i+1} - X^m_{i-1}
        }
    }

    std::size_t nodes() const { return n_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(3 * n_); }

    /// Packs (nodes, mu) into the unknown layout.
    Eigen::VectorXd pack(const std::vector<Vec2>& nodes, const NodalScalar& mu) const {
        if (nodes.size() != n_ || mu.size() != n_) throw Error("pack: size mismatch");
        Eigen::VectorXd u(size());
        for (std::size_t i = 0; i < n_; ++i) {
            u[static_cast<Eigen::Index>(i)] = nodes[i].x;
            u[static_cast<Eigen::Index>(n_ + i)] = nodes[i].y;
            u[static_cast<Eigen::Index>(2 * n_ + i)] = mu[i];
        }
        return u;
    }

    std::vector<Vec2> unpack_nodes(const Eigen::VectorXd& u) const {
        std::vector<Vec2> nodes(n_);
        for (std::size_t i = 0; i < n_; ++i)
            nodes[i] = Vec2(u[static_cast<Eigen::Index>(i)], u[static_cast<Eigen::Index>(n_ + i)]);
        return nodes;
    }

    NodalScalar unpack_mu(const Eigen::VectorXd& u) const {
        NodalScalar mu(n_);
        for (std::size_t i = 0; i < n_; ++i) mu[i] = u[static_cast<Eigen::Index>(2 * n_ + i)];
        return mu;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& u) const {
        check_size(u);
        Eigen::VectorXd f(size());
        const double lambda = flow_ == FlowKind::AreaConservedCurvatureFlow
                                  ? weighted_mu_mean(u)
                                  : 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const Vec2 w = w_at(u, i);
            const Vec2 d = (new_node(u, i) - old_nodes_[i]) / tau_;
            const double mu_i = mu_at(u, i);

            double row1 = w.dot(d);
            switch (flow_) {
                case FlowKind::SurfaceDiffusion: {
                    const std::size_t ip = (i + 1) % n_;
                    row1 += (mu_i - mu_at(u, (i + n_ - 1) % n_)) / len_[i] +
                            (mu_i - mu_at(u, ip)) / len_[ip];
                    break;
                }
                case FlowKind::CurvatureFlow:
                    row1 += mass_[i] * mu_i;
                    break;
                case FlowKind::AreaConservedCurvatureFlow:
                    row1 += mass_[i] * (mu_i - lambda);
                    break;
            }
            f[static_cast<Eigen::Index>(i)] = row1;

            const std::size_t ip = (i + 1) % n_;
            const Vec2 hhat_i = new_node(u, i) - new_node(u, (i + n_ - 1) % n_);
            const Vec2 hhat_ip = new_node(u, ip) - new_node(u, i);
            const Vec2 row2 = mu_i * w - (g_[i] * hhat_i) / len_[i] + (g_[ip] * hhat_ip) / len_[ip];
            f[static_cast<Eigen::Index>(n_ + i)] = row2.x;
            f[static_cast<Eigen::Index>(2 * n_ + i)] = row2.y;
        }
        return f;
    }

    JacobianMatrix jacobian(const Eigen::VectorXd& u) const {
        check_size(u);
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(23 * n_);
        const auto xcol = [this](std::size_t i) { return static_cast<int>(i % n_); };
        const auto ycol = [this](std::size_t i) { return static_cast<int>(n_ + i % n_); };
        const auto mucol = [this](std::size_t i) { return static_cast<int>(2 * n_ + i % n_); };

        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t im = (i + n_ - 1) % n_;
            const std::size_t ip = (i + 1) % n_;
            const int row1 = static_cast<int>(i);
            const int rx = static_cast<int>(n_ + i);
            const int ry = static_cast<int>(2 * n_ + i);

            const Vec2 w = w_at(u, i);
            const Vec2 d = (new_node(u, i) - old_nodes_[i]) / tau_;
            const double mu_i = mu_at(u, i);

            // Row 1: w_i . D_i.
            t.emplace_back(row1, xcol(i), w.x / tau_);
            t.emplace_back(row1, ycol(i), w.y / tau_);
            if (implicit_) {
                t.emplace_back(row1, xcol(ip), 0.25 * d.y);
                t.emplace_back(row1, xcol(im), -0.25 * d.y);
                t.emplace_back(row1, ycol(ip), -0.25 * d.x);
                t.emplace_back(row1, ycol(im), 0.25 * d.x);
            }
            switch (flow_) {
                case FlowKind::SurfaceDiffusion:
                    t.emplace_back(row1, mucol(i), 1.0 / len_[i] + 1.0 / len_[ip]);
                    t.emplace_back(row1, mucol(im), -1.0 / len_[i]);
                    t.emplace_back(row1, mucol(ip), -1.0 / len_[ip]);
                    break;
                case FlowKind::CurvatureFlow:
                case FlowKind::AreaConservedCurvatureFlow:
                    t.emplace_back(row1, mucol(i), mass_[i]);
                    break;
            }

            // Rows 2: mu_i w_i - G_i hhat_i/|h_i| + G_{i+1} hhat_{i+1}/|h_{i+1}|.
            t.emplace_back(rx, mucol(i), w.x);
            t.emplace_back(ry, mucol(i), w.y);
            if (implicit_) {
                t.emplace_back(ry, xcol(ip), 0.25 * mu_i);
                t.emplace_back(ry, xcol(im), -0.25 * mu_i);
                t.emplace_back(rx, ycol(ip), -0.25 * mu_i);
                t.emplace_back(rx, ycol(im), 0.25 * mu_i);
            }
            const Mat2 gi = g_[i] * (1.0 / len_[i]);
            const Mat2 gip = g_[ip] * (1.0 / len_[ip]);
            add_block(t, rx, ry, xcol(i), ycol(i), (gi + gip) * -1.0);
            add_block(t, rx, ry, xcol(im), ycol(im), gi);
            add_block(t, rx, ry, xcol(ip), ycol(ip), gip);
        }

        JacobianMatrix jm;
        jm.banded.resize(size(), size());
        jm.banded.setFromTriplets(t.begin(), t.end());
        if (flow_ == FlowKind::AreaConservedCurvatureFlow) {
            jm.has_rank_one = true;
            jm.rank_one_u = Eigen::VectorXd::Zero(size());
            jm.rank_one_v = Eigen::VectorXd::Zero(size());
            for (std::size_t i = 0; i < n_; ++i) {
                jm.rank_one_u[static_cast<Eigen::Index>(i)] = -mass_[i] / perimeter_;
                jm.rank_one_v[static_cast<Eigen::Index>(2 * n_ + i)] = mass_[i];
            }
        }
        return jm;
    }

    /// (mu, 1)^h / (1, 1)^h of the packed iterate (area-conserved flow).
    double weighted_mu_mean(const Eigen::VectorXd& u) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) acc += mass_[i] * mu_at(u, i);
        return acc / perimeter_;
    }

private:
    void check_size(const Eigen::VectorXd& u) const {
        if (u.size() != size()) throw Error("SchemeSystem: iterate has wrong size");
    }

    const Vec2& node(std::ptrdiff_t i) const {
        const auto n = static_cast<std::ptrdiff_t>(n_);
        return old_nodes_[static_cast<std::size_t>(((i % n) + n) % n)];
    }
    Vec2 new_node(const Eigen::VectorXd& u, std::size_t i) const {
        return Vec2(u[static_cast<Eigen::Index>(i)], u[static_cast<Eigen::Index>(n_ + i)]);
    }
    double mu_at(const Eigen::VectorXd& u, std::size_t i) const {
        return u[static_cast<Eigen::Index>(2 * n_ + i)];
    }

    // Hat-weighted half-step normal at node i; reduces to the frozen old-curve
    // value when semi-implicit or when the new nodes equal the old ones.
    Vec2 w_at(const Eigen::VectorXd& u, std::size_t i) const {
        if (!implicit_) return -0.5 * chord_[i].perp();
        const std::size_t im = (i + n_ - 1) % n_;
        const std::size_t ip = (i + 1) % n_;
        const Vec2 v = chord_[i] + new_node(u, ip) - new_node(u, im);
        return -0.25 * v.perp();
    }

    static void add_block(std::vector<Eigen::Triplet<double>>& t, int rx, int ry, int cx, int cy,
                          const Mat2& m) {
        t.emplace_back(rx, cx, m.xx);
        t.emplace_back(rx, cy, m.xy);
        t.emplace_back(ry, cx, m.yx);
        t.emplace_back(ry, cy, m.yy);
    }

    FlowKind flow_;
    double tau_;
    bool implicit_;
    std::size_t n_;
    std::vector<Vec2> old_nodes_;
    EdgeScalars len_;       // |h^m_j|
    std::vector<Mat2> g_;   // G_k(n^m_j)
    NodalScalar mass_;      // (|h^m_i| + |h^m_{i+1}|)/2
    double perimeter_;
    std::vector<Vec2> chord_;  // X^m_{i+1} - X^m_{i-1}
};

inline Eigen::VectorXd assemble_residual(FlowKind flow, const ClosedCurve& old_curve,
                                         const std::vector<Vec2>& guess_nodes,
                                         const NodalScalar& guess_mu, const Anisotropy& a,
                                         const StabilizerTable& ktable, double tau,
                                         bool implicit = true) {
    const SchemeSystem sys(flow, old_curve, a, ktable, tau, implicit);
    return sys.residual(sys.pack(guess_nodes, guess_mu));
}

inline JacobianMatrix assemble_jacobian(FlowKind flow, const ClosedCurve& old_curve,
                                        const std::vector<Vec2>& guess_nodes,
                                        const NodalScalar& guess_mu, const Anisotropy& a,
                                        const StabilizerTable& ktable, double tau,
                                        bool implicit = true) {
    const SchemeSystem sys(flow, old_curve, a, ktable, tau, implicit);
    return sys.jacobian(sys.pack(guess_nodes, guess_mu));
}

/// Least-squares mu from the weak relation (mu n, omega)^h = (G_k ds X, ds omega)^h
/// on a fixed curve. The normal-equation matrix is diagonal (the 2x1 blocks
/// decouple per node), so mu_i = (w_i . b_i) / |w_i|^2. Diagnostics only.
inline NodalScalar compute_mu_diagnostic(const ClosedCurve& curve, const Anisotropy& a,
                                         const StabilizerTable& ktable) {
    const std::size_t n = curve.size();
    const auto frames = edge_frames(curve);
    std::vector<Mat2> g(n);
    for (std::size_t j = 0; j < n; ++j)
        g[j] = g_matrix(a, ktable.evaluate(frames[j].n), frames[j].n);
    const double tiny = detail::degenerate_edge_threshold(curve);
    NodalScalar mu(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1) % n;
        const Vec2 w = 0.5 * (frames[i].len * frames[i].n.vec() +
                              frames[ip].len * frames[ip].n.vec());
        const Vec2 b = g[i] * frames[i].tau.vec() - g[ip] * frames[ip].tau.vec();
        const double w2 = w.squared_norm();
        if (!(w2 > tiny * tiny))
            throw RankDeficient("compute_mu_diagnostic: vanishing normal weight at node " +
                                std::to_string(i));
        mu[i] = w.dot(b) / w2;
    }
    return mu;
}

} // namespace aniflow
