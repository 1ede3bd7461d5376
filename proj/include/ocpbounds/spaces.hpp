#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ocpbounds/mesh.hpp"
#include "ocpbounds/quadrature.hpp"

namespace ocpb {

enum class Family { lagrange, raviart_thomas, discontinuous };

// Discrete function space on a triangulation.
//
// Supported: Lagrange p=1,2 (continuous, homogeneous Dirichlet mask on the
// whole boundary), Raviart-Thomas order 1,2 (H(div)-conforming; order 1 is
// the lowest-order family with one normal moment per edge), and
// discontinuous P1 (three independent vertex values per triangle).
struct FeSpace {
    const Mesh* mesh = nullptr;
    Family family{};
    int order = 0;
    int n_dofs = 0;
    int local_dofs = 0;
    std::vector<int> dof_map;               // index: t * local_dofs + i
    std::vector<unsigned char> dirichlet;   // lagrange only (size n_dofs)

    int dof(int t, int i) const { return dof_map[static_cast<std::size_t>(t) * local_dofs + i]; }
    bool is_scalar() const { return family != Family::raviart_thomas; }
};

inline FeSpace build_space(const Mesh& m, Family family, int order) {
    FeSpace s;
    s.mesh = &m;
    s.family = family;
    s.order = order;
    const int nt = m.n_triangles();
    if (family == Family::lagrange && order == 1) {
        s.local_dofs = 3;
        s.n_dofs = m.n_vertices();
        s.dof_map.resize(static_cast<std::size_t>(nt) * 3);
        for (int t = 0; t < nt; ++t)
            for (int i = 0; i < 3; ++i) s.dof_map[static_cast<std::size_t>(t) * 3 + i] = m.triangles[t][i];
        s.dirichlet.assign(s.n_dofs, 0);
        for (int v = 0; v < m.n_vertices(); ++v) s.dirichlet[v] = m.boundary_vertex[v];
    } else if (family == Family::lagrange && order == 2) {
        s.local_dofs = 6;
        s.n_dofs = m.n_vertices() + m.n_edges();
        s.dof_map.resize(static_cast<std::size_t>(nt) * 6);
        for (int t = 0; t < nt; ++t) {
            for (int i = 0; i < 3; ++i) s.dof_map[static_cast<std::size_t>(t) * 6 + i] = m.triangles[t][i];
            for (int i = 0; i < 3; ++i)
                s.dof_map[static_cast<std::size_t>(t) * 6 + 3 + i] = m.n_vertices() + m.tri_edges[t][i];
        }
        s.dirichlet.assign(s.n_dofs, 0);
        for (int v = 0; v < m.n_vertices(); ++v) s.dirichlet[v] = m.boundary_vertex[v];
        for (int e = 0; e < m.n_edges(); ++e) s.dirichlet[m.n_vertices() + e] = m.boundary_edge[e];
    } else if (family == Family::discontinuous && order == 1) {
        s.local_dofs = 3;
        s.n_dofs = 3 * nt;
        s.dof_map.resize(static_cast<std::size_t>(nt) * 3);
        for (int t = 0; t < nt; ++t)
            for (int i = 0; i < 3; ++i) s.dof_map[static_cast<std::size_t>(t) * 3 + i] = 3 * t + i;
    } else if (family == Family::raviart_thomas && order == 1) {
        s.local_dofs = 3;
        s.n_dofs = m.n_edges();
        s.dof_map.resize(static_cast<std::size_t>(nt) * 3);
        for (int t = 0; t < nt; ++t)
            for (int i = 0; i < 3; ++i) s.dof_map[static_cast<std::size_t>(t) * 3 + i] = m.tri_edges[t][i];
    } else if (family == Family::raviart_thomas && order == 2) {
        s.local_dofs = 8;
        s.n_dofs = 2 * m.n_edges() + 2 * nt;
        s.dof_map.resize(static_cast<std::size_t>(nt) * 8);
        for (int t = 0; t < nt; ++t) {
            for (int i = 0; i < 3; ++i) {
                int e = m.tri_edges[t][i];
                s.dof_map[static_cast<std::size_t>(t) * 8 + 2 * i] = 2 * e;
                s.dof_map[static_cast<std::size_t>(t) * 8 + 2 * i + 1] = 2 * e + 1;
            }
            s.dof_map[static_cast<std::size_t>(t) * 8 + 6] = 2 * m.n_edges() + 2 * t;
            s.dof_map[static_cast<std::size_t>(t) * 8 + 7] = 2 * m.n_edges() + 2 * t + 1;
        }
    } else {
        throw std::invalid_argument("build_space: unsupported (family, order) pair");
    }
    return s;
}

struct FeFunction {
    const FeSpace* space = nullptr;
    Eigen::VectorXd coeffs;

    FeFunction() = default;
    explicit FeFunction(const FeSpace& s)
        : space(&s), coeffs(Eigen::VectorXd::Zero(s.n_dofs)) {}
};

namespace detail {

inline void scalar_basis(const FeSpace& s, const std::array<double, 3>& b, double* vals) {
    if (s.order == 1) {
        vals[0] = b[0];
        vals[1] = b[1];
        vals[2] = b[2];
        return;
    }
    for (int i = 0; i < 3; ++i) vals[i] = b[i] * (2.0 * b[i] - 1.0);
    for (int i = 0; i < 3; ++i) vals[3 + i] = 4.0 * b[(i + 1) % 3] * b[(i + 2) % 3];
}

inline void scalar_basis_grad(const FeSpace& s, const std::array<double, 3>& b,
                              const std::array<Vec2, 3>& gl, Vec2* grads) {
    if (s.order == 1) {
        grads[0] = gl[0];
        grads[1] = gl[1];
        grads[2] = gl[2];
        return;
    }
    for (int i = 0; i < 3; ++i) grads[i] = (4.0 * b[i] - 1.0) * gl[i];
    for (int i = 0; i < 3; ++i) {
        int j = (i + 1) % 3, k = (i + 2) % 3;
        grads[3 + i] = 4.0 * (b[k] * gl[j] + b[j] * gl[k]);
    }
}

}  // namespace detail

inline double eval(const FeFunction& u, int t, const std::array<double, 3>& bary) {
    const FeSpace& s = *u.space;
    double vals[6];
    detail::scalar_basis(s, bary, vals);
    double r = 0;
    for (int i = 0; i < s.local_dofs; ++i) r += u.coeffs[s.dof(t, i)] * vals[i];
    return r;
}

inline Vec2 eval_grad(const FeFunction& u, int t, const std::array<double, 3>& bary) {
    const FeSpace& s = *u.space;
    auto gl = s.mesh->bary_gradients(t);
    Vec2 grads[6];
    detail::scalar_basis_grad(s, bary, gl, grads);
    Vec2 r{0, 0};
    for (int i = 0; i < s.local_dofs; ++i) {
        double c = u.coeffs[s.dof(t, i)];
        r.x += c * grads[i].x;
        r.y += c * grads[i].y;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Raviart-Thomas cell basis.
//
// The nodal basis is built per physical triangle as the dual of globally
// defined degrees of freedom, so normal components automatically match
// across interior edges:
//   edge e = (a,b), a < b:  normal n_e = rotate(unit tangent a->b, -90deg),
//     l_{e,0}(tau) = (1/|e|) int_e tau.n ds
//     l_{e,1}(tau) = (1/|e|) int_e tau.n (2s-1) ds        (order 2 only)
//   interior (order 2):  (1/|T|) int_T tau_x,  (1/|T|) int_T tau_y.
// Monomials use centered local coordinates (x - xc)/h for conditioning.
// ---------------------------------------------------------------------------
struct RtCellBasis {
    int n = 0;       // 3 (order 1) or 8 (order 2)
    Vec2 center{};
    double h = 1.0;
    Eigen::Matrix<double, 8, 8> coef;  // basis_j = sum_m coef(m, j) * mono_m

    Vec2 mono(int m, Vec2 p) const {
        double xi = (p.x - center.x) / h, eta = (p.y - center.y) / h;
        switch (m) {
            case 0: return {1, 0};
            case 1: return {0, 1};
            case 2: return n == 3 ? Vec2{xi, eta} : Vec2{xi, 0};
            case 3: return {eta, 0};
            case 4: return {0, xi};
            case 5: return {0, eta};
            case 6: return {xi * xi, xi * eta};
            default: return {xi * eta, eta * eta};
        }
    }
    double mono_div(int m, Vec2 p) const {
        double xi = (p.x - center.x) / h, eta = (p.y - center.y) / h;
        switch (m) {
            case 0:
            case 1: return 0;
            case 2: return n == 3 ? 2.0 / h : 1.0 / h;
            case 3:
            case 4: return 0;
            case 5: return 1.0 / h;
            case 6: return 3.0 * xi / h;
            default: return 3.0 * eta / h;
        }
    }
    Vec2 value(int j, Vec2 p) const {
        Vec2 r{0, 0};
        for (int m = 0; m < n; ++m) {
            Vec2 v = mono(m, p);
            r.x += coef(m, j) * v.x;
            r.y += coef(m, j) * v.y;
        }
        return r;
    }
    double divergence(int j, Vec2 p) const {
        double r = 0;
        for (int m = 0; m < n; ++m) r += coef(m, j) * mono_div(m, p);
        return r;
    }
};

namespace detail {

// 3-point Gauss-Legendre on [0,1]; exact through degree 5 (enough for the
// cubic edge integrands of the order-2 moments).
inline constexpr std::array<double, 3> kEdgeGaussX{0.1127016653792583, 0.5, 0.8872983346207417};
inline constexpr std::array<double, 3> kEdgeGaussW{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

template <class TauAt>
inline double edge_moment(const Mesh& m, int edge, int degree, TauAt&& tau_at) {
    const auto& e = m.edges[static_cast<std::size_t>(edge)];
    Vec2 a = m.vertices[static_cast<std::size_t>(e[0])];
    Vec2 b = m.vertices[static_cast<std::size_t>(e[1])];
    Vec2 tdir = b - a;
    double len = std::sqrt(dot(tdir, tdir));
    Vec2 nrm{tdir.y / len, -tdir.x / len};
    double s = 0;
    for (int k = 0; k < 3; ++k) {
        double x = kEdgeGaussX[static_cast<std::size_t>(k)];
        Vec2 p = a + x * tdir;
        double leg = degree == 0 ? 1.0 : 2.0 * x - 1.0;
        s += kEdgeGaussW[static_cast<std::size_t>(k)] * dot(tau_at(p), nrm) * leg;
    }
    return s;  // the 1/|e| of the functional cancels against ds = |e| dx
}

inline const QuadratureRule& rt_moment_rule() {
    static const QuadratureRule r = quadrature(4);
    return r;
}

}  // namespace detail

inline RtCellBasis rt_cell_basis(const FeSpace& s, int t) {
    const Mesh& m = *s.mesh;
    RtCellBasis cb;
    cb.n = s.local_dofs;
    auto c = m.tri_coords(t);
    cb.center = (1.0 / 3.0) * (c[0] + c[1] + c[2]);
    cb.h = std::sqrt(2.0 * m.tri_area(t));
    Eigen::Matrix<double, 8, 8> A = Eigen::Matrix<double, 8, 8>::Zero();
    for (int mono = 0; mono < cb.n; ++mono) {
        auto tau = [&](Vec2 p) { return cb.mono(mono, p); };
        if (s.order == 1) {
            for (int i = 0; i < 3; ++i)
                A(i, mono) = detail::edge_moment(m, m.tri_edges[t][i], 0, tau);
        } else {
            for (int i = 0; i < 3; ++i) {
                A(2 * i, mono) = detail::edge_moment(m, m.tri_edges[t][i], 0, tau);
                A(2 * i + 1, mono) = detail::edge_moment(m, m.tri_edges[t][i], 1, tau);
            }
            const auto& rule = detail::rt_moment_rule();
            double mx = 0, my = 0;
            for (int k = 0; k < rule.size(); ++k) {
                Vec2 p = m.point_at(t, rule.points[static_cast<std::size_t>(k)]);
                Vec2 v = tau(p);
                mx += rule.weights[static_cast<std::size_t>(k)] * v.x;
                my += rule.weights[static_cast<std::size_t>(k)] * v.y;
            }
            A(6, mono) = mx;  // (1/|T|) int tau_x with normalized weights
            A(7, mono) = my;
        }
    }
    cb.coef.setZero();
    int n = cb.n;
    cb.coef.topLeftCorner(n, n) =
        A.topLeftCorner(n, n).partialPivLu().solve(Eigen::MatrixXd::Identity(n, n));
    return cb;
}

// Cell-cached evaluator for RT functions (rebuilds the dual basis when the
// triangle changes; evaluation loops visit cells sequentially).
class RtEvaluator {
  public:
    explicit RtEvaluator(const FeFunction& u) : u_(&u) {
        if (u.space->family != Family::raviart_thomas)
            throw std::invalid_argument("RtEvaluator: not an RT function");
    }
    Vec2 value(int t, Vec2 p) {
        bind(t);
        Vec2 r{0, 0};
        for (int i = 0; i < basis_.n; ++i) {
            Vec2 v = basis_.value(i, p);
            double c = u_->coeffs[u_->space->dof(t, i)];
            r.x += c * v.x;
            r.y += c * v.y;
        }
        return r;
    }
    double divergence(int t, Vec2 p) {
        bind(t);
        double r = 0;
        for (int i = 0; i < basis_.n; ++i)
            r += u_->coeffs[u_->space->dof(t, i)] * basis_.divergence(i, p);
        return r;
    }

  private:
    void bind(int t) {
        if (t != cur_) {
            basis_ = rt_cell_basis(*u_->space, t);
            cur_ = t;
        }
    }
    const FeFunction* u_;
    int cur_ = -1;
    RtCellBasis basis_;
};

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

inline void apply_dirichlet(FeFunction& u) {
    const FeSpace& s = *u.space;
    if (s.dirichlet.empty()) return;
    for (int i = 0; i < s.n_dofs; ++i)
        if (s.dirichlet[static_cast<std::size_t>(i)]) u.coeffs[i] = 0.0;
}

template <class F>
FeFunction interpolate(const FeSpace& s, F&& f) {
    if (s.family == Family::raviart_thomas)
        throw std::invalid_argument("interpolate: scalar overload called with RT space");
    const Mesh& m = *s.mesh;
    FeFunction u(s);
    if (s.family == Family::discontinuous) {
        for (int t = 0; t < m.n_triangles(); ++t) {
            auto c = m.tri_coords(t);
            for (int i = 0; i < 3; ++i) u.coeffs[s.dof(t, i)] = f(c[i].x, c[i].y);
        }
        return u;
    }
    for (int v = 0; v < m.n_vertices(); ++v)
        u.coeffs[v] = f(m.vertices[static_cast<std::size_t>(v)].x, m.vertices[static_cast<std::size_t>(v)].y);
    if (s.order == 2) {
        for (int e = 0; e < m.n_edges(); ++e) {
            Vec2 a = m.vertices[static_cast<std::size_t>(m.edges[static_cast<std::size_t>(e)][0])];
            Vec2 b = m.vertices[static_cast<std::size_t>(m.edges[static_cast<std::size_t>(e)][1])];
            Vec2 mid = 0.5 * (a + b);
            u.coeffs[m.n_vertices() + e] = f(mid.x, mid.y);
        }
    }
    apply_dirichlet(u);
    return u;
}

template <class F>
FeFunction interpolate_rt(const FeSpace& s, F&& f) {
    if (s.family != Family::raviart_thomas)
        throw std::invalid_argument("interpolate_rt: RT space required");
    const Mesh& m = *s.mesh;
    FeFunction u(s);
    auto tau_at = [&](Vec2 p) { return f(p.x, p.y); };
    for (int e = 0; e < m.n_edges(); ++e) {
        if (s.order == 1) {
            u.coeffs[e] = detail::edge_moment(m, e, 0, tau_at);
        } else {
            u.coeffs[2 * e] = detail::edge_moment(m, e, 0, tau_at);
            u.coeffs[2 * e + 1] = detail::edge_moment(m, e, 1, tau_at);
        }
    }
    if (s.order == 2) {
        const auto& rule = detail::rt_moment_rule();
        for (int t = 0; t < m.n_triangles(); ++t) {
            double mx = 0, my = 0;
            for (int k = 0; k < rule.size(); ++k) {
                Vec2 p = m.point_at(t, rule.points[static_cast<std::size_t>(k)]);
                Vec2 v = tau_at(p);
                mx += rule.weights[static_cast<std::size_t>(k)] * v.x;
                my += rule.weights[static_cast<std::size_t>(k)] * v.y;
            }
            u.coeffs[2 * m.n_edges() + 2 * t] = mx;
            u.coeffs[2 * m.n_edges() + 2 * t + 1] = my;
        }
    }
    return u;
}

// Re-interpolates a scalar function from a mesh onto the space built on its
// uniform refinement (children of t occupy 4t..4t+3). Exact for piecewise
// polynomials because children are affine subsets of their parent.
inline FeFunction prolong(const FeFunction& coarse, const FeSpace& fine) {
    const FeSpace& cs = *coarse.space;
    if (cs.family == Family::raviart_thomas || fine.family == Family::raviart_thomas)
        throw std::invalid_argument("prolong: scalar spaces only");
    if (fine.mesh->n_triangles() != 4 * cs.mesh->n_triangles())
        throw std::invalid_argument("prolong: fine mesh is not the uniform refinement");
    const Mesh& fm = *fine.mesh;
    const Mesh& cm = *cs.mesh;
    FeFunction u(fine);
    auto value_at = [&](int parent, Vec2 p) { return eval(coarse, parent, cm.barycentric(parent, p)); };
    for (int t = 0; t < fm.n_triangles(); ++t) {
        int parent = t / 4;
        auto c = fm.tri_coords(t);
        for (int i = 0; i < 3; ++i) u.coeffs[fine.dof(t, i)] = value_at(parent, c[i]);
        if (fine.family == Family::lagrange && fine.order == 2) {
            for (int i = 0; i < 3; ++i) {
                Vec2 mid = 0.5 * (c[(i + 1) % 3] + c[(i + 2) % 3]);
                u.coeffs[fine.dof(t, 3 + i)] = value_at(parent, mid);
            }
        }
    }
    apply_dirichlet(u);
    return u;
}

}  // namespace ocpb
