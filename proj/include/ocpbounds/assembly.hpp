#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <vector>

#include "ocpbounds/integrate.hpp"
#include "ocpbounds/mesh.hpp"
#include "ocpbounds/quadrature.hpp"
#include "ocpbounds/spaces.hpp"

namespace ocpb {

using SparseOperator = Eigen::SparseMatrix<double>;

namespace detail {

inline const QuadratureRule& assembly_rule(int order) {
    static const QuadratureRule r4 = quadrature(4);
    static const QuadratureRule r6 = quadrature(6);
    return order <= 1 ? r4 : r6;
}

}  // namespace detail

// Stiffness (grad phi_i, grad phi_j) on a Lagrange space with symmetric
// Dirichlet elimination: constrained rows/columns dropped, unit diagonal.
inline SparseOperator assemble_stiffness(const FeSpace& V) {
    if (V.family != Family::lagrange)
        throw std::invalid_argument("assemble_stiffness: lagrange space required");
    const Mesh& m = *V.mesh;
    const auto& rule = detail::assembly_rule(V.order);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m.n_triangles()) * V.local_dofs * V.local_dofs);
    for (int t = 0; t < m.n_triangles(); ++t) {
        double area = m.tri_area(t);
        auto gl = m.bary_gradients(t);
        Eigen::Matrix<double, 6, 6> loc = Eigen::Matrix<double, 6, 6>::Zero();
        for (int k = 0; k < rule.size(); ++k) {
            Vec2 g[6];
            detail::scalar_basis_grad(V, rule.points[static_cast<std::size_t>(k)], gl, g);
            double w = area * rule.weights[static_cast<std::size_t>(k)];
            for (int i = 0; i < V.local_dofs; ++i)
                for (int j = 0; j < V.local_dofs; ++j)
                    loc(i, j) += w * dot(g[i], g[j]);
        }
        for (int i = 0; i < V.local_dofs; ++i) {
            int gi = V.dof(t, i);
            if (V.dirichlet[static_cast<std::size_t>(gi)]) continue;
            for (int j = 0; j < V.local_dofs; ++j) {
                int gj = V.dof(t, j);
                if (V.dirichlet[static_cast<std::size_t>(gj)]) continue;
                trip.emplace_back(gi, gj, loc(i, j));
            }
        }
    }
    for (int i = 0; i < V.n_dofs; ++i)
        if (V.dirichlet[static_cast<std::size_t>(i)]) trip.emplace_back(i, i, 1.0);
    SparseOperator K(V.n_dofs, V.n_dofs);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

// Mass (phi_i, phi_j); no boundary treatment.
inline SparseOperator assemble_mass(const FeSpace& V) {
    if (V.family == Family::raviart_thomas)
        throw std::invalid_argument("assemble_mass: scalar space required");
    const Mesh& m = *V.mesh;
    const auto& rule = detail::assembly_rule(V.order);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m.n_triangles()) * V.local_dofs * V.local_dofs);
    for (int t = 0; t < m.n_triangles(); ++t) {
        double area = m.tri_area(t);
        for (int k = 0; k < rule.size(); ++k) {
            double v[6];
            detail::scalar_basis(V, rule.points[static_cast<std::size_t>(k)], v);
            double w = area * rule.weights[static_cast<std::size_t>(k)];
            for (int i = 0; i < V.local_dofs; ++i)
                for (int j = 0; j < V.local_dofs; ++j)
                    trip.emplace_back(V.dof(t, i), V.dof(t, j), w * v[i] * v[j]);
        }
    }
    SparseOperator M(V.n_dofs, V.n_dofs);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

// Rectangular pairing (phi^rows_i, phi^cols_j) between two scalar spaces on
// the same mesh.
inline SparseOperator assemble_pairing(const FeSpace& rows, const FeSpace& cols) {
    if (rows.mesh != cols.mesh)
        throw std::invalid_argument("assemble_pairing: spaces on different meshes");
    if (rows.family == Family::raviart_thomas || cols.family == Family::raviart_thomas)
        throw std::invalid_argument("assemble_pairing: scalar spaces required");
    const Mesh& m = *rows.mesh;
    const auto& rule = detail::assembly_rule(std::max(rows.order, cols.order));
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < m.n_triangles(); ++t) {
        double area = m.tri_area(t);
        for (int k = 0; k < rule.size(); ++k) {
            double vr[6], vc[6];
            detail::scalar_basis(rows, rule.points[static_cast<std::size_t>(k)], vr);
            detail::scalar_basis(cols, rule.points[static_cast<std::size_t>(k)], vc);
            double w = area * rule.weights[static_cast<std::size_t>(k)];
            for (int i = 0; i < rows.local_dofs; ++i)
                for (int j = 0; j < cols.local_dofs; ++j)
                    trip.emplace_back(rows.dof(t, i), cols.dof(t, j), w * vr[i] * vc[j]);
        }
    }
    SparseOperator C(rows.n_dofs, cols.n_dofs);
    C.setFromTriplets(trip.begin(), trip.end());
    return C;
}

struct RtForms {
    SparseOperator mass;           // (tau_i, tau_j)
    SparseOperator divdiv;         // (div tau_i, div tau_j)
    SparseOperator div_to_scalar;  // (phi^scalar_i, div tau_j)
};

inline RtForms assemble_rt_forms(const FeSpace& Q, const FeSpace& scalar) {
    if (Q.family != Family::raviart_thomas)
        throw std::invalid_argument("assemble_rt_forms: RT space required");
    if (scalar.family == Family::raviart_thomas || scalar.mesh != Q.mesh)
        throw std::invalid_argument("assemble_rt_forms: scalar space mismatch");
    const Mesh& m = *Q.mesh;
    const auto& rule = detail::assembly_rule(Q.order);
    std::vector<Eigen::Triplet<double>> tm, td, tp;
    const int nl = Q.local_dofs;
    for (int t = 0; t < m.n_triangles(); ++t) {
        RtCellBasis cb = rt_cell_basis(Q, t);
        double area = m.tri_area(t);
        Eigen::Matrix<double, 8, 8> locm = Eigen::Matrix<double, 8, 8>::Zero();
        Eigen::Matrix<double, 8, 8> locd = Eigen::Matrix<double, 8, 8>::Zero();
        Eigen::Matrix<double, 6, 8> locp = Eigen::Matrix<double, 6, 8>::Zero();
        for (int k = 0; k < rule.size(); ++k) {
            Vec2 p = m.point_at(t, rule.points[static_cast<std::size_t>(k)]);
            double w = area * rule.weights[static_cast<std::size_t>(k)];
            Vec2 val[8];
            double dv[8], sc[6];
            for (int i = 0; i < nl; ++i) {
                val[i] = cb.value(i, p);
                dv[i] = cb.divergence(i, p);
            }
            detail::scalar_basis(scalar, rule.points[static_cast<std::size_t>(k)], sc);
            for (int i = 0; i < nl; ++i) {
                for (int j = 0; j < nl; ++j) {
                    locm(i, j) += w * dot(val[i], val[j]);
                    locd(i, j) += w * dv[i] * dv[j];
                }
                for (int j = 0; j < scalar.local_dofs; ++j) locp(j, i) += w * sc[j] * dv[i];
            }
        }
        for (int i = 0; i < nl; ++i) {
            for (int j = 0; j < nl; ++j) {
                tm.emplace_back(Q.dof(t, i), Q.dof(t, j), locm(i, j));
                td.emplace_back(Q.dof(t, i), Q.dof(t, j), locd(i, j));
            }
            for (int j = 0; j < scalar.local_dofs; ++j)
                tp.emplace_back(scalar.dof(t, j), Q.dof(t, i), locp(j, i));
        }
    }
    RtForms f;
    f.mass = SparseOperator(Q.n_dofs, Q.n_dofs);
    f.mass.setFromTriplets(tm.begin(), tm.end());
    f.divdiv = SparseOperator(Q.n_dofs, Q.n_dofs);
    f.divdiv.setFromTriplets(td.begin(), td.end());
    f.div_to_scalar = SparseOperator(scalar.n_dofs, Q.n_dofs);
    f.div_to_scalar.setFromTriplets(tp.begin(), tp.end());
    return f;
}

// Load vector b_i = int f * phi_i over a scalar space with the data rule.
// F receives cell context: f(tri, x, bary).
template <class F>
Eigen::VectorXd assemble_load_ctx(const FeSpace& V, F&& f) {
    if (V.family == Family::raviart_thomas)
        throw std::invalid_argument("assemble_load: scalar space required");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(V.n_dofs);
    for_each_quad_point(*V.mesh, data_rule(), kDataQuadSubdiv,
                        [&](int t, Vec2 x, const std::array<double, 3>& bary, double w) {
                            double v[6];
                            detail::scalar_basis(V, bary, v);
                            double fw = w * f(t, x, bary);
                            for (int i = 0; i < V.local_dofs; ++i) b[V.dof(t, i)] += fw * v[i];
                        });
    return b;
}

template <class F>
Eigen::VectorXd assemble_load(const FeSpace& V, F&& f) {
    return assemble_load_ctx(V, [&](int, Vec2 x, const std::array<double, 3>&) { return f(x.x, x.y); });
}

// RT data loads for the flux reconstruction system:
//   r_i = int g . tau_i           (g a vector field with cell context)
//   r_i = int f * div tau_i       (f a scalar field with cell context)
template <class G>
Eigen::VectorXd assemble_rt_load_grad_ctx(const FeSpace& Q, G&& g) {
    if (Q.family != Family::raviart_thomas)
        throw std::invalid_argument("assemble_rt_load_grad: RT space required");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Q.n_dofs);
    int cached = -1;
    RtCellBasis cb;
    for_each_quad_point(*Q.mesh, data_rule(), kDataQuadSubdiv,
                        [&](int t, Vec2 x, const std::array<double, 3>& bary, double w) {
                            if (t != cached) {
                                cb = rt_cell_basis(Q, t);
                                cached = t;
                            }
                            Vec2 gv = g(t, x, bary);
                            for (int i = 0; i < Q.local_dofs; ++i)
                                b[Q.dof(t, i)] += w * dot(gv, cb.value(i, x));
                        });
    return b;
}

template <class G>
Eigen::VectorXd assemble_rt_load_grad(const FeSpace& Q, G&& g) {
    return assemble_rt_load_grad_ctx(
        Q, [&](int, Vec2 x, const std::array<double, 3>&) { return g(x.x, x.y); });
}

template <class F>
Eigen::VectorXd assemble_rt_load_div_ctx(const FeSpace& Q, F&& f) {
    if (Q.family != Family::raviart_thomas)
        throw std::invalid_argument("assemble_rt_load_div: RT space required");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(Q.n_dofs);
    int cached = -1;
    RtCellBasis cb;
    for_each_quad_point(*Q.mesh, data_rule(), kDataQuadSubdiv,
                        [&](int t, Vec2 x, const std::array<double, 3>& bary, double w) {
                            if (t != cached) {
                                cb = rt_cell_basis(Q, t);
                                cached = t;
                            }
                            double fv = f(t, x, bary);
                            for (int i = 0; i < Q.local_dofs; ++i)
                                b[Q.dof(t, i)] += w * fv * cb.divergence(i, x);
                        });
    return b;
}

template <class F>
Eigen::VectorXd assemble_rt_load_div(const FeSpace& Q, F&& f) {
    return assemble_rt_load_div_ctx(
        Q, [&](int, Vec2 x, const std::array<double, 3>&) { return f(x.x, x.y); });
}

// Gram matrix of the control-space L2 projection, (Pi y, Pi z) for y, z in a
// Lagrange space, with the same Dirichlet elimination as the stiffness. Built
// cellwise as C_loc M_loc^{-1} C_loc^T, where C_loc pairs state and DG bases.
inline SparseOperator assemble_projection_gram(const FeSpace& V, const FeSpace& U) {
    if (V.family != Family::lagrange || U.family != Family::discontinuous)
        throw std::invalid_argument("assemble_projection_gram: lagrange x discontinuous required");
    const Mesh& m = *V.mesh;
    const auto& rule = detail::assembly_rule(std::max(V.order, U.order));
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < m.n_triangles(); ++t) {
        double area = m.tri_area(t);
        Eigen::Matrix<double, 6, 3> C = Eigen::Matrix<double, 6, 3>::Zero();
        Eigen::Matrix3d Mloc = Eigen::Matrix3d::Zero();
        for (int k = 0; k < rule.size(); ++k) {
            double vs[6], vu[3];
            detail::scalar_basis(V, rule.points[static_cast<std::size_t>(k)], vs);
            detail::scalar_basis(U, rule.points[static_cast<std::size_t>(k)], vu);
            double w = area * rule.weights[static_cast<std::size_t>(k)];
            for (int i = 0; i < V.local_dofs; ++i)
                for (int j = 0; j < 3; ++j) C(i, j) += w * vs[i] * vu[j];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) Mloc(i, j) += w * vu[i] * vu[j];
        }
        Eigen::Matrix<double, 6, 6> G =
            C * Mloc.ldlt().solve(Eigen::Matrix3d::Identity()) * C.transpose();
        for (int i = 0; i < V.local_dofs; ++i) {
            int gi = V.dof(t, i);
            if (V.dirichlet[static_cast<std::size_t>(gi)]) continue;
            for (int j = 0; j < V.local_dofs; ++j) {
                int gj = V.dof(t, j);
                if (V.dirichlet[static_cast<std::size_t>(gj)]) continue;
                trip.emplace_back(gi, gj, G(i, j));
            }
        }
    }
    SparseOperator Gm(V.n_dofs, V.n_dofs);
    Gm.setFromTriplets(trip.begin(), trip.end());
    return Gm;
}

// L2 projection onto DG1: per-cell 3x3 mass solves against the load
// int phi_i f with cell context.
template <class F>
FeFunction project_onto_dg(const FeSpace& U, F&& f) {
    if (U.family != Family::discontinuous)
        throw std::invalid_argument("project_onto_dg: discontinuous space required");
    Eigen::VectorXd b = assemble_load_ctx(U, f);
    FeFunction u(U);
    const Mesh& m = *U.mesh;
    for (int t = 0; t < m.n_triangles(); ++t) {
        double s = 3.0 / m.tri_area(t);
        double b0 = b[3 * t], b1 = b[3 * t + 1], b2 = b[3 * t + 2];
        // inverse of the P1 cell mass |T|/12 [[2,1,1],[1,2,1],[1,1,2]]
        u.coeffs[3 * t] = s * (3.0 * b0 - b1 - b2);
        u.coeffs[3 * t + 1] = s * (3.0 * b1 - b0 - b2);
        u.coeffs[3 * t + 2] = s * (3.0 * b2 - b0 - b1);
    }
    return u;
}

// Zero the constrained entries of a load vector for a Dirichlet space.
inline void zero_dirichlet_rows(const FeSpace& V, Eigen::VectorXd& b) {
    if (V.dirichlet.empty()) return;
    for (int i = 0; i < V.n_dofs; ++i)
        if (V.dirichlet[static_cast<std::size_t>(i)]) b[i] = 0.0;
}

}  // namespace ocpb
