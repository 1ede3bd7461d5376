#pragma once

#include <array>
#include <utility>

#include "ocpbounds/mesh.hpp"
#include "ocpbounds/quadrature.hpp"
#include "ocpbounds/spaces.hpp"

namespace ocpb {

// Data integrals (anything touching user callables) use a degree-21 rule --
// the 11x11 conical product with 121 points per triangle -- composed on one
// red subdivision per cell, which keeps clamped integrands accurate.
inline constexpr int kDataQuadDegree = 21;
inline constexpr int kDataQuadSubdiv = 1;

inline const QuadratureRule& data_rule() {
    static const QuadratureRule r = quadrature(kDataQuadDegree);
    return r;
}

namespace detail {

template <class Visit>
void visit_sub(const Mesh& m, const QuadratureRule& rule, int t, double cell_area,
               const std::array<std::array<double, 3>, 3>& corners, int depth, Visit&& visit) {
    if (depth == 0) {
        for (int k = 0; k < rule.size(); ++k) {
            const auto& q = rule.points[static_cast<std::size_t>(k)];
            std::array<double, 3> b{};
            for (int c = 0; c < 3; ++c)
                b[c] = q[0] * corners[0][c] + q[1] * corners[1][c] + q[2] * corners[2][c];
            Vec2 x = m.point_at(t, b);
            visit(t, x, b, cell_area * rule.weights[static_cast<std::size_t>(k)]);
        }
        return;
    }
    std::array<std::array<double, 3>, 3> mid;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c)
            mid[i][c] = 0.5 * (corners[(i + 1) % 3][c] + corners[(i + 2) % 3][c]);
    double a4 = cell_area / 4.0;
    visit_sub(m, rule, t, a4, {corners[0], mid[2], mid[1]}, depth - 1, visit);
    visit_sub(m, rule, t, a4, {corners[1], mid[0], mid[2]}, depth - 1, visit);
    visit_sub(m, rule, t, a4, {corners[2], mid[1], mid[0]}, depth - 1, visit);
    visit_sub(m, rule, t, a4, {mid[0], mid[1], mid[2]}, depth - 1, visit);
}

}  // namespace detail

// Visit every quadrature point with its final weight (already scaled by the
// cell area), after `subdiv` levels of red subdivision per cell.
// Visit signature: (int tri, Vec2 x, const std::array<double,3>& bary, double w).
template <class Visit>
void for_each_quad_point(const Mesh& m, const QuadratureRule& rule, int subdiv, Visit&& visit) {
    const std::array<std::array<double, 3>, 3> root{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int t = 0; t < m.n_triangles(); ++t)
        detail::visit_sub(m, rule, t, m.tri_area(t), root, subdiv, visit);
}

// Integral of f(tri, x, bary) over the mesh.
template <class F>
double integrate_cells(const Mesh& m, const QuadratureRule& rule, int subdiv, F&& f) {
    double acc = 0;
    for_each_quad_point(m, rule, subdiv, [&](int t, Vec2 x, const std::array<double, 3>& b, double w) {
        acc += w * f(t, x, b);
    });
    return acc;
}

// Default data-integration pass.
template <class F>
double integrate_data(const Mesh& m, F&& f) {
    return integrate_cells(m, data_rule(), kDataQuadSubdiv, std::forward<F>(f));
}

// Pointwise field over the mesh.
template <class F>
double integrate(F&& f, const Mesh& m, const QuadratureRule& rule) {
    return integrate_cells(m, rule, 0,
                           [&](int, Vec2 x, const std::array<double, 3>&) { return f(x.x, x.y); });
}

inline double integrate(const FeFunction& u, const Mesh& m, const QuadratureRule& rule) {
    return integrate_cells(m, rule, 0,
                           [&](int t, Vec2, const std::array<double, 3>& b) { return eval(u, t, b); });
}

// L2 norm (squared) of a scalar FE function; exact for the piecewise
// polynomial integrand.
inline double l2_norm_sq(const FeFunction& u) {
    const FeSpace& s = *u.space;
    static const QuadratureRule r4 = quadrature(4);
    return integrate_cells(*s.mesh, r4, 0, [&](int t, Vec2, const std::array<double, 3>& b) {
        double v = eval(u, t, b);
        return v * v;
    });
}

inline double l2_norm(const FeFunction& u) { return std::sqrt(l2_norm_sq(u)); }

}  // namespace ocpb
