#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "ocpbounds/algorithms.hpp"
#include "ocpbounds/ocp.hpp"

namespace ocpb {

namespace detail {
inline constexpr double kPi = 3.14159265358979323846;
}

struct PrecisionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Distributed-control test family on the unit square with a closed-form
// optimal pair. With box constraints,
//   y_opt = sin(k1 pi x) sin(k2 pi y)
//   y^d   = y_opt + amplitude sin(m1 pi x) sin(m2 pi y)
//   u^d   = 0
//   u_opt = clamp((amplitude/alpha) sin(m1 pi x) sin(m2 pi y), psi-, psi+)
//   f     = pi^2 (k1^2 + k2^2) y_opt - u_opt
// so that -lap y_opt = f + u_opt and u_opt satisfies the projection
// condition. The unconstrained variant drops the clamp and remains exact;
// the ball variant reuses the unclamped data (no optimality claim).
struct ManufacturedCase {
    int k1 = 1, k2 = 1, m1 = 2, m2 = 1;
    double amplitude = 0.5;
    double alpha = 0.05;
    AdmissibleSet::Kind constraint = AdmissibleSet::Kind::box;
    double psi_minus = -3.0, psi_plus = 3.0;
    double ball_radius = 1.0;

    double state_shape(double x, double y) const {
        return std::sin(k1 * detail::kPi * x) * std::sin(k2 * detail::kPi * y);
    }
    double control_shape(double x, double y) const {
        return std::sin(m1 * detail::kPi * x) * std::sin(m2 * detail::kPi * y);
    }
    double y_opt(double x, double y) const { return state_shape(x, y); }
    Vec2 grad_y_opt(double x, double y) const {
        double p = detail::kPi;
        return {k1 * p * std::cos(k1 * p * x) * std::sin(k2 * p * y),
                k2 * p * std::sin(k1 * p * x) * std::cos(k2 * p * y)};
    }
    double laplace_y_opt(double x, double y) const {
        double p2 = detail::kPi * detail::kPi;
        return -p2 * (k1 * k1 + k2 * k2) * state_shape(x, y);
    }
    double y_desired(double x, double y) const {
        return state_shape(x, y) + amplitude * control_shape(x, y);
    }
    Vec2 grad_y_desired(double x, double y) const {
        double p = detail::kPi;
        Vec2 g = grad_y_opt(x, y);
        g.x += amplitude * m1 * p * std::cos(m1 * p * x) * std::sin(m2 * p * y);
        g.y += amplitude * m2 * p * std::sin(m1 * p * x) * std::cos(m2 * p * y);
        return g;
    }
    double u_opt(double x, double y) const {
        double u = amplitude / alpha * control_shape(x, y);
        if (constraint == AdmissibleSet::Kind::box)
            u = std::min(psi_plus, std::max(psi_minus, u));
        return u;
    }
    double u_desired(double, double) const { return 0.0; }
    double source(double x, double y) const {
        return detail::kPi * detail::kPi * (k1 * k1 + k2 * k2) * state_shape(x, y) - u_opt(x, y);
    }

    AdmissibleSet admissible() const {
        switch (constraint) {
            case AdmissibleSet::Kind::box: return AdmissibleSet::box_bounds(psi_minus, psi_plus);
            case AdmissibleSet::Kind::l2_ball: return AdmissibleSet::ball(ball_radius);
            default: return AdmissibleSet::all();
        }
    }

    ProblemData problem() const {
        ProblemData p;
        p.source = [c = *this](double x, double y) { return c.source(x, y); };
        p.desired_state = [c = *this](double x, double y) { return c.y_desired(x, y); };
        p.desired_state_grad = [c = *this](double x, double y) { return c.grad_y_desired(x, y); };
        p.desired_control = [](double, double) { return 0.0; };
        p.alpha = alpha;
        p.admissible = admissible();
        p.validate();
        return p;
    }
};

inline ManufacturedCase build_case(int k1, int k2, int m1, int m2, double amplitude, double alpha,
                                   double psi_minus, double psi_plus,
                                   AdmissibleSet::Kind constraint = AdmissibleSet::Kind::box,
                                   double ball_radius = 1.0) {
    if (!(alpha > 0)) throw std::invalid_argument("build_case: alpha must be positive");
    if (constraint == AdmissibleSet::Kind::box && !(psi_minus < psi_plus))
        throw std::invalid_argument("build_case: psi_minus must be below psi_plus");
    if (constraint == AdmissibleSet::Kind::l2_ball && !(ball_radius > 0))
        throw std::invalid_argument("build_case: ball radius must be positive");
    ManufacturedCase c;
    c.k1 = k1;
    c.k2 = k2;
    c.m1 = m1;
    c.m2 = m2;
    c.amplitude = amplitude;
    c.alpha = alpha;
    c.psi_minus = psi_minus;
    c.psi_plus = psi_plus;
    c.constraint = constraint;
    c.ball_radius = ball_radius;
    return c;
}

struct ReferenceValues {
    double j_opt = 0;         // J(u)
    double grad_term = 0;     // ||grad(y(u) - y^d)||^2, analytic
    double control_term = 0;  // alpha ||u - u^d||^2, tensor midpoint quadrature
    int resolution = 0;
};

// Closed-form/quadrature oracle for the optimal cost. The control integral is
// verified by Richardson comparison between `resolution` and 2x`resolution`.
inline ReferenceValues reference_cost(const ManufacturedCase& c, int resolution) {
    if (resolution < 2) throw std::invalid_argument("reference_cost: resolution too small");
    ReferenceValues r;
    r.resolution = resolution;
    double p2 = detail::kPi * detail::kPi;
    r.grad_term = c.amplitude * c.amplitude * p2 *
                  (c.m1 * c.m1 + c.m2 * c.m2) / 4.0;
    auto midpoint = [&](int res) {
        double s = 0;
        for (int i = 0; i < res; ++i) {
            double x = (i + 0.5) / res;
            for (int j = 0; j < res; ++j) {
                double u = c.u_opt(x, (j + 0.5) / res);
                s += u * u;
            }
        }
        return c.alpha * s / (static_cast<double>(res) * res);
    };
    double coarse = midpoint(resolution);
    double fine = midpoint(2 * resolution);
    double scale = std::max(std::abs(fine), 1e-300);
    if (std::abs(fine - coarse) / scale >= 1e-6)
        throw PrecisionError("reference_cost: Richardson check failed at this resolution");
    r.control_term = fine;
    r.j_opt = r.grad_term + r.control_term;
    return r;
}

struct UnconstrainedSolution {
    FeFunction state;
    FeFunction control;  // recovered control u = Pi u^d + (Pi y^d - Pi y)/alpha
};

// Discrete optimality system for the unconstrained problem,
//   (grad y, grad z) + 1/alpha (Pi y, Pi z) = (f + Pi u^d, z) + 1/alpha (Pi y^d, z),
// where Pi is the L2 projection onto the control space. Realizing the
// reaction term through Pi keeps the recovered control an exact stationary
// point of the discrete cost (the gradient vanishes to solver precision).
// For a P1 state space Pi is the identity on it, giving the plain mass term.
inline UnconstrainedSolution solve_unconstrained_system(const ProblemData& p, const FeSpace& V,
                                                        const FeSpace& U) {
    if (p.admissible.kind != AdmissibleSet::Kind::unconstrained)
        throw std::invalid_argument("solve_unconstrained_system: admissible set must be unconstrained");
    if (V.mesh != U.mesh)
        throw std::invalid_argument("solve_unconstrained_system: spaces on different meshes");
    SparseOperator K = assemble_stiffness(V);
    SparseOperator G = assemble_projection_gram(V, U);
    SparseOperator C = assemble_pairing(V, U);
    FeFunction ud_c = project_onto_dg(
        U, [&](int, Vec2 x, const std::array<double, 3>&) { return p.desired_control(x.x, x.y); });
    FeFunction yd_c = project_onto_dg(
        U, [&](int, Vec2 x, const std::array<double, 3>&) { return p.desired_state(x.x, x.y); });
    Eigen::VectorXd b = assemble_load(V, p.source) + C * (ud_c.coeffs + yd_c.coeffs / p.alpha);
    zero_dirichlet_rows(V, b);
    SparseOperator A = K + (1.0 / p.alpha) * G;
    UnconstrainedSolution sol{FeFunction(V), FeFunction(U)};
    sol.state.coeffs = SpdSolver(std::move(A)).solve(b);
    apply_dirichlet(sol.state);
    FeFunction proj_y = project_onto_dg(
        U, [&](int t, Vec2, const std::array<double, 3>& bary) { return eval(sol.state, t, bary); });
    sol.control.coeffs = ud_c.coeffs + (yd_c.coeffs - proj_y.coeffs) / p.alpha;
    return sol;
}

// Residual of the unconstrained optimality system for given (z, tau):
//   R(z, tau) = div tau - z/alpha + f + y^d/alpha + u^d.
// Combined error majorant with weight nu in [0,1]:
//   (1+beta)||grad z - tau||^2 + (1+beta)/beta c^2 ||nu R||^2 + alpha ||(1-nu) R||^2
// bounding ||grad(y-z)||^2 + 1/alpha ||y-z||^2. nu = nullopt picks the
// pointwise optimal constant alpha / (alpha + c^2 (1+beta)/beta).
inline double majorant_unconstrained(const FeFunction& z, const FeFunction& tau, double beta,
                                     std::optional<double> nu, const ProblemData& p) {
    if (!(beta > 0)) throw std::invalid_argument("majorant_unconstrained: beta must be positive");
    double c2 = p.friedrichs * p.friedrichs;
    double gamma0 = c2 * (1.0 + beta) / beta;
    double w = nu ? *nu : p.alpha / (p.alpha + gamma0);
    if (w < 0.0 || w > 1.0)
        throw std::invalid_argument("majorant_unconstrained: nu outside [0,1]");
    RtEvaluator ev(tau);
    double flux = 0, res = 0;
    for_each_quad_point(*z.space->mesh, data_rule(), kDataQuadSubdiv,
                        [&](int t, Vec2 x, const std::array<double, 3>& b, double wq) {
                            Vec2 d = eval_grad(z, t, b) - ev.value(t, x);
                            double r = ev.divergence(t, x) - eval(z, t, b) / p.alpha +
                                       p.source(x.x, x.y) + p.desired_state(x.x, x.y) / p.alpha +
                                       p.desired_control(x.x, x.y);
                            flux += wq * dot(d, d);
                            res += wq * r * r;
                        });
    return (1.0 + beta) * flux + gamma0 * (w * w) * res + p.alpha * (1.0 - w) * (1.0 - w) * res;
}

// Flux minimizing the combined majorant at fixed beta and nu.
inline FeFunction best_flux_unconstrained(const FeFunction& z, double beta, std::optional<double> nu,
                                          const ProblemData& p, const FeSpace& Q) {
    if (!(beta > 0)) throw std::invalid_argument("best_flux_unconstrained: beta must be positive");
    double c2 = p.friedrichs * p.friedrichs;
    double gamma0 = c2 * (1.0 + beta) / beta;
    double w = nu ? *nu : p.alpha / (p.alpha + gamma0);
    double wdiv = gamma0 * w * w + p.alpha * (1.0 - w) * (1.0 - w);
    RtForms forms = assemble_rt_forms(Q, *z.space);
    Eigen::VectorXd rhs =
        (1.0 + beta) * assemble_rt_load_grad_ctx(Q,
                                                 [&](int t, Vec2, const std::array<double, 3>& b) {
                                                     return eval_grad(z, t, b);
                                                 }) -
        wdiv * assemble_rt_load_div_ctx(Q, [&](int t, Vec2 x, const std::array<double, 3>& b) {
            return -eval(z, t, b) / p.alpha + p.source(x.x, x.y) +
                   p.desired_state(x.x, x.y) / p.alpha + p.desired_control(x.x, x.y);
        });
    SparseOperator A = (1.0 + beta) * forms.mass + wdiv * forms.divdiv;
    FeFunction tau(Q);
    tau.coeffs = SpdSolver(std::move(A)).solve(rhs);
    return tau;
}

struct UnconstrainedEstimate {
    double majorant = 0;
    double beta = 1.0;
    FeFunction flux;
};

// Alternating minimization of the combined majorant for the unconstrained
// system: flux solves at fixed beta, golden-section refinement of beta.
inline UnconstrainedEstimate minimize_majorant_unconstrained(const FeFunction& z,
                                                             const ProblemData& p, const FeSpace& Q,
                                                             int sweeps = 3) {
    UnconstrainedEstimate est;
    est.beta = 1.0;
    for (int s = 0; s < sweeps; ++s) {
        est.flux = best_flux_unconstrained(z, est.beta, std::nullopt, p, Q);
        auto value = [&](double logb) {
            return majorant_unconstrained(z, est.flux, std::pow(10.0, logb), std::nullopt, p);
        };
        double span = 8.0;
        double best_log = golden_section([&](double t) { return value(t - span / 2 + std::log10(est.beta)); },
                                         span, 1e-3) -
                          span / 2 + std::log10(est.beta);
        est.beta = std::pow(10.0, best_log);
        est.majorant = majorant_unconstrained(z, est.flux, est.beta, std::nullopt, p);
    }
    return est;
}

}  // namespace ocpb
