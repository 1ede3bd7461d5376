#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "ocpbounds/assembly.hpp"
#include "ocpbounds/integrate.hpp"
#include "ocpbounds/solve.hpp"

// Dirichlet-distributed-control specialization of the quadratic optimal
// control problem
//     min J(v) = ||grad(y(v) - y^d)||^2 + alpha ||v - u^d||^2
// over an admissible set, with the Poisson state equation
//     (grad y(v), grad z) = (f + v, z)  for all z in H^1_0,
// together with the computable two-sided bounds for J and J(u).

namespace ocpb {

using ScalarField = std::function<double(double, double)>;
using VectorField = std::function<Vec2(double, double)>;

// 1/sqrt(2 pi^2): reciprocal square root of the first Dirichlet-Laplacian
// eigenvalue of the unit square. Any Friedrichs constant >= this keeps the
// upper bounds guaranteed.
inline const double kFriedrichsUnitSquare = 1.0 / (std::sqrt(2.0) * 3.14159265358979323846);

struct AdmissibleSet {
    enum class Kind { unconstrained, box, l2_ball };
    Kind kind = Kind::unconstrained;
    ScalarField lo, hi;  // box bounds
    double radius = 0.0; // l2 ball

    static AdmissibleSet all() { return {}; }
    static AdmissibleSet box_bounds(double lo_v, double hi_v) {
        if (!(lo_v <= hi_v)) throw std::invalid_argument("AdmissibleSet: lower bound above upper");
        AdmissibleSet s;
        s.kind = Kind::box;
        s.lo = [lo_v](double, double) { return lo_v; };
        s.hi = [hi_v](double, double) { return hi_v; };
        return s;
    }
    static AdmissibleSet box_bounds(ScalarField lo_f, ScalarField hi_f) {
        AdmissibleSet s;
        s.kind = Kind::box;
        s.lo = std::move(lo_f);
        s.hi = std::move(hi_f);
        return s;
    }
    static AdmissibleSet ball(double m) {
        if (!(m > 0)) throw std::invalid_argument("AdmissibleSet: ball radius must be positive");
        AdmissibleSet s;
        s.kind = Kind::l2_ball;
        s.radius = m;
        return s;
    }
};

struct ProblemData {
    ScalarField source;             // f
    ScalarField desired_state;      // y^d, an H^1_0 representative
    VectorField desired_state_grad; // grad y^d
    ScalarField desired_control;    // u^d
    double alpha = 1.0;
    double friedrichs = kFriedrichsUnitSquare;
    AdmissibleSet admissible;

    void validate() const {
        if (!(alpha > 0)) throw std::invalid_argument("ProblemData: alpha must be positive");
        if (!(friedrichs >= kFriedrichsUnitSquare - 1e-12))
            throw std::invalid_argument("ProblemData: Friedrichs constant below the unit-square value");
        if (!source || !desired_state || !desired_state_grad || !desired_control)
            throw std::invalid_argument("ProblemData: missing field callables");
    }
};

struct ErrBounds {
    double err_sq_lower = 0;  // may be negative
    double err_sq_upper = 0;
};

// ---------------------------------------------------------------------------
// State equation
// ---------------------------------------------------------------------------

// Stiffness factorization plus control-independent load, reusable across
// controls (line searches solve for many trial controls).
class StateSolver {
  public:
    StateSolver(const FeSpace& V, const FeSpace& U, const ProblemData& p)
        : V_(&V),
          U_(&U),
          solver_(assemble_stiffness(V)),
          pair_(assemble_pairing(V, U)),
          load_f_(assemble_load(V, p.source)) {}

    FeFunction solve(const FeFunction& v) const {
        if (v.space->mesh != V_->mesh)
            throw std::invalid_argument("StateSolver: control on a different mesh");
        if (v.space->n_dofs != U_->n_dofs)
            throw std::invalid_argument("StateSolver: control space mismatch");
        Eigen::VectorXd b = load_f_ + pair_ * v.coeffs;
        zero_dirichlet_rows(*V_, b);
        FeFunction y(*V_);
        y.coeffs = solver_.solve(b);
        apply_dirichlet(y);
        return y;
    }

    const FeSpace& space() const { return *V_; }
    const SparseOperator& stiffness() const { return solver_.matrix(); }
    const SparseOperator& control_pairing() const { return pair_; }
    const Eigen::VectorXd& source_load() const { return load_f_; }

  private:
    const FeSpace* V_;
    const FeSpace* U_;
    SpdSolver solver_;
    SparseOperator pair_;
    Eigen::VectorXd load_f_;
};

inline FeFunction solve_state(const ProblemData& p, const FeFunction& v, const FeSpace& V) {
    if (v.space->mesh != V.mesh)
        throw std::invalid_argument("solve_state: control and state live on different meshes");
    return StateSolver(V, *v.space, p).solve(v);
}

// E(z) = ||grad z||^2 - 2 (f + v, z), the quadratic energy whose minimizer
// over H^1_0 is the state y(v).
inline double energy(const FeFunction& z, const ProblemData& p, const FeFunction& v) {
    return integrate_data(*z.space->mesh, [&](int t, Vec2 x, const std::array<double, 3>& b) {
        Vec2 g = eval_grad(z, t, b);
        double zz = eval(z, t, b);
        double fv = p.source(x.x, x.y) + eval(v, t, b);
        return dot(g, g) - 2.0 * fv * zz;
    });
}

// E(z) - E(q): equals |||y(v) - z|||^2 when q is the exact state.
inline double minorant_sq(const FeFunction& z, const FeFunction& q, const ProblemData& p,
                          const FeFunction& v) {
    return integrate_data(*z.space->mesh, [&](int t, Vec2 x, const std::array<double, 3>& b) {
        Vec2 gz = eval_grad(z, t, b);
        Vec2 gq = eval_grad(q, t, b);
        double fv = p.source(x.x, x.y) + eval(v, t, b);
        return dot(gz, gz) - dot(gq, gq) - 2.0 * fv * (eval(z, t, b) - eval(q, t, b));
    });
}

// (1+beta) ||tau - grad z||^2 + (1+beta)/beta c^2 ||div tau + f + v||^2,
// a guaranteed upper bound for |||y(v) - z|||^2 for any tau in H(div), beta > 0.
inline double majorant_sq(const FeFunction& z, const FeFunction& tau, double beta,
                          const ProblemData& p, const FeFunction& v) {
    if (!(beta > 0)) throw std::invalid_argument("majorant_sq: beta must be positive");
    RtEvaluator ev(tau);
    double c2 = p.friedrichs * p.friedrichs;
    double flux = 0, res = 0;
    for_each_quad_point(*z.space->mesh, data_rule(), kDataQuadSubdiv,
                        [&](int t, Vec2 x, const std::array<double, 3>& b, double w) {
                            Vec2 d = ev.value(t, x) - eval_grad(z, t, b);
                            double r = ev.divergence(t, x) + p.source(x.x, x.y) + eval(v, t, b);
                            flux += w * dot(d, d);
                            res += w * r * r;
                        });
    return (1.0 + beta) * flux + (1.0 + beta) / beta * c2 * res;
}

// ---------------------------------------------------------------------------
// Cost bounds
// ---------------------------------------------------------------------------

inline double control_misfit(const FeFunction& v, const ProblemData& p) {
    return p.alpha * integrate_data(*v.space->mesh, [&](int t, Vec2 x, const std::array<double, 3>& b) {
               double d = eval(v, t, b) - p.desired_control(x.x, x.y);
               return d * d;
           });
}

// J_low(v, q) = E(y^d) - E(q) + alpha ||v - u^d||^2 <= J(v) for every q in H^1_0.
inline double cost_lower(const FeFunction& v, const FeFunction& q, const ProblemData& p) {
    return integrate_data(*q.space->mesh, [&](int t, Vec2 x, const std::array<double, 3>& b) {
        Vec2 gyd = p.desired_state_grad(x.x, x.y);
        Vec2 gq = eval_grad(q, t, b);
        double fv = p.source(x.x, x.y) + eval(v, t, b);
        double miss = eval(v, t, b) - p.desired_control(x.x, x.y);
        return dot(gyd, gyd) - dot(gq, gq) -
               2.0 * fv * (p.desired_state(x.x, x.y) - eval(q, t, b)) + p.alpha * miss * miss;
    });
}

// The two tau/beta-dependent ingredients of the cost upper bound:
// ||tau - grad y^d||^2 and ||div tau + f + v||^2.
struct MajorantParts {
    double flux_misfit_sq = 0;
    double residual_sq = 0;
};

inline MajorantParts majorant_parts(const FeFunction& v, const FeFunction& tau, const ProblemData& p) {
    RtEvaluator ev(tau);
    MajorantParts parts;
    for_each_quad_point(*v.space->mesh, data_rule(), kDataQuadSubdiv,
                        [&](int t, Vec2 x, const std::array<double, 3>& b, double w) {
                            Vec2 d = ev.value(t, x) - p.desired_state_grad(x.x, x.y);
                            double r = ev.divergence(t, x) + p.source(x.x, x.y) + eval(v, t, b);
                            parts.flux_misfit_sq += w * dot(d, d);
                            parts.residual_sq += w * r * r;
                        });
    return parts;
}

inline double cost_upper_from_parts(const MajorantParts& parts, double beta, double control_misfit_v,
                                    const ProblemData& p) {
    if (!(beta > 0)) throw std::invalid_argument("cost_upper: beta must be positive");
    double c2 = p.friedrichs * p.friedrichs;
    return (1.0 + beta) * parts.flux_misfit_sq +
           (1.0 + beta) / beta * c2 * parts.residual_sq + control_misfit_v;
}

// J_up(v, tau, beta) >= J(v) >= J(u) for any admissible v, tau in H(div), beta > 0.
inline double cost_upper(const FeFunction& v, const FeFunction& tau, double beta,
                         const ProblemData& p) {
    return cost_upper_from_parts(majorant_parts(v, tau, p), beta, control_misfit(v, p), p);
}

// ---------------------------------------------------------------------------
// Projection onto the admissible set (exact for nodal-value control spaces)
// ---------------------------------------------------------------------------

inline FeFunction project(const FeFunction& x, const AdmissibleSet& s) {
    FeFunction r = x;
    if (s.kind == AdmissibleSet::Kind::unconstrained) return r;
    const FeSpace& sp = *x.space;
    if (sp.family == Family::raviart_thomas || sp.order != 1)
        throw std::invalid_argument("project: nodal-value control space required");
    if (s.kind == AdmissibleSet::Kind::box) {
        const Mesh& m = *sp.mesh;
        for (int t = 0; t < m.n_triangles(); ++t) {
            auto c = m.tri_coords(t);
            for (int i = 0; i < 3; ++i) {
                double lo = s.lo(c[i].x, c[i].y), hi = s.hi(c[i].x, c[i].y);
                if (!(lo <= hi)) throw std::invalid_argument("project: box bounds cross");
                int d = sp.dof(t, i);
                r.coeffs[d] = std::min(hi, std::max(lo, r.coeffs[d]));
            }
        }
        return r;
    }
    double n = l2_norm(r);
    if (n > s.radius) r.coeffs *= s.radius / n;
    return r;
}

// ---------------------------------------------------------------------------
// Explicit minimizers of the bounds
// ---------------------------------------------------------------------------

// Minimizer of J_low(., q) over the admissible set, carried into the control
// space by nodal interpolation followed by projection.
inline FeFunction best_control_lower(const FeFunction& q, const ProblemData& p, const FeSpace& U) {
    const Mesh& m = *U.mesh;
    FeFunction g(U);
    for (int t = 0; t < m.n_triangles(); ++t) {
        auto c = m.tri_coords(t);
        for (int i = 0; i < 3; ++i) {
            std::array<double, 3> bary{};
            bary[static_cast<std::size_t>(i)] = 1.0;
            g.coeffs[U.dof(t, i)] = p.desired_control(c[i].x, c[i].y) +
                                    (p.desired_state(c[i].x, c[i].y) - eval(q, t, bary)) / p.alpha;
        }
    }
    return project(g, p.admissible);
}

// Minimizer of J_up(., tau, beta) over the admissible set. The variational
// inequality carries the combined weight (1+beta)/beta c^2 + alpha in a plain
// L2 product, so the projection is the same nodal clamp / radial scaling.
inline FeFunction best_control_upper(const FeFunction& tau, double beta, const ProblemData& p,
                                     const FeSpace& U) {
    if (!(beta > 0)) throw std::invalid_argument("best_control_upper: beta must be positive");
    const Mesh& m = *U.mesh;
    double gamma0 = (1.0 + beta) / beta * p.friedrichs * p.friedrichs;
    RtEvaluator ev(tau);
    FeFunction g(U);
    for (int t = 0; t < m.n_triangles(); ++t) {
        auto c = m.tri_coords(t);
        for (int i = 0; i < 3; ++i) {
            double divt = ev.divergence(t, c[i]);
            double num = p.alpha * p.desired_control(c[i].x, c[i].y) -
                         gamma0 * (divt + p.source(c[i].x, c[i].y));
            g.coeffs[U.dof(t, i)] = num / (gamma0 + p.alpha);
        }
    }
    return project(g, p.admissible);
}

// Flux system for the upper bound: assembled forms and data loads are
// control-independent, so one instance serves a whole minimization sweep.
class FluxSolver {
  public:
    FluxSolver(const FeSpace& Q, const FeSpace& U, const ProblemData& p)
        : Q_(&Q),
          forms_(assemble_rt_forms(Q, U)),
          load_grad_(assemble_rt_load_grad(Q, p.desired_state_grad)),
          load_div_f_(assemble_rt_load_div(Q, p.source)),
          c2_(p.friedrichs * p.friedrichs) {}

    // Solves the first-order condition of the upper bound in tau,
    //   beta (tau, xi) + c^2 (div tau, div xi)
    //     = beta (grad y^d, xi) - c^2 (f + v, div xi)   for all xi,
    // the minus sign coming from the residual ||div tau + f + v||^2.
    FeFunction solve(const FeFunction& v, double beta) const {
        if (!(beta > 0)) throw std::invalid_argument("FluxSolver: beta must be positive");
        SparseOperator A = beta * forms_.mass + c2_ * forms_.divdiv;
        Eigen::VectorXd rhs =
            beta * load_grad_ - c2_ * (load_div_f_ + forms_.div_to_scalar.transpose() * v.coeffs);
        FeFunction tau(*Q_);
        tau.coeffs = SpdSolver(std::move(A)).solve(rhs);
        return tau;
    }

    const RtForms& forms() const { return forms_; }

  private:
    const FeSpace* Q_;
    RtForms forms_;
    Eigen::VectorXd load_grad_;
    Eigen::VectorXd load_div_f_;
    double c2_;
};

inline FeFunction best_flux(const FeFunction& v, double beta, const ProblemData& p, const FeSpace& Q) {
    return FluxSolver(Q, *v.space, p).solve(v, beta);
}

// Minimizer of the state-error majorant for an arbitrary approximation z
// (the cost bound always uses z = y^d; this variant backs direct use of
// majorant_sq).
inline FeFunction best_flux_for_state(const FeFunction& z, const FeFunction& v, double beta,
                                      const ProblemData& p, const FeSpace& Q) {
    if (!(beta > 0)) throw std::invalid_argument("best_flux_for_state: beta must be positive");
    double c2 = p.friedrichs * p.friedrichs;
    RtForms forms = assemble_rt_forms(Q, *v.space);
    Eigen::VectorXd rhs =
        beta * assemble_rt_load_grad_ctx(
                   Q, [&](int t, Vec2, const std::array<double, 3>& b) { return eval_grad(z, t, b); }) -
        c2 * (assemble_rt_load_div(Q, p.source) + forms.div_to_scalar.transpose() * v.coeffs);
    SparseOperator A = beta * forms.mass + c2 * forms.divdiv;
    FeFunction tau(Q);
    tau.coeffs = SpdSolver(std::move(A)).solve(rhs);
    return tau;
}

inline constexpr double kBetaFloor = 1e-8;
inline constexpr double kBetaCeil = 1e8;

inline double best_beta_from_parts(const MajorantParts& parts, const ProblemData& p,
                                   bool* clamped = nullptr) {
    double num = p.friedrichs * std::sqrt(std::max(parts.residual_sq, 0.0));
    double den = std::sqrt(std::max(parts.flux_misfit_sq, 0.0));
    if (clamped) *clamped = false;
    if (num == 0.0 && den == 0.0) return 1.0;  // beta-independent bound
    double beta = den == 0.0 ? kBetaCeil : num / den;
    if (beta < kBetaFloor || beta > kBetaCeil) {
        if (clamped) *clamped = true;
        beta = std::min(kBetaCeil, std::max(kBetaFloor, beta));
    }
    return beta;
}

// Closed-form argmin over beta of J_up(v, tau, .), clamped to [1e-8, 1e8].
inline double best_beta(const FeFunction& v, const FeFunction& tau, const ProblemData& p,
                        bool* clamped = nullptr) {
    return best_beta_from_parts(majorant_parts(v, tau, p), p, clamped);
}

// ---------------------------------------------------------------------------
// Gradient representative and error-quantity bounds
// ---------------------------------------------------------------------------

// Negative gradient of the discrete cost in the control space:
//   d = 2 ( Pi(y^d - y_h) + alpha (Pi u^d - v) ),
// with Pi the L2 projection onto the control space.
inline FeFunction descent_direction(const FeFunction& v, const FeFunction& y_h, const ProblemData& p) {
    const FeSpace& U = *v.space;
    FeFunction proj = project_onto_dg(U, [&](int t, Vec2 x, const std::array<double, 3>& b) {
        return p.desired_state(x.x, x.y) - eval(y_h, t, b) + p.alpha * p.desired_control(x.x, x.y);
    });
    FeFunction d(U);
    d.coeffs = 2.0 * (proj.coeffs - p.alpha * v.coeffs);
    return d;
}

// err^2(v^k) bounds from recorded cost bounds:
//   lower = J_low(v^k) - J_up(v^N),  upper = J_up(v^k) - J_low^N(u).
inline ErrBounds err_bounds(double j_lower_v_k, double j_upper_v_k, double j_upper_v_final,
                            double j_lower_u_final) {
    ErrBounds e;
    e.err_sq_lower = j_lower_v_k - j_upper_v_final;
    e.err_sq_upper = j_upper_v_k - j_lower_u_final;
    return e;
}

// Guaranteed lower bound for the optimal cost J(u): evaluates J_low at the
// exact pointwise minimizer v = Pi_ad(u^d + (y^d - q)/alpha) under quadrature,
// never at a nodal interpolant, so the bound property survives discretization.
inline double cost_lower_at_optimum(const FeFunction& q, const ProblemData& p) {
    const Mesh& m = *q.space->mesh;
    auto unprojected = [&](int t, Vec2 x, const std::array<double, 3>& b) {
        return p.desired_control(x.x, x.y) + (p.desired_state(x.x, x.y) - eval(q, t, b)) / p.alpha;
    };
    double scale = 1.0;
    if (p.admissible.kind == AdmissibleSet::Kind::l2_ball) {
        double g2 = integrate_data(m, [&](int t, Vec2 x, const std::array<double, 3>& b) {
            double g = unprojected(t, x, b);
            return g * g;
        });
        double gn = std::sqrt(g2);
        if (gn > p.admissible.radius) scale = p.admissible.radius / gn;
    }
    auto vhat = [&](int t, Vec2 x, const std::array<double, 3>& b) {
        double g = unprojected(t, x, b);
        if (p.admissible.kind == AdmissibleSet::Kind::box)
            return std::min(p.admissible.hi(x.x, x.y), std::max(p.admissible.lo(x.x, x.y), g));
        return scale * g;
    };
    return integrate_data(m, [&](int t, Vec2 x, const std::array<double, 3>& b) {
        Vec2 gyd = p.desired_state_grad(x.x, x.y);
        Vec2 gq = eval_grad(q, t, b);
        double vh = vhat(t, x, b);
        double fv = p.source(x.x, x.y) + vh;
        double miss = vh - p.desired_control(x.x, x.y);
        return dot(gyd, gyd) - dot(gq, gq) -
               2.0 * fv * (p.desired_state(x.x, x.y) - eval(q, t, b)) + p.alpha * miss * miss;
    });
}

}  // namespace ocpb
