#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ocpbounds/ocp.hpp"

namespace ocpb {

struct CostEstimateParams {
    int i_max = 20;      // maximum tau/beta sweeps
    double eps = 1e-4;   // relative decrease threshold of the upper bound

    void validate() const {
        if (i_max < 1 || !(eps > 0)) throw std::invalid_argument("CostEstimateParams: invalid");
    }
};

struct PgParams {
    int i_max_pg = 10;
    double eps_pg = 1e-6;       // relative control-change stopping threshold
    double lambda_max = 1.0;    // initial line-search interval (auto-doubled)
    double golden_tol = 1e-4;
    CostEstimateParams alg1;

    void validate() const {
        alg1.validate();
        if (i_max_pg < 1 || !(eps_pg > 0) || !(lambda_max > 0) || !(golden_tol > 0))
            throw std::invalid_argument("PgParams: invalid");
    }
};

struct CostBounds {
    double j_lower_v = 0;   // guaranteed lower bound for J(v)
    double j_upper_v = 0;   // guaranteed upper bound for J(v) (and for nothing less than J(u))
    double j_lower_u = 0;   // guaranteed lower bound for the optimal cost J(u)
    double beta_final = 1.0;
    int iterations_used = 0;
    bool beta_clamped = false;
    std::vector<double> upper_history;  // J_up after each completed sweep
};

// Spaces, factorizations and data loads for one discretization. Holds
// self-references, so instances are pinned in place once constructed.
struct Discretization {
    const Mesh* mesh = nullptr;
    FeSpace state, flux, control;
    std::unique_ptr<StateSolver> state_solver;
    std::unique_ptr<FluxSolver> flux_solver;
    SparseOperator mass_control;
    Eigen::VectorXd load_yd_control;  // int phi^U_i y^d
    Eigen::VectorXd load_ud_control;  // int phi^U_i u^d
    double norm_ud_sq = 0;            // int (u^d)^2
    double norm_gyd_sq = 0;           // int |grad y^d|^2
    double load_f_yd = 0;             // int f y^d

    Discretization(const Mesh& m, int p_state, int p_flux, const ProblemData& p) : mesh(&m) {
        state = build_space(m, Family::lagrange, p_state);
        flux = build_space(m, Family::raviart_thomas, p_flux);
        control = build_space(m, Family::discontinuous, 1);
        state_solver = std::make_unique<StateSolver>(state, control, p);
        flux_solver = std::make_unique<FluxSolver>(flux, control, p);
        mass_control = assemble_mass(control);
        load_yd_control = assemble_load(control, p.desired_state);
        load_ud_control = assemble_load(control, p.desired_control);
        norm_ud_sq = integrate_data(m, [&](int, Vec2 x, const std::array<double, 3>&) {
            double u = p.desired_control(x.x, x.y);
            return u * u;
        });
        norm_gyd_sq = integrate_data(m, [&](int, Vec2 x, const std::array<double, 3>&) {
            Vec2 g = p.desired_state_grad(x.x, x.y);
            return dot(g, g);
        });
        load_f_yd = integrate_data(m, [&](int, Vec2 x, const std::array<double, 3>&) {
            return p.source(x.x, x.y) * p.desired_state(x.x, x.y);
        });
    }
    Discretization(const Discretization&) = delete;
    Discretization& operator=(const Discretization&) = delete;
};

// Discrete cost J_h(v) = E(y^d) - E(y^h(v)) + alpha ||v - u^d||^2 evaluated
// through the assembled forms; exactly quadratic in v.
inline double discrete_cost_given_state(const FeFunction& v, const FeFunction& y,
                                        const Discretization& d, const ProblemData& p) {
    Eigen::VectorXd b = d.state_solver->source_load() + d.state_solver->control_pairing() * v.coeffs;
    double e_yh = y.coeffs.dot(d.state_solver->stiffness() * y.coeffs) - 2.0 * b.dot(y.coeffs);
    double e_yd = d.norm_gyd_sq - 2.0 * d.load_f_yd - 2.0 * v.coeffs.dot(d.load_yd_control);
    double ctrl = p.alpha * (v.coeffs.dot(d.mass_control * v.coeffs) -
                             2.0 * v.coeffs.dot(d.load_ud_control) + d.norm_ud_sq);
    return e_yd - e_yh + ctrl;
}

inline double discrete_cost(const FeFunction& v, const Discretization& d, const ProblemData& p) {
    FeFunction y = d.state_solver->solve(v);
    return discrete_cost_given_state(v, y, d, p);
}

namespace detail {

inline CostBounds generate_cost_estimates_impl(const FeFunction& v_in, const Discretization& d,
                                               const ProblemData& p, const CostEstimateParams& prm,
                                               FeFunction* y_out) {
    prm.validate();
    FeFunction v = project(v_in, p.admissible);
    {
        FeFunction diff(*v_in.space);
        diff.coeffs = v.coeffs - v_in.coeffs;
        if (l2_norm(diff) > 1e-10 * (1.0 + l2_norm(v_in)))
            throw std::invalid_argument("generate_cost_estimates: control violates the admissible set");
    }

    FeFunction y = d.state_solver->solve(v);
    double ctrl = control_misfit(v, p);
    CostBounds cb;
    cb.j_lower_v = cost_lower(v, y, p);

    double beta = 1.0;
    double j_prev = 0, j_cur = 0;
    int k = 1;
    for (;; ++k) {
        FeFunction tau = d.flux_solver->solve(v, beta);
        MajorantParts parts = majorant_parts(v, tau, p);
        if (k == 1) j_prev = cost_upper_from_parts(parts, beta, ctrl, p);
        bool clamped = false;
        beta = best_beta_from_parts(parts, p, &clamped);
        cb.beta_clamped = cb.beta_clamped || clamped;
        j_cur = cost_upper_from_parts(parts, beta, ctrl, p);
        cb.upper_history.push_back(j_cur);
        double rel = (j_prev - j_cur) / std::max(std::abs(j_cur), 1e-300);
        j_prev = j_cur;
        if (rel < prm.eps || k >= prm.i_max) break;
    }
    cb.iterations_used = k;
    cb.beta_final = beta;
    cb.j_upper_v = j_cur;

    // Lower bound for J(u): fresh state solve at the projected minimizer of
    // J_low(., y), then J_low evaluated at the exact pointwise minimizer
    // paired with that state.
    FeFunction vhat = best_control_lower(y, p, d.control);
    FeFunction q2 = d.state_solver->solve(vhat);
    cb.j_lower_u = cost_lower_at_optimum(q2, p);

    if (y_out) *y_out = std::move(y);
    return cb;
}

}  // namespace detail

// Bound generation for a fixed control: maximize J_low over the discrete
// state space (one solve), minimize J_up by alternating flux solves with the
// closed-form beta update, and certify a lower bound for the optimal cost.
inline CostBounds generate_cost_estimates(const FeFunction& v, const Discretization& d,
                                          const ProblemData& p, const CostEstimateParams& prm) {
    return detail::generate_cost_estimates_impl(v, d, p, prm, nullptr);
}

// Golden-section search on [0, lambda_max]; returns the best point evaluated,
// endpoints included, so phi(returned) <= phi(0) always holds. Unimodality is
// assumed, not checked.
inline double golden_section(const std::function<double(double)>& phi, double lambda_max, double tol) {
    if (!(lambda_max > 0) || !(tol > 0))
        throw std::invalid_argument("golden_section: positive interval and tolerance required");
    const double gr = 0.6180339887498949;
    double best_x = 0.0, best_f = phi(0.0);
    auto consider = [&](double x, double f) {
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    };
    consider(lambda_max, phi(lambda_max));
    double a = 0.0, b = lambda_max;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = phi(x1), f2 = phi(x2);
    consider(x1, f1);
    consider(x2, f2);
    while (b - a > tol * lambda_max) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = phi(x1);
            consider(x1, f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = phi(x2);
            consider(x2, f2);
        }
    }
    return best_x;
}

// v^{k+1} = Pi_ad(v^k + s d): the update keeps iterates admissible.
inline FeFunction projected_step(const FeFunction& v, const FeFunction& dir, double s,
                                 const AdmissibleSet& set) {
    FeFunction w(*v.space);
    w.coeffs = v.coeffs + s * dir.coeffs;
    return project(w, set);
}

struct PgRecord {
    int iteration = 0;
    double j_lower_v = 0, j_upper_v = 0, j_lower_u = 0;
    double step = 0;
    double control_change = 0;  // ||v^{k+1} - v^k|| / ||v^k||
    double j_h = 0;             // discrete cost at this iterate
    double err_sq_lower = 0, err_sq_upper = 0;  // filled after the run
};

struct PgTrace {
    std::vector<PgRecord> records;
    double j_upper_v_final = 0;
    double j_lower_u_final = 0;
};

struct PgAborted : std::runtime_error {
    PgTrace partial;
    PgAborted(const std::string& what, PgTrace t) : std::runtime_error(what), partial(std::move(t)) {}
};

namespace detail {

inline void attach_err_bounds(PgTrace& trace) {
    for (auto& r : trace.records) {
        ErrBounds e = err_bounds(r.j_lower_v, r.j_upper_v, trace.j_upper_v_final, trace.j_lower_u_final);
        r.err_sq_lower = e.err_sq_lower;
        r.err_sq_upper = e.err_sq_upper;
    }
}

}  // namespace detail

// Projected gradient method with guaranteed cost estimates: every iteration
// records the two-sided bounds at the current control, then steps along the
// projected negative-gradient direction with a golden-section line search.
// After the run the last iterate's bounds turn the per-iteration records into
// two-sided bounds for the error quantity J(v^k) - J(u).
// `on_iterate`, when set, observes every visited control before its update.
inline PgTrace projected_gradient(const FeFunction& v0, const Discretization& d,
                                  const ProblemData& p, const PgParams& prm,
                                  const std::function<void(int, const FeFunction&)>& on_iterate = {}) {
    prm.validate();
    PgTrace trace;
    FeFunction v = project(v0, p.admissible);
    try {
        for (int k = 0; k < prm.i_max_pg; ++k) {
            if (on_iterate) on_iterate(k, v);
            FeFunction y;
            CostBounds cb = detail::generate_cost_estimates_impl(v, d, p, prm.alg1, &y);
            FeFunction dir = descent_direction(v, y, p);
            double j0 = discrete_cost_given_state(v, y, d, p);
            auto phi = [&](double lam) {
                if (lam == 0.0) return j0;
                return discrete_cost(projected_step(v, dir, lam, p.admissible), d, p);
            };
            double lmax = prm.lambda_max;
            double s = golden_section(phi, lmax, prm.golden_tol);
            for (int doublings = 0; doublings < 10 && lmax - s <= 2.0 * prm.golden_tol * lmax;
                 ++doublings) {
                lmax *= 2.0;
                s = golden_section(phi, lmax, prm.golden_tol);
            }
            FeFunction vnext = projected_step(v, dir, s, p.admissible);
            FeFunction diff(d.control);
            diff.coeffs = vnext.coeffs - v.coeffs;
            double change = l2_norm(diff) / std::max(l2_norm(v), 1e-300);

            PgRecord rec;
            rec.iteration = k;
            rec.j_lower_v = cb.j_lower_v;
            rec.j_upper_v = cb.j_upper_v;
            rec.j_lower_u = cb.j_lower_u;
            rec.step = s;
            rec.control_change = change;
            rec.j_h = j0;
            trace.records.push_back(rec);
            trace.j_upper_v_final = cb.j_upper_v;
            trace.j_lower_u_final = cb.j_lower_u;

            v = std::move(vnext);
            if (change < prm.eps_pg) break;
        }
    } catch (const std::exception& e) {
        detail::attach_err_bounds(trace);
        throw PgAborted(e.what(), std::move(trace));
    }
    detail::attach_err_bounds(trace);
    return trace;
}

}  // namespace ocpb
