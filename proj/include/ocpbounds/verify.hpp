#pragma once

#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "ocpbounds/algorithms.hpp"
#include "ocpbounds/problems.hpp"

namespace ocpb {

struct VerifyOptions {
    // Test fixture: flips the sign of the dual (residual) term when the
    // verification suite recomputes the cost upper bound, which must surface
    // as a named bracket_ordering failure.
    bool inject_majorant_sign_error = false;
};

namespace detail {

class VerifyReport {
  public:
    explicit VerifyReport(std::ostream& os) : os_(os) {}
    void result(const std::string& name, bool ok, const std::string& detail = "") {
        os_ << (ok ? "PASS " : "FAIL ") << name;
        if (!ok && !detail.empty()) os_ << ": " << detail;
        os_ << '\n';
        all_ok_ = all_ok_ && ok;
    }
    bool all_ok() const { return all_ok_; }

  private:
    std::ostream& os_;
    bool all_ok_ = true;
};

}  // namespace detail

// Cross-module invariant checks on small meshes. Prints one PASS/FAIL line
// per named invariant and returns whether all of them held.
inline bool run_verification(std::ostream& os, const VerifyOptions& opts = {}) {
    detail::VerifyReport report(os);
    std::mt19937 rng(2024);

    {  // mesh integrity
        bool ok = true;
        std::string why;
        for (int n : {2, 4, 7}) {
            auto m = unit_square_mesh(n);
            double area = 0;
            for (int t = 0; t < m.n_triangles(); ++t) {
                if (m.tri_area(t) <= 0) ok = false;
                area += m.tri_area(t);
            }
            if (std::abs(area - 1.0) > 1e-12) ok = false;
            if (m.n_vertices() - m.n_edges() + m.n_triangles() + 1 != 2) ok = false;
            if (!ok) {
                why = "n = " + std::to_string(n);
                break;
            }
        }
        report.result("mesh_integrity", ok, why);
    }

    {  // quadrature exactness
        bool ok = true;
        auto fact = [](int k) {
            double f = 1;
            for (int i = 2; i <= k; ++i) f *= i;
            return f;
        };
        for (int degree : {2, 5, 21}) {
            auto r = quadrature(degree);
            for (int a = 0; a <= degree && ok; ++a) {
                for (int b = 0; a + b <= degree && ok; ++b) {
                    double got = 0;
                    for (int k = 0; k < r.size(); ++k)
                        got += r.weights[k] * std::pow(r.points[k][1], a) * std::pow(r.points[k][2], b);
                    double exact = fact(a) * fact(b) / fact(a + b + 2);
                    if (std::abs(0.5 * got - exact) > 1e-12 * (1 + std::abs(exact))) ok = false;
                }
            }
        }
        report.result("quadrature_exactness", ok);
    }

    auto c = build_case(1, 1, 2, 1, 0.5, 0.05, -3.0, 3.0);
    auto p = c.problem();
    auto m = unit_square_mesh(4);
    Discretization d(m, 1, 1, p);
    auto v = interpolate(d.control, [&](double x, double y) { return c.u_opt(x, y); });
    auto y = d.state_solver->solve(v);

    {  // discrete Mikhlin identity
        bool ok = true;
        std::normal_distribution<double> g;
        for (int rep = 0; rep < 5 && ok; ++rep) {
            FeFunction z(d.state);
            for (int i = 0; i < d.state.n_dofs; ++i)
                z.coeffs[i] = d.state.dirichlet[static_cast<std::size_t>(i)] ? 0.0 : g(rng);
            Eigen::VectorXd dz = z.coeffs - y.coeffs;
            double exact = dz.dot(d.state_solver->stiffness() * dz);
            double got = minorant_sq(z, y, p, v);
            double zn = z.coeffs.dot(d.state_solver->stiffness() * z.coeffs);
            if (std::abs(got - exact) > 1e-9 * (1 + zn)) ok = false;
        }
        report.result("mikhlin_identity", ok);
    }

    {  // bracket ordering of the cost bounds
        double j_low = cost_lower(v, y, p);
        double beta = 1.0;
        FeFunction tau = d.flux_solver->solve(v, beta);
        beta = best_beta(v, tau, p);
        tau = d.flux_solver->solve(v, beta);
        MajorantParts parts = majorant_parts(v, tau, p);
        double dual = (1.0 + beta) / beta * p.friedrichs * p.friedrichs * parts.residual_sq;
        if (opts.inject_majorant_sign_error) dual = -dual;
        double j_up = (1.0 + beta) * parts.flux_misfit_sq + dual + control_misfit(v, p);
        double j_low_u = cost_lower_at_optimum(d.state_solver->solve(best_control_lower(y, p, d.control)), p);
        bool ok = j_low <= j_up && j_low_u <= j_up;
        report.result("bracket_ordering", ok,
                      "J_lower_v=" + std::to_string(j_low) + " J_upper_v=" + std::to_string(j_up));
    }

    {  // minimizer optimality
        bool ok = true;
        double beta = 0.9;
        FeFunction tau = d.flux_solver->solve(v, beta);
        double ctrl = control_misfit(v, p);
        MajorantParts parts = majorant_parts(v, tau, p);
        double bhat = best_beta_from_parts(parts, p);
        double at_hat = cost_upper_from_parts(parts, bhat, ctrl, p);
        for (double f : {0.1, 0.5, 2.0, 10.0})
            if (at_hat > cost_upper_from_parts(parts, bhat * f, ctrl, p) + 1e-12) ok = false;

        double at_tau = cost_upper(v, tau, beta, p);
        std::normal_distribution<double> g;
        for (int rep = 0; rep < 20 && ok; ++rep) {
            FeFunction w(d.flux);
            double scale = rep % 2 == 0 ? 0.3 : 1e-3;
            for (int i = 0; i < d.flux.n_dofs; ++i) w.coeffs[i] = tau.coeffs[i] + scale * g(rng);
            if (cost_upper(v, w, beta, p) < at_tau - 1e-9 * (1 + at_tau)) ok = false;
        }

        auto vhat = best_control_lower(y, p, d.control);
        double best = cost_lower(vhat, y, p);
        std::uniform_real_distribution<double> ur(-3.0, 3.0);
        for (int rep = 0; rep < 20 && ok; ++rep) {
            FeFunction w(d.control);
            for (int i = 0; i < d.control.n_dofs; ++i) w.coeffs[i] = ur(rng);
            if (cost_lower(w, y, p) < best - 1e-9 * (1 + std::abs(best))) ok = false;
        }
        report.result("minimizer_optimality", ok);
    }

    {  // gradient check: first-order finite-difference agreement
        bool ok = true;
        auto dir = descent_direction(v, y, p);
        double j0 = discrete_cost_given_state(v, y, d, p);
        std::uniform_real_distribution<double> ur(-1.0, 1.0);
        for (int rep = 0; rep < 3 && ok; ++rep) {
            FeFunction w(d.control);
            for (int i = 0; i < d.control.n_dofs; ++i) w.coeffs[i] = ur(rng);
            double dw = dir.coeffs.dot(d.mass_control * w.coeffs);
            double prev = -1;
            for (double t : {1e-3, 1e-4}) {
                FeFunction vt(d.control);
                vt.coeffs = v.coeffs + t * w.coeffs;
                double err = std::abs((discrete_cost(vt, d, p) - j0) / t + dw);
                if (prev > 0 && (prev / err < 5 || prev / err > 20)) ok = false;
                prev = err;
            }
        }
        report.result("gradient_check", ok);
    }

    {  // projection properties
        bool ok = true;
        auto mass = d.mass_control;
        auto box = AdmissibleSet::box_bounds(-3.0, 3.0);
        auto ball = AdmissibleSet::ball(1.0);
        std::uniform_real_distribution<double> ur(-5.0, 5.0);
        for (int rep = 0; rep < 100 && ok; ++rep) {
            FeFunction a(d.control), b(d.control);
            for (int i = 0; i < d.control.n_dofs; ++i) {
                a.coeffs[i] = ur(rng);
                b.coeffs[i] = ur(rng);
            }
            for (const auto& s : {box, ball}) {
                auto pa = project(a, s);
                auto pb = project(b, s);
                auto ppa = project(pa, s);
                if ((ppa.coeffs - pa.coeffs).lpNorm<Eigen::Infinity>() > 1e-12) ok = false;
                Eigen::VectorXd dp = pa.coeffs - pb.coeffs;
                Eigen::VectorXd d0 = a.coeffs - b.coeffs;
                if (std::sqrt(dp.dot(mass * dp)) > std::sqrt(d0.dot(mass * d0)) + 1e-12) ok = false;
            }
        }
        report.result("projection_properties", ok);
    }

    return report.all_ok();
}

}  // namespace ocpb
