#pragma once

#include <memory>

#include "ocpbounds/ocp.hpp"
#include "ocpbounds/problems.hpp"

namespace ocpb {

struct RefValue {
    double value = 0;         // finer-level evaluation
    double coarse_value = 0;  // one-refinement evaluation
    double err_est = 0;       // Richardson estimate of the finer value's error
};

// Reference evaluations on one and two uniform refinements with an elevated
// state order. The two levels give a Richardson estimate of the reference
// error, so tests can verify the oracle is sharp enough before trusting it.
class ReferenceSolves {
  public:
    ReferenceSolves(const Mesh& coarse, int state_order, const ProblemData& p)
        : problem_(&p),
          fine1_(refine_uniform(coarse)),
          fine2_(refine_uniform(fine1_)) {
        state1_ = build_space(fine1_, Family::lagrange, state_order);
        state2_ = build_space(fine2_, Family::lagrange, state_order);
        ctrl1_ = build_space(fine1_, Family::discontinuous, 1);
        ctrl2_ = build_space(fine2_, Family::discontinuous, 1);
        solver1_ = std::make_unique<StateSolver>(state1_, ctrl1_, p);
        solver2_ = std::make_unique<StateSolver>(state2_, ctrl2_, p);
    }
    ReferenceSolves(const ReferenceSolves&) = delete;
    ReferenceSolves& operator=(const ReferenceSolves&) = delete;

    // J(v) = ||grad(y(v) - y^d)||^2 + alpha ||v - u^d||^2 with refined solves.
    RefValue cost(const FeFunction& v_coarse) const {
        FeFunction v1 = prolong(v_coarse, ctrl1_);
        FeFunction v2 = prolong(v1, ctrl2_);
        double j1 = cost_level(v1, *solver1_, fine1_);
        double j2 = cost_level(v2, *solver2_, fine2_);
        return {j2, j1, std::abs(j2 - j1) / 3.0};
    }

    // err^2(v) = |||y(v)-y(u)|||^2 + alpha ||v-u||^2 + <J'(u), v-u> against the
    // closed-form optimal pair of a manufactured case.
    RefValue err_sq(const FeFunction& v_coarse, const ManufacturedCase& c) const {
        FeFunction v1 = prolong(v_coarse, ctrl1_);
        FeFunction v2 = prolong(v1, ctrl2_);
        double e1 = err_level(v1, *solver1_, fine1_, c);
        double e2 = err_level(v2, *solver2_, fine2_, c);
        return {e2, e1, std::abs(e2 - e1) / 3.0};
    }

    const Mesh& fine_mesh() const { return fine2_; }

  private:
    double cost_level(const FeFunction& v, const StateSolver& solver, const Mesh& mesh) const {
        FeFunction y = solver.solve(v);
        const ProblemData& p = *problem_;
        return integrate_data(mesh, [&](int t, Vec2 x, const std::array<double, 3>& b) {
            Vec2 g = eval_grad(y, t, b) - p.desired_state_grad(x.x, x.y);
            double miss = eval(v, t, b) - p.desired_control(x.x, x.y);
            return dot(g, g) + p.alpha * miss * miss;
        });
    }

    double err_level(const FeFunction& v, const StateSolver& solver, const Mesh& mesh,
                     const ManufacturedCase& c) const {
        FeFunction y = solver.solve(v);
        const ProblemData& p = *problem_;
        return integrate_data(mesh, [&](int t, Vec2 x, const std::array<double, 3>& b) {
            Vec2 g = eval_grad(y, t, b) - c.grad_y_opt(x.x, x.y);
            double du = eval(v, t, b) - c.u_opt(x.x, x.y);
            // <J'(u), v-u> density: 2 [(y(u) - y^d) + alpha (u - u^d)] (v - u)
            double jprime = 2.0 * ((c.y_opt(x.x, x.y) - p.desired_state(x.x, x.y)) +
                                   p.alpha * (c.u_opt(x.x, x.y) - p.desired_control(x.x, x.y))) *
                            du;
            return dot(g, g) + p.alpha * du * du + jprime;
        });
    }

    const ProblemData* problem_;
    Mesh fine1_, fine2_;
    FeSpace state1_, state2_, ctrl1_, ctrl2_;
    std::unique_ptr<StateSolver> solver1_, solver2_;
};

// One-off oracle for err^2(v); heavier callers share a ReferenceSolves.
inline RefValue err_sq_reference(const FeFunction& v, const ProblemData& p,
                                 const ManufacturedCase& c, int state_order) {
    ReferenceSolves refs(*v.space->mesh, state_order, p);
    return refs.err_sq(v, c);
}

}  // namespace ocpb
