#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <limits>
#include <stdexcept>
#include <string>

#include "ocpbounds/assembly.hpp"

namespace ocpb {

struct SolverError : std::runtime_error {
    double residual;
    explicit SolverError(double res)
        : std::runtime_error("SPD solve failed, relative residual " + std::to_string(res)),
          residual(res) {}
};

// SPD solve with a residual contract: ||Ax-b|| / ||b|| <= 1e-10 or throw.
// Direct sparse Cholesky first, diagonally preconditioned CG as fallback.
class SpdSolver {
  public:
    explicit SpdSolver(SparseOperator A) : A_(std::move(A)) {
        A_.makeCompressed();
        ldlt_.compute(A_);
    }

    const SparseOperator& matrix() const { return A_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        constexpr double tol = 1e-10;
        double bn = b.norm();
        if (bn == 0.0) return Eigen::VectorXd::Zero(b.size());
        Eigen::VectorXd x;
        if (ldlt_.info() == Eigen::Success) {
            x = ldlt_.solve(b);
        } else {
            x = Eigen::VectorXd::Zero(b.size());
        }
        double res = residual(x, b, bn);
        if (res <= tol) return x;
        Eigen::ConjugateGradient<SparseOperator, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-13);
        cg.setMaxIterations(20 * b.size());
        cg.compute(A_);
        Eigen::VectorXd x2;
        if (x.allFinite()) {
            x2 = cg.solveWithGuess(b, x);
        } else {
            x2 = cg.solve(b);
        }
        double res2 = residual(x2, b, bn);
        if (res2 <= tol) return x2;
        throw SolverError(std::isfinite(res2) ? std::min(res, res2) : res2);
    }

  private:
    double residual(const Eigen::VectorXd& x, const Eigen::VectorXd& b, double bn) const {
        if (!x.allFinite()) return std::numeric_limits<double>::quiet_NaN();
        return (A_ * x - b).norm() / bn;
    }

    SparseOperator A_;
    Eigen::SimplicialLDLT<SparseOperator> ldlt_;
};

inline Eigen::VectorXd solve_spd(const SparseOperator& A, const Eigen::VectorXd& b) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw std::invalid_argument("solve_spd: dimension mismatch");
    return SpdSolver(A).solve(b);
}

}  // namespace ocpb
