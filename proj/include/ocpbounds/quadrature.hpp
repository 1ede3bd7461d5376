#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ocpb {

// Quadrature on the reference triangle. Points are barycentric, weights are
// normalized to sum to 1, so that  int_T f = |T| * sum_k w_k f(x_k).
struct QuadratureRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

// Golub-Welsch: nodes/weights of an n-point Gauss rule for the Jacobi weight
// (1-x)^a (1+x)^b on [-1,1], returned mapped to [0,1].
inline void gauss_jacobi_01(int n, double a, double b,
                            std::vector<double>& nodes, std::vector<double>& weights) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    auto diag = [&](int k) {
        double s = 2.0 * k + a + b;
        if (s == 0.0 || s + 2.0 == 0.0) return (b - a) == 0.0 ? 0.0 : (b - a) / ((s) * (s + 2.0));
        return (b * b - a * a) / (s * (s + 2.0));
    };
    auto offdiag2 = [&](int k) {  // k >= 1
        double s = 2.0 * k + a + b;
        return 4.0 * k * (k + a) * (k + b) * (k + a + b) /
               (s * s * (s + 1.0) * (s - 1.0));
    };
    for (int k = 0; k < n; ++k) {
        J(k, k) = diag(k);
        if (k >= 1) {
            double beta = offdiag2(k);
            J(k, k - 1) = J(k - 1, k) = std::sqrt(beta);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    // mu0 = int_{-1}^{1} (1-x)^a (1+x)^b dx = 2^{a+b+1} B(a+1, b+1)
    double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
                 std::tgamma(a + b + 2.0);
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        nodes[static_cast<std::size_t>(k)] = 0.5 * (es.eigenvalues()(k) + 1.0);
        double v0 = es.eigenvectors()(0, k);
        // map to [0,1]: weight picks up 2^{-(a+b+1)}
        weights[static_cast<std::size_t>(k)] =
            mu0 * v0 * v0 / std::pow(2.0, a + b + 1.0);
    }
}

// Conical-product rule: Gauss-Legendre in xi times Gauss-Jacobi(1,0) in eta
// under the Duffy map (x,y) = (xi(1-eta), eta). An n x n product rule is
// exact for total degree 2n-1.
inline QuadratureRule conical_product(int degree) {
    int n = (degree + 2) / 2;  // ceil((degree+1)/2)
    std::vector<double> xg, wg, xj, wj;
    gauss_jacobi_01(n, 0.0, 0.0, xg, wg);  // Legendre on [0,1], weight 1
    gauss_jacobi_01(n, 1.0, 0.0, xj, wj);  // weight (1-x) on [0,1]
    QuadratureRule r;
    r.degree = degree;
    r.points.reserve(static_cast<std::size_t>(n) * n);
    r.weights.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double x = xg[static_cast<std::size_t>(i)] * (1.0 - xj[static_cast<std::size_t>(j)]);
            double y = xj[static_cast<std::size_t>(j)];
            r.points.push_back({1.0 - x - y, x, y});
            // |T_ref| = 1/2 and sum wg = 1, sum wj = 1/2: normalize to sum 1.
            r.weights.push_back(2.0 * wg[static_cast<std::size_t>(i)] * wj[static_cast<std::size_t>(j)]);
        }
    }
    return r;
}

}  // namespace detail

// Rule exact for bivariate polynomials of total degree <= `degree`.
// Degrees 1 and 2 use the classic symmetric rules; higher degrees use a
// conical-product Gauss rule (degree 21 gives the 11x11 = 121 point rule).
inline QuadratureRule quadrature(int degree) {
    if (degree < 1) throw std::invalid_argument("quadrature: degree must be >= 1");
    if (degree > 50) throw std::invalid_argument("quadrature: unsupported degree (max 50)");
    QuadratureRule r;
    r.degree = degree;
    if (degree == 1) {
        r.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        r.weights = {1.0};
        return r;
    }
    if (degree == 2) {
        r.points = {{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                    {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                    {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
        r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        return r;
    }
    return detail::conical_product(degree);
}

}  // namespace ocpb
