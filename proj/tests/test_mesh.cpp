#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "ocpbounds/mesh.hpp"
#include "ocpbounds/quadrature.hpp"

using namespace ocpb;

namespace {

double total_area(const Mesh& m) {
    double a = 0;
    for (int t = 0; t < m.n_triangles(); ++t) a += m.tri_area(t);
    return a;
}

// Exact moment of x^a y^b over the reference triangle.
double ref_moment(int a, int b) {
    auto fact = [](int n) {
        double f = 1;
        for (int i = 2; i <= n; ++i) f *= i;
        return f;
    };
    return fact(a) * fact(b) / fact(a + b + 2);
}

double rule_moment(const QuadratureRule& r, int a, int b) {
    double s = 0;
    for (int k = 0; k < r.size(); ++k) {
        double x = r.points[k][1], y = r.points[k][2];
        s += r.weights[k] * std::pow(x, a) * std::pow(y, b);
    }
    return 0.5 * s;  // |T_ref| = 1/2
}

void check_mesh_invariants(const Mesh& m) {
    for (int t = 0; t < m.n_triangles(); ++t) REQUIRE(m.tri_area(t) > 0.0);
    // Euler relation #V - #E + (#T + 1) = 2
    REQUIRE(m.n_vertices() - m.n_edges() + m.n_triangles() + 1 == 2);
    for (int e = 0; e < m.n_edges(); ++e) {
        bool boundary = m.boundary_edge[e] != 0;
        REQUIRE((m.edge_tris[e][1] == -1) == boundary);
        REQUIRE(m.edge_tris[e][0] >= 0);
    }
    REQUIRE(std::abs(total_area(m) - 1.0) < 1e-12);
}

}  // namespace

TEST_CASE("unit_square_mesh counts") {
    auto m50 = unit_square_mesh(50);
    CHECK(m50.n_vertices() == 2601);
    CHECK(m50.n_triangles() == 5000);
    CHECK(m50.n_edges() == 7600);

    auto m1 = unit_square_mesh(1);
    CHECK(m1.n_vertices() == 4);
    CHECK(m1.n_triangles() == 2);
    CHECK(m1.n_edges() == 5);

    auto m2 = unit_square_mesh(2);
    CHECK(m2.n_vertices() == 9);
    CHECK(m2.n_triangles() == 8);
    CHECK(m2.n_edges() == 16);

    CHECK_THROWS_AS(unit_square_mesh(0), std::invalid_argument);
}

TEST_CASE("mesh invariants on several sizes") {
    for (int n : {1, 2, 3, 7, 16}) {
        auto m = unit_square_mesh(n);
        check_mesh_invariants(m);
        CHECK(m.n_edges() == n * (3 * n + 2));
    }
}

TEST_CASE("triangle geometry helpers") {
    auto m = unit_square_mesh(2);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.3);
    for (int t = 0; t < m.n_triangles(); ++t) {
        std::array<double, 3> b{u(rng), u(rng), 0.0};
        b[2] = 1.0 - b[0] - b[1];
        Vec2 p = m.point_at(t, b);
        auto back = m.barycentric(t, p);
        for (int i = 0; i < 3; ++i) CHECK(back[i] == Catch::Approx(b[i]).margin(1e-13));
        // barycentric gradients: grad(lambda_i) dotted with edge vectors
        auto g = m.bary_gradients(t);
        auto c = m.tri_coords(t);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(dot(g[i], c[j] - c[(j + 1) % 3]) ==
                      Catch::Approx((i == j ? 1.0 : 0.0) - (i == (j + 1) % 3 ? 1.0 : 0.0)).margin(1e-12));
    }
}

TEST_CASE("refine_uniform") {
    auto m1 = unit_square_mesh(1);
    auto r1 = refine_uniform(m1);
    CHECK(r1.n_triangles() == 8);
    check_mesh_invariants(r1);

    auto r2 = refine_uniform(r1);
    CHECK(r2.n_triangles() == 32);
    check_mesh_invariants(r2);

    auto m50 = unit_square_mesh(50);
    CHECK(refine_uniform(m50).n_triangles() == 20000);

    SECTION("children cover the parent") {
        auto m = unit_square_mesh(3);
        auto r = refine_uniform(m);
        for (int t = 0; t < r.n_triangles(); ++t) {
            int parent = t / 4;
            Vec2 c = r.point_at(t, {1.0 / 3, 1.0 / 3, 1.0 / 3});
            auto b = m.barycentric(parent, c);
            for (double bi : b) CHECK(bi > -1e-12);
        }
    }

    SECTION("boundary preserved") {
        auto m = unit_square_mesh(4);
        auto r = refine_uniform(m);
        for (int v = 0; v < r.n_vertices(); ++v) {
            if (!r.boundary_vertex[v]) continue;
            Vec2 p = r.vertices[v];
            bool on_boundary = p.x < 1e-14 || p.y < 1e-14 || p.x > 1 - 1e-14 || p.y > 1 - 1e-14;
            CHECK(on_boundary);
        }
    }
}

TEST_CASE("quadrature basic rules") {
    auto r1 = quadrature(1);
    REQUIRE(r1.size() == 1);
    CHECK(r1.weights[0] == Catch::Approx(1.0));
    CHECK(r1.points[0][0] == Catch::Approx(1.0 / 3.0));

    auto r2 = quadrature(2);
    REQUIRE(r2.size() == 3);
    for (auto [a, b] : {std::pair{2, 0}, {1, 1}, {0, 2}})
        CHECK(rule_moment(r2, a, b) == Catch::Approx(ref_moment(a, b)).epsilon(1e-13));

    auto r21 = quadrature(21);
    CHECK(r21.size() == 121);

    CHECK_THROWS_AS(quadrature(0), std::invalid_argument);
    CHECK_THROWS_AS(quadrature(51), std::invalid_argument);
}

TEST_CASE("quadrature exactness against closed-form moments") {
    for (int degree : {3, 4, 5, 8, 13, 20, 21, 30}) {
        auto r = quadrature(degree);
        double wsum = 0;
        for (double w : r.weights) wsum += w;
        REQUIRE(std::abs(wsum - 1.0) < 1e-14);
        for (int a = 0; a + 0 <= degree; ++a)
            for (int b = 0; a + b <= degree; ++b)
                REQUIRE(rule_moment(r, a, b) ==
                        Catch::Approx(ref_moment(a, b)).epsilon(1e-12).margin(1e-16));
    }
}

TEST_CASE("quadrature integrates random polynomials on the mesh") {
    // sum over triangles of |T| sum_k w_k p(x_k) versus the analytic integral
    // over the unit square, for random polynomials of admissible degree.
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    auto m = unit_square_mesh(3);
    for (int degree : {2, 4, 7}) {
        auto r = quadrature(degree);
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<std::array<double, 3>> terms;  // (c, a, b)
            for (int a = 0; a <= degree; ++a)
                for (int b = 0; a + b <= degree; ++b)
                    terms.push_back({coef(rng), double(a), double(b)});
            double exact = 0;
            for (auto& t : terms) exact += t[0] / ((t[1] + 1) * (t[2] + 1));
            double got = 0;
            for (int t = 0; t < m.n_triangles(); ++t) {
                double a = m.tri_area(t);
                for (int k = 0; k < r.size(); ++k) {
                    Vec2 p = m.point_at(t, r.points[k]);
                    double val = 0;
                    for (auto& term : terms)
                        val += term[0] * std::pow(p.x, term[1]) * std::pow(p.y, term[2]);
                    got += a * r.weights[k] * val;
                }
            }
            REQUIRE(got == Catch::Approx(exact).epsilon(1e-12));
        }
    }
}

TEST_CASE("mesh text export") {
    auto m = unit_square_mesh(1);
    std::ostringstream os;
    write_text(m, os);
    std::istringstream is(os.str());
    int nv, nt;
    is >> nv >> nt;
    CHECK(nv == 4);
    CHECK(nt == 2);
}
