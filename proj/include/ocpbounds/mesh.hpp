#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace ocpb {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Conforming triangulation of the unit square. Triangles are stored with
// counter-clockwise vertex order. Edges are undirected pairs (lo, hi) with
// lo < hi; the global edge direction runs from the lower to the higher
// vertex index, which fixes the normal orientation used by H(div) elements.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;      // (lo, hi) vertex ids
    std::vector<std::array<int, 2>> edge_tris;  // adjacent triangles, -1 if boundary
    std::vector<std::array<int, 3>> tri_edges;  // local edge i is opposite vertex i
    std::vector<unsigned char> boundary_vertex;
    std::vector<unsigned char> boundary_edge;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }

    std::array<Vec2, 3> tri_coords(int t) const {
        const auto& tri = triangles[static_cast<std::size_t>(t)];
        return {vertices[static_cast<std::size_t>(tri[0])],
                vertices[static_cast<std::size_t>(tri[1])],
                vertices[static_cast<std::size_t>(tri[2])]};
    }

    // Signed area; positive for CCW triangles.
    double tri_area(int t) const {
        auto c = tri_coords(t);
        return 0.5 * ((c[1].x - c[0].x) * (c[2].y - c[0].y) -
                      (c[2].x - c[0].x) * (c[1].y - c[0].y));
    }

    Vec2 point_at(int t, const std::array<double, 3>& bary) const {
        auto c = tri_coords(t);
        return bary[0] * c[0] + bary[1] * c[1] + bary[2] * c[2];
    }

    // Gradients of the barycentric coordinate functions (constant per triangle).
    std::array<Vec2, 3> bary_gradients(int t) const {
        auto c = tri_coords(t);
        double inv2a = 1.0 / (2.0 * tri_area(t));
        std::array<Vec2, 3> g;
        for (int i = 0; i < 3; ++i) {
            const Vec2& pj = c[(i + 1) % 3];
            const Vec2& pk = c[(i + 2) % 3];
            g[i] = {(pj.y - pk.y) * inv2a, (pk.x - pj.x) * inv2a};
        }
        return g;
    }

    // Barycentric coordinates of a physical point with respect to triangle t.
    std::array<double, 3> barycentric(int t, Vec2 p) const {
        auto c = tri_coords(t);
        double inv2a = 1.0 / (2.0 * tri_area(t));
        double l1 = ((c[2].y - c[0].y) * (p.x - c[0].x) - (c[2].x - c[0].x) * (p.y - c[0].y)) * inv2a;
        double l2 = ((c[0].y - c[1].y) * (p.x - c[0].x) - (c[0].x - c[1].x) * (p.y - c[0].y)) * inv2a;
        return {1.0 - l1 - l2, l1, l2};
    }
};

namespace detail {

struct PairHash {
    std::size_t operator()(const std::array<int, 2>& e) const {
        return std::hash<long long>()((static_cast<long long>(e[0]) << 32) ^ e[1]);
    }
};

// Build edge tables from the triangle list. Edge ids follow the first
// appearance while looping over triangles, which keeps construction
// deterministic.
inline void build_edges(Mesh& m) {
    std::unordered_map<std::array<int, 2>, int, PairHash> ids;
    ids.reserve(m.triangles.size() * 2);
    m.edges.clear();
    m.edge_tris.clear();
    m.tri_edges.assign(m.triangles.size(), {-1, -1, -1});
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& tri = m.triangles[static_cast<std::size_t>(t)];
        for (int i = 0; i < 3; ++i) {
            int a = tri[(i + 1) % 3];
            int b = tri[(i + 2) % 3];
            std::array<int, 2> key{std::min(a, b), std::max(a, b)};
            auto it = ids.find(key);
            int id;
            if (it == ids.end()) {
                id = static_cast<int>(m.edges.size());
                ids.emplace(key, id);
                m.edges.push_back(key);
                m.edge_tris.push_back({t, -1});
            } else {
                id = it->second;
                if (m.edge_tris[static_cast<std::size_t>(id)][1] != -1)
                    throw std::runtime_error("mesh: edge shared by more than two triangles");
                m.edge_tris[static_cast<std::size_t>(id)][1] = t;
            }
            m.tri_edges[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = id;
        }
    }
    m.boundary_edge.assign(m.edges.size(), 0);
    m.boundary_vertex.assign(m.vertices.size(), 0);
    for (int e = 0; e < m.n_edges(); ++e) {
        if (m.edge_tris[static_cast<std::size_t>(e)][1] == -1) {
            m.boundary_edge[static_cast<std::size_t>(e)] = 1;
            m.boundary_vertex[static_cast<std::size_t>(m.edges[static_cast<std::size_t>(e)][0])] = 1;
            m.boundary_vertex[static_cast<std::size_t>(m.edges[static_cast<std::size_t>(e)][1])] = 1;
        }
    }
}

}  // namespace detail

// Uniform n x n grid of cells on (0,1)^2, each cell split along the
// lower-left to upper-right diagonal. Gives (n+1)^2 vertices, 2n^2
// triangles and n(3n+2) edges.
inline Mesh unit_square_mesh(int n) {
    if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be >= 1");
    Mesh m;
    const int np = n + 1;
    m.vertices.reserve(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
    auto vid = [np](int i, int j) { return j * np + i; };
    m.triangles.reserve(static_cast<std::size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int v00 = vid(i, j), v10 = vid(i + 1, j);
            int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }
    detail::build_edges(m);
    return m;
}

// Red refinement: every triangle is split into four congruent children via
// the edge midpoints. Children of triangle t occupy slots 4t..4t+3 in the
// refined mesh (corner children first, central child last), so parent(t') = t'/4.
inline Mesh refine_uniform(const Mesh& m) {
    if (m.n_triangles() == 0) throw std::invalid_argument("refine_uniform: empty mesh");
    Mesh r;
    r.vertices = m.vertices;
    std::vector<int> mid(m.edges.size());
    for (int e = 0; e < m.n_edges(); ++e) {
        const auto& ed = m.edges[static_cast<std::size_t>(e)];
        Vec2 a = m.vertices[static_cast<std::size_t>(ed[0])];
        Vec2 b = m.vertices[static_cast<std::size_t>(ed[1])];
        mid[static_cast<std::size_t>(e)] = static_cast<int>(r.vertices.size());
        r.vertices.push_back(0.5 * (a + b));
    }
    r.triangles.reserve(static_cast<std::size_t>(4) * m.triangles.size());
    for (int t = 0; t < m.n_triangles(); ++t) {
        const auto& tri = m.triangles[static_cast<std::size_t>(t)];
        const auto& te = m.tri_edges[static_cast<std::size_t>(t)];
        int m0 = mid[static_cast<std::size_t>(te[0])];  // midpoint of edge opposite v0
        int m1 = mid[static_cast<std::size_t>(te[1])];
        int m2 = mid[static_cast<std::size_t>(te[2])];
        r.triangles.push_back({tri[0], m2, m1});
        r.triangles.push_back({tri[1], m0, m2});
        r.triangles.push_back({tri[2], m1, m0});
        r.triangles.push_back({m0, m1, m2});
    }
    detail::build_edges(r);
    return r;
}

// Plain-text debug dump: "nv nt", vertex coordinates, 0-based triangles.
inline void write_text(const Mesh& m, std::ostream& os) {
    os << m.n_vertices() << ' ' << m.n_triangles() << '\n';
    for (const auto& v : m.vertices) os << v.x << ' ' << v.y << '\n';
    for (const auto& t : m.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace ocpb
