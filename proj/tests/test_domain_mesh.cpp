#include <doctest.h>

#include <cmath>
#include <set>

#include "catuni/domain_mesh.hpp"
#include "catuni/geom_kernel.hpp"

using namespace catuni;

TEST_CASE("sphere mesh counts and Euler characteristic") {
    auto m0 = build_sphere_mesh(0);
    CHECK(m0.n_vertices() == 3);
    CHECK(m0.n_edges() == 3);
    CHECK(m0.n_faces() == 2);
    CHECK(m0.topo.euler(m0.n_faces()) == 2);

    auto m1 = build_sphere_mesh(1);
    CHECK(m1.n_vertices() == 6);
    CHECK(m1.n_edges() == 12);
    CHECK(m1.n_faces() == 8);
    CHECK(m1.topo.euler(m1.n_faces()) == 2);

    for (int n = 2; n <= 4; ++n) {
        auto m = build_sphere_mesh(n);
        const int N = 1 << n;
        CHECK(m.n_vertices() == (N + 1) * (N + 2) - 3 * N);
        CHECK(m.n_faces() == 2 * N * N);
        CHECK(m.topo.euler(m.n_faces()) == 2);
        CHECK(m.topo.boundary_loop.empty());
        for (double a : m.face_area) CHECK(a > 0);
        for (const auto& p : m.pos)
            CHECK(dot(p, p) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sphere refinement shrinks edges and stays Lipschitz-uniform") {
    double prev_max = 1e9;
    for (int n = 0; n <= 5; ++n) {
        auto m = build_sphere_mesh(n);
        const double mx = m.max_edge_length();
        const double mn = m.min_edge_length();
        CHECK(mx <= prev_max + 1e-12);
        if (n >= 2) CHECK(mx < prev_max);
        prev_max = mx;
        // Adjacent-vertex distance scaled by 2^n stays within fixed bounds.
        const double scale = std::pow(2.0, n);
        CHECK(mx * scale < 9.0);
        CHECK(mn * scale > 0.5);
    }
}

TEST_CASE("stereographic chart transition is z -> 1/z") {
    auto m = build_sphere_mesh(3);
    int checked = 0;
    for (int v = 0; v < m.n_vertices(); ++v) {
        const double z = m.pos[v][2];
        if (std::abs(z) > 0.9) continue; // stay away from both poles
        const Complex c0 = to_chart(m, 0, m.pos[v]);
        const Complex c1 = to_chart(m, 1, m.pos[v]);
        CHECK(std::abs(c1 - 1.0 / c0) < 1e-12);
        ++checked;
    }
    CHECK(checked > 10);
    // Round trips.
    for (int chart : {0, 1}) {
        const Complex z{0.3, -0.4};
        const Vec3 p = from_chart(m, chart, z);
        CHECK(dot(p, p) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(to_chart(m, chart, p) - z) < 1e-13);
    }
}

TEST_CASE("disk mesh structure") {
    auto m0 = build_disk_mesh(0);
    CHECK(m0.n_faces() == 6);
    CHECK(static_cast<int>(m0.topo.boundary_loop.size()) == 6);

    for (int n = 1; n <= 3; ++n) {
        auto m = build_disk_mesh(n);
        const int R = 1 << n;
        CHECK(static_cast<int>(m.topo.boundary_loop.size()) == 6 * R);
        CHECK(m.n_vertices() == 1 + 3 * R * (R + 1));
        CHECK(m.n_faces() == 6 * R * R);
        CHECK(m.topo.euler(m.n_faces()) == 1);
        for (double a : m.face_area) CHECK(a > 0);
        // Delaunay: every interior edge weight nonnegative.
        for (int e = 0; e < m.n_edges(); ++e) CHECK(m.edge_weight[e] >= -1e-12);
    }
}

TEST_CASE("cotangent weights reproduce the Dirichlet energy of linear maps") {
    auto m = build_disk_mesh(3);
    // f(x, y) = 2x - y has |grad f|^2 = 5 everywhere.
    std::vector<double> f(m.n_vertices());
    double area = 0;
    for (int v = 0; v < m.n_vertices(); ++v) f[v] = 2 * m.pos[v][0] - m.pos[v][1];
    for (double a : m.face_area) area += a;
    double energy = 0;
    for (int e = 0; e < m.n_edges(); ++e) {
        const auto [i, j] = m.topo.edges[e];
        energy += m.edge_weight[e] * (f[i] - f[j]) * (f[i] - f[j]);
    }
    CHECK(energy == doctest::Approx(5.0 * area).epsilon(1e-12));
}

TEST_CASE("point location on both domains") {
    auto sphere = build_sphere_mesh(3);
    const Vec3 p = normalized(Vec3{0.3, -0.5, 0.6});
    auto fb = locate_domain_point(sphere, p, 0);
    CHECK(fb.face >= 0);
    const Vec3 back = domain_point(sphere, fb);
    CHECK(sphere_distance(p, back) < 1e-10);

    auto disk = build_disk_mesh(3);
    const Vec3 q{0.21, -0.37, 0};
    auto fb2 = locate_domain_point(disk, q, disk.n_faces() - 1);
    const Vec3 back2 = domain_point(disk, fb2);
    CHECK(std::hypot(back2[0] - q[0], back2[1] - q[1]) < 1e-12);
}

TEST_CASE("probe chart is centered and isometric at the base point") {
    auto m = build_sphere_mesh(3);
    const Vec3 p0 = normalized(Vec3{0.1, 0.7, 0.7});
    auto pc = probe_chart(m, p0);
    CHECK(std::abs(probe_coord(pc, p0)) < 1e-13);
    // Nearby points appear at chart distance ~ geodesic distance / 2.
    const Vec3 q = normalized(Vec3{0.1001, 0.7002, 0.6997});
    const double chart_dist = std::abs(probe_coord(pc, q));
    const double geo = sphere_distance(p0, q);
    CHECK(chart_dist == doctest::Approx(geo / 2).epsilon(1e-4));
    const Vec3 back = probe_point(pc, probe_coord(pc, q));
    CHECK(sphere_distance(q, back) < 1e-12);
}

TEST_CASE("mesh export emits OFF") {
    auto m = build_sphere_mesh(1);
    const std::string text = export_mesh_text(m);
    CHECK(text.substr(0, 4) == "OFF\n");
    CHECK(text.find("3 ") != std::string::npos);
}
