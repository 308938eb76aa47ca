#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "catuni/geom_kernel.hpp"

using namespace catuni;

namespace {

// Test-only oracle: flat-cone distance by enumerating plane developments of
// the cone and taking the best straight segment, plus the path through the
// apex. Independent of the chord-law implementation.
double oracle_cone_distance(const ConePoint& p, const ConePoint& q, double beta) {
    const double total = kTwoPi * beta;
    double best = p.rho + q.rho;
    double d0 = std::fmod(q.theta - p.theta, total);
    if (d0 < 0) d0 += total;
    for (int k = -3; k <= 3; ++k) {
        const double ang = d0 + k * total;
        if (std::abs(ang) >= kPi) continue;
        const double dx = q.rho * std::cos(ang) - p.rho;
        const double dy = q.rho * std::sin(ang);
        best = std::min(best, std::hypot(dx, dy));
    }
    return best;
}

// Point at parameter t on the shortest development segment from p to q.
ConePoint oracle_cone_point_along(const ConePoint& p, const ConePoint& q, double beta,
                                  double t) {
    const double total = kTwoPi * beta;
    double d0 = std::fmod(q.theta - p.theta, total);
    if (d0 < 0) d0 += total;
    double best = p.rho + q.rho;
    double best_ang = 0;
    bool through_apex = true;
    for (int k = -3; k <= 3; ++k) {
        const double ang = d0 + k * total;
        if (std::abs(ang) >= kPi) continue;
        const double d = std::hypot(q.rho * std::cos(ang) - p.rho, q.rho * std::sin(ang));
        if (d < best) {
            best = d;
            best_ang = ang;
            through_apex = false;
        }
    }
    if (through_apex) {
        const double s = t * (p.rho + q.rho);
        if (s <= p.rho) return {p.rho - s, p.theta};
        return {s - p.rho, q.theta};
    }
    const double x = p.rho + t * (q.rho * std::cos(best_ang) - p.rho);
    const double y = t * q.rho * std::sin(best_ang);
    double theta = std::fmod(p.theta + std::atan2(y, x), total);
    if (theta < 0) theta += total;
    return {std::hypot(x, y), theta};
}

// Build the 17x17 comparison grid for a cone triangle, with all distances
// produced by the development oracle.
TriangleSampleSet cone_triangle_samples(const ConePoint& P, const ConePoint& Q,
                                        const ConePoint& R, double beta) {
    TriangleSampleSet set;
    set.pq = oracle_cone_distance(P, Q, beta);
    set.qr = oracle_cone_distance(Q, R, beta);
    set.rp = oracle_cone_distance(R, P, beta);
    const int n = kComparisonGridSize;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double t = double(i) / (n - 1);
            const double tau = double(j) / (n - 1);
            const ConePoint pt = oracle_cone_point_along(P, Q, beta, t);
            const ConePoint rt = oracle_cone_point_along(R, Q, beta, tau);
            set.samples.push_back({t, tau, oracle_cone_distance(pt, rt, beta)});
        }
    }
    return set;
}

} // namespace

TEST_CASE("model_angle on canonical triangles") {
    CHECK(model_angle(3, 4, 5, 0) == doctest::Approx(kPi / 2).epsilon(1e-14));
    CHECK(model_angle(kPi / 2, kPi / 2, kPi / 2, 1.0) == doctest::Approx(kPi / 2).epsilon(1e-13));
    CHECK(model_angle(1, 1, 2, 0) == doctest::Approx(kPi).epsilon(1e-13));
    CHECK(model_angle(1, 1, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("model_angle rejects bad input") {
    CHECK_THROWS_AS(model_angle(1, 1, 3, 0), GeometryError);
    CHECK_THROWS_AS(model_angle(-1, 1, 1, 0), GeometryError);
    CHECK_THROWS_AS(model_angle(3, 3, 3, 1.0), GeometryError); // perimeter 9 > 2*pi
}

TEST_CASE("model_angle is monotone nondecreasing in c") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> side(0.05, 1.0);
    for (double kappa : {0.0, 1.0}) {
        for (int rep = 0; rep < 50; ++rep) {
            const double a = side(rng), b = side(rng);
            double prev = -1;
            const double cmax = std::min(a + b, kappa > 0 ? kTwoPi / 1.0 - a - b - 1e-6 : a + b);
            for (int i = 0; i <= 40; ++i) {
                const double c = std::abs(a - b) + (cmax - std::abs(a - b)) * i / 40.0;
                const double ang = model_angle(a, b, c, kappa);
                CHECK(ang >= prev - 1e-12);
                prev = ang;
            }
        }
    }
}

TEST_CASE("model_triangle_area") {
    CHECK(model_triangle_area(3, 4, 5, 0) == doctest::Approx(6.0).epsilon(1e-14));
    // Octant of the unit sphere.
    CHECK(model_triangle_area(kPi / 2, kPi / 2, kPi / 2, 1.0) ==
          doctest::Approx(kPi / 2).epsilon(1e-12));
}

TEST_CASE("cone_distance examples vs development oracle") {
    const double beta = 1.5;
    CHECK(cone_distance({1, 0}, {1, kPi / 2}, beta) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(oracle_cone_distance({1, 0}, {1, kPi / 2}, beta) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    // Angular separation >= pi both ways: geodesic through the apex.
    CHECK(cone_distance({1, 0}, {1, kPi}, beta) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(cone_distance({1, 0.3}, {1, 0.3}, beta) == doctest::Approx(0.0));
}

TEST_CASE("cone_distance properties on random samples") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> rad(0.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> betas(0.5, 3.0);
    for (int rep = 0; rep < 300; ++rep) {
        const double beta = betas(rng);
        const double total = kTwoPi * beta;
        const ConePoint p{rad(rng), unit(rng) * total};
        const ConePoint q{rad(rng), unit(rng) * total};
        const ConePoint r{rad(rng), unit(rng) * total};
        const double dpq = cone_distance(p, q, beta);
        CHECK(dpq == doctest::Approx(cone_distance(q, p, beta)).epsilon(1e-13));
        CHECK(dpq == doctest::Approx(oracle_cone_distance(p, q, beta)).epsilon(1e-12));
        CHECK(dpq <= cone_distance(p, r, beta) + cone_distance(r, q, beta) + 1e-12);
        const double lambda = 1.0 + 2.0 * unit(rng);
        const ConePoint ps{lambda * p.rho, p.theta}, qs{lambda * q.rho, q.theta};
        CHECK(cone_distance(ps, qs, beta) == doctest::Approx(lambda * dpq).epsilon(1e-12));
    }
}

TEST_CASE("cone_interpolate lies on the geodesic") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> rad(0.1, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double beta = 1.0 + 2.0 * unit(rng);
        const double total = kTwoPi * beta;
        const ConePoint p{rad(rng), unit(rng) * total};
        const ConePoint q{rad(rng), unit(rng) * total};
        const double d = cone_distance(p, q, beta);
        const double t = unit(rng);
        const ConePoint m = cone_interpolate(p, q, beta, t);
        CHECK(cone_distance(p, m, beta) == doctest::Approx(t * d).epsilon(1e-10));
        CHECK(cone_distance(m, q, beta) == doctest::Approx((1 - t) * d).epsilon(1e-10));
    }
}

TEST_CASE("flat triangle comparison has zero defect") {
    // Plane triangle, distances measured in the plane itself.
    const double ax = 0, ay = 0, bx = 2, by = 0.2, cx = 0.6, cy = 1.4;
    TriangleSampleSet set;
    set.pq = std::hypot(bx - ax, by - ay);
    set.qr = std::hypot(cx - bx, cy - by);
    set.rp = std::hypot(ax - cx, ay - cy);
    const int n = kComparisonGridSize;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double t = double(i) / (n - 1), tau = double(j) / (n - 1);
            const double ptx = ax + t * (bx - ax), pty = ay + t * (by - ay);
            const double rtx = cx + tau * (bx - cx), rty = cy + tau * (by - cy);
            set.samples.push_back({t, tau, std::hypot(ptx - rtx, pty - rty)});
        }
    const auto res = cat_comparison_test(set, 0.0);
    CHECK(res.pass);
    CHECK(res.max_defect <= 1e-12);
}

TEST_CASE("comparison passes around a beta >= 1 apex and fails for beta < 1") {
    // Triangle whose sides jointly enclose the apex.
    {
        const double beta = 1.5;
        const double total = kTwoPi * beta;
        const ConePoint P{1.0, 0.0}, Q{1.1, total / 3.0}, R{0.9, 2.0 * total / 3.0};
        const auto set = cone_triangle_samples(P, Q, R, beta);
        const auto res = cat_comparison_test(set, 0.0);
        CHECK(res.pass);
    }
    {
        // Total apex angle pi: a positive curvature atom.
        const double beta = 0.5;
        const double total = kTwoPi * beta;
        const ConePoint P{1.0, 0.0}, Q{1.0, total / 3.0}, R{1.0, 2.0 * total / 3.0};
        const auto set = cone_triangle_samples(P, Q, R, beta);
        const auto res = cat_comparison_test(set, 0.0);
        CHECK_FALSE(res.pass);
        CHECK(res.max_defect > 1e-3);
    }
}

TEST_CASE("comparison on a spherical triangle is tight") {
    // Geodesic triangle on the unit sphere equals its own comparison triangle.
    auto pt = [](double colat, double lon) {
        return std::array<double, 3>{std::sin(colat) * std::cos(lon),
                                     std::sin(colat) * std::sin(lon), std::cos(colat)};
    };
    auto dist = [](const std::array<double, 3>& u, const std::array<double, 3>& v) {
        double d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        return std::acos(std::clamp(d, -1.0, 1.0));
    };
    auto toward = [&](const std::array<double, 3>& a, const std::array<double, 3>& b, double s) {
        const double ang = dist(a, b);
        std::array<double, 3> t{}, out{};
        for (int i = 0; i < 3; ++i) t[i] = (b[i] - a[i] * std::cos(ang)) / std::sin(ang);
        for (int i = 0; i < 3; ++i) out[i] = a[i] * std::cos(s) + t[i] * std::sin(s);
        return out;
    };
    const auto P = pt(0.3, 0.1), Q = pt(0.9, 0.8), R = pt(0.7, -0.9);
    TriangleSampleSet set;
    set.pq = dist(P, Q);
    set.qr = dist(Q, R);
    set.rp = dist(R, P);
    const int n = kComparisonGridSize;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double t = double(i) / (n - 1), tau = double(j) / (n - 1);
            const auto Pt = toward(P, Q, t * set.pq);
            const auto Rt = toward(R, Q, tau * set.qr);
            set.samples.push_back({t, tau, dist(Pt, Rt)});
        }
    const auto res = cat_comparison_test(set, 1.0);
    CHECK(res.pass);
    CHECK(std::abs(res.max_defect) <= 1e-10);
}

TEST_CASE("comparison rejects inconsistent distance data") {
    TriangleSampleSet set;
    set.pq = 1;
    set.qr = 1;
    set.rp = 1;
    set.samples.push_back({0.5, 0.5, 10.0});
    CHECK_THROWS_AS(cat_comparison_test(set, 0.0), InvalidInputError);
}
