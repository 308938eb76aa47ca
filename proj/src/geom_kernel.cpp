#include "catuni/geom_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace catuni {

namespace {

constexpr double kDegenerateSlack = 1e-13;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

std::array<double, 3> sphere_point(double colat, double lon) {
    return {std::sin(colat) * std::cos(lon), std::sin(colat) * std::sin(lon), std::cos(colat)};
}

double dot3(const std::array<double, 3>& u, const std::array<double, 3>& v) {
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
}

// Point at arc distance s from A along the great circle toward B.
std::array<double, 3> slerp_toward(const std::array<double, 3>& a,
                                   const std::array<double, 3>& b, double s) {
    const double ang = std::acos(std::clamp(dot3(a, b), -1.0, 1.0));
    if (ang < 1e-15) return a;
    std::array<double, 3> t{};
    const double inv = 1.0 / std::sin(ang);
    for (int i = 0; i < 3; ++i) t[i] = (b[i] - a[i] * std::cos(ang)) * inv;
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = a[i] * std::cos(s) + t[i] * std::sin(s);
    return out;
}

} // namespace

void ModelTriangle::validate() const {
    if (a < 0 || b < 0 || c < 0)
        throw GeometryError("model triangle: negative side length");
    const double slack = kDegenerateSlack * (a + b + c);
    if (a + b < c - slack || b + c < a - slack || c + a < b - slack)
        throw GeometryError("model triangle: triangle inequality violated");
    if (kappa > 0) {
        const double bound = kTwoPi / std::sqrt(kappa);
        if (a + b + c >= bound)
            throw GeometryError("model triangle: perimeter exceeds 2*pi/sqrt(kappa)");
    }
}

double model_angle(double a, double b, double c, double kappa) {
    ModelTriangle{a, b, c, kappa}.validate();
    if (a == 0 || b == 0)
        throw GeometryError("model_angle: adjacent side has zero length");
    if (kappa <= 0) {
        // tan(C/2) = sqrt((s-a)(s-b) / (s(s-c))), numerically safe near the
        // degenerate configurations.
        const double s = 0.5 * (a + b + c);
        const double num = std::max(0.0, (s - a) * (s - b));
        const double den = std::max(0.0, s * (s - c));
        return 2.0 * std::atan2(std::sqrt(num), std::sqrt(den));
    }
    const double sk = std::sqrt(kappa);
    const double as = a * sk, bs = b * sk, cs = c * sk;
    const double s = 0.5 * (as + bs + cs);
    const double num = std::max(0.0, std::sin(s - as) * std::sin(s - bs));
    const double den = std::max(0.0, std::sin(s) * std::sin(s - cs));
    return 2.0 * std::atan2(std::sqrt(num), std::sqrt(den));
}

double model_triangle_area(double a, double b, double c, double kappa) {
    ModelTriangle{a, b, c, kappa}.validate();
    if (kappa <= 0) {
        // Kahan's numerically stable Heron form.
        std::array<double, 3> s{a, b, c};
        std::sort(s.begin(), s.end());
        const double x = s[2], y = s[1], z = s[0];
        const double t = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
        return 0.25 * std::sqrt(std::max(0.0, t));
    }
    const double sk = std::sqrt(kappa);
    const double s = 0.5 * (a + b + c) * sk;
    const double ta = std::tan(0.5 * (s - a * sk));
    const double tb = std::tan(0.5 * (s - b * sk));
    const double tc = std::tan(0.5 * (s - c * sk));
    const double ts = std::tan(0.5 * s);
    const double excess = 4.0 * std::atan(std::sqrt(std::max(0.0, ts * ta * tb * tc)));
    return excess / kappa;
}

void ConeChart::validate() const {
    if (!(beta >= 1.0))
        throw GeometryError("cone chart: beta < 1 violates the upper curvature bound");
}

double circle_separation(double t1, double t2, double total) {
    double d = std::fmod(std::abs(t1 - t2), total);
    return std::min(d, total - d);
}

double cone_distance(const ConePoint& p1, const ConePoint& p2, double beta) {
    if (beta <= 0) throw GeometryError("cone_distance: beta must be positive");
    if (p1.rho < 0 || p2.rho < 0) throw GeometryError("cone_distance: negative radius");
    const double sep = circle_separation(p1.theta, p2.theta, kTwoPi * beta);
    if (sep >= kPi) return p1.rho + p2.rho;
    const double d2 = p1.rho * p1.rho + p2.rho * p2.rho - 2.0 * p1.rho * p2.rho * std::cos(sep);
    return std::sqrt(std::max(0.0, d2));
}

double cone_distance(const ConePoint& p1, const ConePoint& p2, const ConeChart& chart) {
    chart.validate();
    return cone_distance(p1, p2, chart.beta);
}

ConePoint cone_interpolate(const ConePoint& p1, const ConePoint& p2, double beta, double t) {
    if (beta <= 0) throw GeometryError("cone_interpolate: beta must be positive");
    t = clamp01(t);
    const double total = kTwoPi * beta;
    const double sep = circle_separation(p1.theta, p2.theta, total);
    if (sep >= kPi) {
        // Through the apex: radial in, radial out.
        const double len = p1.rho + p2.rho;
        const double s = t * len;
        if (s <= p1.rho) return {p1.rho - s, p1.theta};
        return {s - p1.rho, p2.theta};
    }
    // Develop into the plane with p1 on the positive x-axis; the geodesic is
    // the straight segment.
    double diff = std::fmod(p2.theta - p1.theta, total);
    if (diff < -0.5 * total) diff += total;
    if (diff > 0.5 * total) diff -= total;
    const double x1 = p1.rho, y1 = 0.0;
    const double x2 = p2.rho * std::cos(diff), y2 = p2.rho * std::sin(diff);
    const double x = x1 + t * (x2 - x1), y = y1 + t * (y2 - y1);
    double theta = p1.theta + std::atan2(y, x);
    theta = std::fmod(theta, total);
    if (theta < 0) theta += total;
    return {std::hypot(x, y), theta};
}

double model_comparison_distance(double pq, double qr, double rp,
                                 double t, double tau, double kappa) {
    t = clamp01(t);
    tau = clamp01(tau);
    if (kappa <= 0) {
        // P at origin, Q on the x-axis, R above it.
        const double qx = pq;
        double rx = 0, ry = 0;
        if (pq > 0) {
            rx = (pq * pq + rp * rp - qr * qr) / (2.0 * pq);
            ry = std::sqrt(std::max(0.0, rp * rp - rx * rx));
        } else {
            rx = rp;
        }
        const double ptx = t * qx, pty = 0.0;
        const double rtx = rx + tau * (qx - rx);
        const double rty = ry + tau * (0.0 - ry);
        return std::hypot(ptx - rtx, pty - rty);
    }
    const double sk = std::sqrt(kappa);
    // Realize the comparison triangle on the unit sphere, scaled back at the end.
    const std::array<double, 3> P{0, 0, 1};
    const std::array<double, 3> Q = sphere_point(pq * sk, 0.0);
    const double angP = model_angle(pq, rp, qr, kappa);
    const std::array<double, 3> R = sphere_point(rp * sk, angP);
    const auto Pt = slerp_toward(P, Q, t * pq * sk);
    const auto Rt = slerp_toward(R, Q, tau * qr * sk);
    return std::acos(std::clamp(dot3(Pt, Rt), -1.0, 1.0)) / sk;
}

ComparisonResult cat_comparison_test(const TriangleSampleSet& input, double kappa,
                                     double tolerance) {
    ModelTriangle{input.pq, input.qr, input.rp, kappa}.validate();

    ComparisonResult result;
    result.tolerance = tolerance > 0 ? tolerance : 1e-9 * input.perimeter();
    const double slack = 1e-9 * (input.perimeter() + 1.0);
    for (int i = 0; i < static_cast<int>(input.samples.size()); ++i) {
        const auto& s = input.samples[i];
        if (s.dist < 0 || s.t < 0 || s.t > 1 || s.tau < 0 || s.tau > 1)
            throw InvalidInputError("cat_comparison_test: sample out of range");
        // Metric consistency: the measured distance may not beat the paths
        // through Q or through P and R.
        const double via_q = (1.0 - s.t) * input.pq + (1.0 - s.tau) * input.qr;
        const double via_pr = s.t * input.pq + input.rp + s.tau * input.qr;
        if (s.dist > std::min(via_q, via_pr) + slack)
            throw InvalidInputError("cat_comparison_test: sample distances violate the triangle inequality");
        const double model = model_comparison_distance(input.pq, input.qr, input.rp,
                                                       s.t, s.tau, kappa);
        const double defect = s.dist - model;
        if (defect > result.max_defect) {
            result.max_defect = defect;
            result.worst_sample = i;
        }
    }
    result.pass = result.max_defect <= result.tolerance;
    return result;
}

} // namespace catuni
