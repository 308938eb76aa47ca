#pragma once

// Constant-curvature trigonometry and comparison primitives. Everything here
// is a pure function of its arguments; no state, no surfaces.

#include <vector>

#include "catuni/errors.hpp"

namespace catuni {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Geodesic triangle in the model surface of constant curvature kappa.
// Side c is opposite the vertex where the angle is measured.
struct ModelTriangle {
    double a = 0, b = 0, c = 0;
    double kappa = 0;

    // Throws GeometryError when the sides do not form a triangle or, for
    // kappa > 0, when the perimeter bound 2*pi/sqrt(kappa) fails.
    void validate() const;
};

/// Angle opposite side c, in [0, pi]. Degenerate (collinear) triangles give
/// 0 or pi. Uses half-angle forms so small triangles keep full precision.
double model_angle(double a, double b, double c, double kappa);

/// Area of the model triangle (Heron for kappa = 0, l'Huilier excess for
/// kappa > 0).
double model_triangle_area(double a, double b, double c, double kappa);

// ---------------------------------------------------------------------------
// Flat cones
// ---------------------------------------------------------------------------

// Cone of total apex angle 2*pi*beta. beta >= 1 is the admissible range for
// targets (nonpositive curvature atom at the apex).
struct ConeChart {
    double beta = 1.0;

    double total_angle() const { return kTwoPi * beta; }
    void validate() const;
};

// Point on a flat cone in polar coordinates about the apex. theta lives on
// the circle of circumference 2*pi*beta.
struct ConePoint {
    double rho = 0;
    double theta = 0;
};

/// Angular distance on a circle of circumference `total`: the shorter of the
/// two arcs between t1 and t2.
double circle_separation(double t1, double t2, double total);

/// Intrinsic distance on the flat cone of total angle 2*pi*beta, any beta>0.
/// When the angular separation (capped at pi) equals pi the geodesic runs
/// through the apex and the distance is rho1 + rho2.
double cone_distance(const ConePoint& p1, const ConePoint& p2, double beta);
double cone_distance(const ConePoint& p1, const ConePoint& p2, const ConeChart& chart);

/// Point at parameter t in [0,1] along the cone geodesic from p1 to p2.
ConePoint cone_interpolate(const ConePoint& p1, const ConePoint& p2, double beta, double t);

// ---------------------------------------------------------------------------
// CAT(kappa) comparison
// ---------------------------------------------------------------------------

// One sampled pair for the thin-triangle check on a geodesic triangle PQR:
// P_t is at parameter t on the geodesic P->Q, R_tau at parameter tau on
// R->Q, and `dist` is the measured surface distance d(P_t, R_tau).
struct ComparisonSample {
    double t = 0, tau = 0;
    double dist = 0;
};

// A geodesic triangle given by its side lengths plus measured samples.
struct TriangleSampleSet {
    double pq = 0, qr = 0, rp = 0;
    std::vector<ComparisonSample> samples;

    double perimeter() const { return pq + qr + rp; }
};

struct ComparisonResult {
    double max_defect = 0;   // max over samples of dist - model distance
    double tolerance = 0;
    int worst_sample = -1;
    bool pass = false;
};

// Number of samples per axis used by callers that build the (t, tau) grid.
inline constexpr int kComparisonGridSize = 17;

/// Distance between P_t and R_tau on the comparison triangle in the model
/// surface of curvature kappa.
double model_comparison_distance(double pq, double qr, double rp,
                                 double t, double tau, double kappa);

/// Thin-triangle comparison check. Passes iff every measured distance is at
/// most the comparison-triangle distance plus `tolerance`. A nonpositive
/// tolerance selects the default 1e-9 * perimeter.
/// Throws InvalidInputError when the distance data is not metrically
/// consistent, GeometryError when the base triangle is inadmissible.
ComparisonResult cat_comparison_test(const TriangleSampleSet& input, double kappa,
                                     double tolerance = -1.0);

} // namespace catuni
