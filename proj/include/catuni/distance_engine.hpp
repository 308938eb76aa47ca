#pragma once

// Geodesic distance and transport on a validated cone surface.
//
// The engine always builds a Steiner-refined edge graph (subdivision spacing
// h). When the surface develops consistently onto a global model space --
// the plane with convex boundary, a flat cone, the round sphere, or a
// spherical cone -- the development is verified edge by edge and then used
// for exact distances, geodesic interpolation, log and exp maps. Otherwise
// queries fall back to the graph, tightened by one- and two-face unfolding
// of flat faces.

#include <memory>
#include <vector>

#include "catuni/target_surface.hpp"

namespace catuni {

struct GeoPath {
    double length = 0;
    std::vector<SurfacePoint> points; // waypoints, first = source, last = target
};

class DistanceEngine {
  public:
    struct Options {
        double h = 0;                 // Steiner spacing; 0 selects min_edge/8 (/16 for kappa=1)
        bool allow_exact_model = true;
        double develop_tol = 1e-8;    // relative edge-length tolerance for developments
    };

    enum class Model { graph_only, plane, flat_cone, round_sphere, spherical_cone };

    explicit DistanceEngine(const ConeSurface& s, Options opt = {});
    ~DistanceEngine();
    DistanceEngine(const DistanceEngine&) = delete;
    DistanceEngine& operator=(const DistanceEngine&) = delete;

    const ConeSurface& surface() const { return *surface_; }
    Model model() const { return model_; }
    double h() const { return h_; }
    /// Documented accuracy bound of graph distances: d_graph - d <= epsilon.
    double epsilon_graph() const { return h_; }
    double diameter() const { return diameter_; }
    double convexity_radius() const { return convexity_radius_; }

    double distance(const SurfacePoint& a, const SurfacePoint& b) const;
    /// Graph-only distance (exact models bypassed); used by accuracy audits.
    double graph_distance(const SurfacePoint& a, const SurfacePoint& b) const;
    GeoPath graph_path(const SurfacePoint& a, const SurfacePoint& b) const;

    /// Point at parameter t in [0,1] along the geodesic from a to b.
    SurfacePoint interpolate(const SurfacePoint& a, const SurfacePoint& b, double t) const;

    /// Point at distance r from q0 on the geodesic continuation through q.
    /// At a cone vertex the continuation bisects the complementary angle.
    SurfacePoint geodesic_extend(const SurfacePoint& q0, const SurfacePoint& q, double r) const;

    /// Log map into the tangent cone chart at the chart's base point.
    ConePoint log(const TangentConeChart& chart, const SurfacePoint& q) const;

    /// Exponential: point at distance rho in chart direction theta.
    SurfacePoint exp(const TangentConeChart& chart, const ConePoint& v) const;

    struct Impl;

  private:
    const ConeSurface* surface_;
    Model model_ = Model::graph_only;
    double h_ = 0;
    double diameter_ = 0;
    double convexity_radius_ = 0;
    std::unique_ptr<Impl> impl_;
};

} // namespace catuni
