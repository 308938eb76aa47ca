#pragma once

// The singular target: a triangulated surface of constant-curvature faces
// and cone vertices, validated against the upper curvature bound (total
// vertex angle >= 2*pi at interior vertices).

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "catuni/domain_mesh.hpp" // Vec3 / Complex helpers
#include "catuni/geom_kernel.hpp"
#include "catuni/mesh_topology.hpp"

namespace catuni {

enum class Topology { sphere, disk };

// A point on the target surface, located on a simplex of its triangulation.
struct SurfacePoint {
    enum class Kind : unsigned char { vertex, edge, face };
    Kind kind = Kind::vertex;
    int id = 0;
    double a = 0, b = 0; // edge: parameter t; face: barycentric (a, b, 1-a-b)

    static SurfacePoint at_vertex(int v) { return {Kind::vertex, v, 0, 0}; }
    static SurfacePoint on_edge(int e, double t) { return {Kind::edge, e, t, 0}; }
    static SurfacePoint on_face(int f, double w0, double w1) { return {Kind::face, f, w0, w1}; }
};

struct ConeSurface {
    Topology topology = Topology::disk;
    double kappa = 0;      // 0 or 1 after normalization
    double unit_scale = 1; // input lengths were divided by this on load

    std::vector<std::array<int, 3>> faces;
    TopologyTables topo;
    std::vector<double> edge_len;
    std::vector<std::array<double, 3>> corner_angle; // per face corner
    std::vector<double> vertex_angle;                // sum of incident corners
    std::vector<std::vector<int>> vertex_fan;        // incident faces, CCW order
    std::vector<std::vector<double>> vertex_fan_offset; // cumulative angle

    int n_vertices() const { return topo.n_vertices; }
    int n_faces() const { return static_cast<int>(faces.size()); }
    int n_edges() const { return static_cast<int>(topo.edges.size()); }
    bool is_boundary_vertex(int v) const { return topo.vertex_boundary[v]; }
    double beta(int v) const { return vertex_angle[v] / kTwoPi; }
    int corner_of(int f, int v) const {
        for (int k = 0; k < 3; ++k)
            if (faces[f][k] == v) return k;
        return -1;
    }
    double face_side_length(int f, int k) const { return edge_len[topo.face_edges[f][k]]; }
    double min_edge_length() const;
    double max_edge_length() const;
    double total_area() const;

    /// Cone vertices: interior vertices with total angle > 2*pi (+tol).
    std::vector<int> cone_vertices(double tol = 1e-7) const;
};

struct Violation {
    std::string kind;    // "parse", "triangle", "link-condition", "orientability", ...
    std::string where;   // offending simplex, e.g. "face 12", "vertex 3"
    std::string message;
};

struct SurfaceLoadResult {
    std::optional<ConeSurface> surface;
    std::vector<Violation> violations;
    bool ok() const { return surface.has_value() && violations.empty(); }
};

/// Assemble and validate a surface from raw data. Lengths are keyed by
/// vertex pairs. kappa > 0 is rescaled to kappa = 1.
SurfaceLoadResult build_cone_surface(Topology topology, double kappa, int n_vertices,
                                     std::vector<std::array<int, 3>> faces,
                                     const std::map<std::pair<int, int>, double>& lengths);

/// Variant with explicit per-face-side edge ids, for triangulations carrying
/// two distinct edges between the same vertex pair.
SurfaceLoadResult build_cone_surface_explicit(Topology topology, double kappa, int n_vertices,
                                              std::vector<std::array<int, 3>> faces,
                                              const std::vector<std::array<int, 3>>& face_edge_ids,
                                              std::vector<double> lengths_by_edge);

/// Parse a target document: either the JSON target schema or OFF mesh text
/// (3D coordinates; edge lengths derived, embedding discarded, kappa = 0).
SurfaceLoadResult load_surface(const std::string& text);

/// JSON target document for a validated surface.
std::string surface_to_json(const ConeSurface& s);

/// Total angle at an interior vertex (sum of incident corner angles).
/// Throws GeometryError for boundary vertices.
double vertex_total_angle(const ConeSurface& s, int v);

// ---------------------------------------------------------------------------
// Intrinsic face realizations
// ---------------------------------------------------------------------------

// Flat faces realize in the plane (corner 0 at the origin, corner 1 on the
// positive x-axis, CCW); spherical faces realize on the unit sphere.
struct FlatFaceFrame {
    std::array<Complex, 3> z;
};
struct SphereFaceFrame {
    std::array<Vec3, 3> p;
};

FlatFaceFrame flat_face_frame(const ConeSurface& s, int f);
SphereFaceFrame sphere_face_frame(const ConeSurface& s, int f);

/// Express a surface point as (face, barycentric) on a face containing it.
/// `preferred_face` wins when the point lies on several faces.
struct FaceBaryPoint {
    int face = -1;
    std::array<double, 3> w{};
};
FaceBaryPoint on_face(const ConeSurface& s, const SurfacePoint& p, int preferred_face = -1);

/// Distance between two points of the same face through that face.
double within_face_distance(const ConeSurface& s, int f, const std::array<double, 3>& wa,
                            const std::array<double, 3>& wb);

// ---------------------------------------------------------------------------
// Tangent cone charts
// ---------------------------------------------------------------------------

// Log-map chart at a base point. The angular coordinate lives on the circle
// of circumference 2*pi*beta; its zero ray is the chart's reference edge.
struct TangentConeChart {
    SurfacePoint base;
    double beta = 1;
    double total_angle = kTwoPi;
    int base_vertex = -1;                 // set when the base is a vertex
    std::vector<int> fan_faces;           // CCW incident faces (vertex base)
    std::vector<double> fan_offsets;      // angle of each fan face's first edge
    std::vector<double> fan_angles;       // corner angle inside each fan face

    ConeChart cone() const { return ConeChart{beta}; }
    /// Chart angle of a direction lying inside fan face index `i` at in-corner
    /// angle phi measured CCW from that face's first edge.
    double angle_in_fan(int i, double phi) const { return fan_offsets[i] + phi; }
};

/// Chart at a non-boundary point. Vertex charts carry the full corner fan;
/// edge/face interior points get beta = 1 charts.
TangentConeChart tangent_chart(const ConeSurface& s, const SurfacePoint& p);

/// Orientation-preserving identification of the cone with the model metric
/// beta^2 |z|^(2(beta-1)) |dz|^2: |z| = rho^(1/beta), arg z = theta / beta.
Complex cone_to_model_z(const ConePoint& cp, double beta);
ConePoint model_z_to_cone(const Complex& z, double beta);

} // namespace catuni
