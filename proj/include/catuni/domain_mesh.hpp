#pragma once

// Triangulated conformal domains: the round sphere and the unit disk, with
// their stereographic / identity chart atlases and cotangent weights.

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "catuni/mesh_topology.hpp"

namespace catuni {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
Vec3 normalized(const Vec3& a);
double sphere_distance(const Vec3& a, const Vec3& b);

struct DomainMesh {
    enum class Kind { sphere, disk };

    Kind kind = Kind::disk;
    int level = 0;

    std::vector<Vec3> pos;                       // unit vectors (sphere) or (x,y,0)
    std::vector<std::array<int, 3>> faces;       // oriented
    TopologyTables topo;

    // Chart atlas. Disks use the single identity chart 0. Spheres use chart 0
    // (stereographic from the north pole, covers all but north) and chart 1
    // (from the south pole); the transition is z -> 1/z.
    std::vector<int> face_chart;
    std::vector<std::array<Complex, 3>> face_coords; // corner coords in face_chart
    std::vector<double> face_area;                   // chart area
    std::vector<double> edge_weight;                 // cotangent weight

    int n_vertices() const { return static_cast<int>(pos.size()); }
    int n_faces() const { return static_cast<int>(faces.size()); }
    int n_edges() const { return static_cast<int>(topo.edges.size()); }

    int edge_opposite(int e, int v) const {
        return topo.edges[e].first == v ? topo.edges[e].second : topo.edges[e].first;
    }

    /// Max geodesic length over mesh edges.
    double max_edge_length() const;
    double min_edge_length() const;
};

/// Geodesic triangulation of the round sphere built by refining an inscribed
/// equilateral triangle, pushing it radially onto the disk, projecting
/// stereographically onto the lower hemisphere and gluing an antipodal copy
/// along the equator.
DomainMesh build_sphere_mesh(int n);

/// Quasi-uniform triangulation of the unit disk with 2^n concentric rings;
/// ring j carries 6j vertices, so the boundary count doubles per level.
DomainMesh build_disk_mesh(int n);

/// Chart coordinates of a face's corners (cached).
std::array<Complex, 3> chart_coordinates(const DomainMesh& mesh, int face);

/// Coordinate of an arbitrary surface point in a given chart.
Complex to_chart(const DomainMesh& mesh, int chart, const Vec3& p);
Vec3 from_chart(const DomainMesh& mesh, int chart, const Complex& z);

struct FaceBary {
    int face = -1;
    std::array<double, 3> w{};
};

/// Locate the face containing a point (unit vector for spheres, planar point
/// for disks) by walking from a seed face.
FaceBary locate_domain_point(const DomainMesh& mesh, const Vec3& p, int seed_face = 0);

Vec3 domain_point(const DomainMesh& mesh, const FaceBary& fb);

// Conformal disk chart centered at an arbitrary point: a translation for the
// disk, a rotation followed by stereographic projection for the sphere.
struct ProbeChart {
    DomainMesh::Kind kind = DomainMesh::Kind::disk;
    Complex center{0, 0};
    std::array<double, 9> rot{1, 0, 0, 0, 1, 0, 0, 0, 1}; // row-major
};

ProbeChart probe_chart(const DomainMesh& mesh, const Vec3& p0);
Complex probe_coord(const ProbeChart& chart, const Vec3& p);
Vec3 probe_point(const ProbeChart& chart, const Complex& z);

/// OFF-format export for inspection.
std::string export_mesh_text(const DomainMesh& mesh);

} // namespace catuni
