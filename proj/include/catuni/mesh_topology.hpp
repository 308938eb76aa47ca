#pragma once

// Shared incidence tables for oriented triangle meshes (domain meshes and
// target surfaces both use this).

#include <array>
#include <utility>
#include <vector>

namespace catuni {

struct TopologyTables {
    int n_vertices = 0;
    std::vector<std::pair<int, int>> edges;        // sorted vertex pairs
    std::vector<std::array<int, 2>> edge_faces;    // second slot -1 on boundary
    std::vector<std::array<int, 3>> face_edges;    // edge of side k = (v_k, v_{k+1})
    std::vector<std::vector<int>> vertex_faces;
    std::vector<std::vector<int>> vertex_edges;
    std::vector<bool> vertex_boundary;
    std::vector<int> boundary_loop;                // one cycle when the mesh is a disk
    bool consistently_oriented = true;
    bool manifold = true;

    int euler(int n_faces) const {
        return n_vertices - static_cast<int>(edges.size()) + n_faces;
    }
};

/// Build incidence tables from oriented faces. By default edges are keyed by
/// their vertex pair; constructions that legitimately carry two distinct
/// edges between the same endpoints (such as a doubled triangulation glued
/// along its boundary) pass explicit per-face-side edge ids instead.
TopologyTables build_topology(int n_vertices, const std::vector<std::array<int, 3>>& faces,
                              const std::vector<std::array<int, 3>>* explicit_edges = nullptr);

} // namespace catuni
