#include "catuni/mesh_topology.hpp"

#include <algorithm>
#include <map>

namespace catuni {

TopologyTables build_topology(int n_vertices, const std::vector<std::array<int, 3>>& faces,
                              const std::vector<std::array<int, 3>>* explicit_edges) {
    TopologyTables t;
    t.n_vertices = n_vertices;
    t.vertex_faces.resize(n_vertices);
    t.vertex_edges.resize(n_vertices);
    t.vertex_boundary.assign(n_vertices, false);
    t.face_edges.resize(faces.size());

    std::map<std::pair<int, int>, int> edge_index;
    auto edge_slot = [&](int f, int k, int i, int j) -> int {
        if (explicit_edges) {
            const int e = (*explicit_edges)[f][k];
            while (static_cast<int>(t.edges.size()) <= e) {
                t.edges.emplace_back(-1, -1);
                t.edge_faces.push_back({-1, -1});
            }
            if (t.edges[e].first == -1) {
                t.edges[e] = std::pair<int, int>(std::min(i, j), std::max(i, j));
                t.vertex_edges[i].push_back(e);
                t.vertex_edges[j].push_back(e);
            } else if (t.edges[e] != std::pair<int, int>(std::min(i, j), std::max(i, j))) {
                t.manifold = false;
            }
            return e;
        }
        const auto key = std::pair<int, int>(std::min(i, j), std::max(i, j));
        auto it = edge_index.find(key);
        if (it != edge_index.end()) return it->second;
        const int e = static_cast<int>(t.edges.size());
        edge_index.emplace(key, e);
        t.edges.push_back(key);
        t.edge_faces.push_back({-1, -1});
        t.vertex_edges[i].push_back(e);
        t.vertex_edges[j].push_back(e);
        return e;
    };

    // Directed occupancy per edge: slot 0 holds the face traversing (min,max),
    // slot 1 the face traversing (max,min).
    for (int f = 0; f < static_cast<int>(faces.size()); ++f) {
        for (int k = 0; k < 3; ++k) {
            const int i = faces[f][k];
            const int j = faces[f][(k + 1) % 3];
            if (i == j) {
                t.manifold = false;
                continue;
            }
            const int e = edge_slot(f, k, i, j);
            t.face_edges[f][k] = e;
            const int slot = (i < j) ? 0 : 1;
            if (t.edge_faces[e][slot] != -1) {
                // Edge traversed twice in the same direction.
                t.consistently_oriented = false;
                t.manifold = false;
            } else {
                t.edge_faces[e][slot] = f;
            }
        }
        for (int k = 0; k < 3; ++k) t.vertex_faces[faces[f][k]].push_back(f);
    }

    // Boundary: edges with exactly one incident face; chase into a loop.
    std::map<int, int> boundary_next;
    for (int e = 0; e < static_cast<int>(t.edges.size()); ++e) {
        const int f0 = t.edge_faces[e][0], f1 = t.edge_faces[e][1];
        if (f0 != -1 && f1 != -1) continue;
        const int f = f0 != -1 ? f0 : f1;
        if (f == -1) continue;
        int i = -1, j = -1;
        for (int k = 0; k < 3; ++k) {
            if (t.face_edges[f][k] == e) {
                i = faces[f][k];
                j = faces[f][(k + 1) % 3];
            }
        }
        t.vertex_boundary[i] = true;
        t.vertex_boundary[j] = true;
        if (boundary_next.count(i)) t.manifold = false;
        boundary_next[i] = j;
    }
    if (!boundary_next.empty()) {
        const int start = boundary_next.begin()->first;
        int v = start;
        for (std::size_t guard = 0; guard <= boundary_next.size(); ++guard) {
            t.boundary_loop.push_back(v);
            auto it = boundary_next.find(v);
            if (it == boundary_next.end()) break;
            v = it->second;
            if (v == start) break;
        }
        if (t.boundary_loop.size() != boundary_next.size()) t.manifold = false;
    }

    // Normalize edge_faces so slot 0 is always occupied.
    for (auto& ef : t.edge_faces) {
        if (ef[0] == -1) std::swap(ef[0], ef[1]);
    }
    return t;
}

} // namespace catuni
