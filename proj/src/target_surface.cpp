#include "catuni/target_surface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace catuni {

namespace {

constexpr double kAngleTol = 1e-7;

std::string simplex(const char* kind, int id) {
    std::ostringstream os;
    os << kind << " " << id;
    return os.str();
}

} // namespace

double ConeSurface::min_edge_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (double l : edge_len) m = std::min(m, l);
    return m;
}

double ConeSurface::max_edge_length() const {
    double m = 0;
    for (double l : edge_len) m = std::max(m, l);
    return m;
}

double ConeSurface::total_area() const {
    double a = 0;
    for (int f = 0; f < n_faces(); ++f)
        a += model_triangle_area(face_side_length(f, 0), face_side_length(f, 1),
                                 face_side_length(f, 2), kappa);
    return a;
}

std::vector<int> ConeSurface::cone_vertices(double tol) const {
    std::vector<int> out;
    for (int v = 0; v < n_vertices(); ++v)
        if (!is_boundary_vertex(v) && vertex_angle[v] > kTwoPi + tol) out.push_back(v);
    return out;
}

double vertex_total_angle(const ConeSurface& s, int v) {
    if (s.is_boundary_vertex(v))
        throw GeometryError("vertex_total_angle: boundary vertex has no full cone");
    return s.vertex_angle[v];
}

namespace {

SurfaceLoadResult finish_surface(ConeSurface s, SurfaceLoadResult result);

}

SurfaceLoadResult build_cone_surface(Topology topology, double kappa, int n_vertices,
                                     std::vector<std::array<int, 3>> faces,
                                     const std::map<std::pair<int, int>, double>& lengths) {
    SurfaceLoadResult result;
    auto fail = [&](std::string kind, std::string where, std::string msg) {
        result.violations.push_back({std::move(kind), std::move(where), std::move(msg)});
    };

    if (kappa < 0) {
        fail("curvature", "surface", "kappa < 0 is not supported");
        return result;
    }

    ConeSurface s;
    s.topology = topology;
    // Normalize positive curvature to kappa = 1 by global rescaling.
    s.kappa = kappa > 0 ? 1.0 : 0.0;
    s.unit_scale = kappa > 0 ? std::sqrt(kappa) : 1.0;
    s.faces = std::move(faces);

    for (int f = 0; f < s.n_faces(); ++f) {
        for (int k = 0; k < 3; ++k) {
            if (s.faces[f][k] < 0 || s.faces[f][k] >= n_vertices) {
                fail("index", simplex("face", f), "vertex index out of range");
                return result;
            }
        }
    }

    s.topo = build_topology(n_vertices, s.faces);

    s.edge_len.assign(s.n_edges(), -1.0);
    bool lengths_ok = true;
    for (int e = 0; e < s.n_edges(); ++e) {
        const auto key = s.topo.edges[e];
        auto it = lengths.find(key);
        if (it == lengths.end()) it = lengths.find({key.second, key.first});
        if (it == lengths.end()) {
            fail("length", simplex("edge", e), "missing edge length");
            lengths_ok = false;
            continue;
        }
        if (!(it->second > 0)) {
            fail("length", simplex("edge", e), "edge length must be positive");
            lengths_ok = false;
            continue;
        }
        s.edge_len[e] = it->second * s.unit_scale;
    }
    if (!lengths_ok) return result;
    return finish_surface(std::move(s), std::move(result));
}

SurfaceLoadResult build_cone_surface_explicit(Topology topology, double kappa, int n_vertices,
                                              std::vector<std::array<int, 3>> faces,
                                              const std::vector<std::array<int, 3>>& face_edge_ids,
                                              std::vector<double> lengths_by_edge) {
    SurfaceLoadResult result;
    if (kappa < 0) {
        result.violations.push_back({"curvature", "surface", "kappa < 0 is not supported"});
        return result;
    }
    ConeSurface s;
    s.topology = topology;
    s.kappa = kappa > 0 ? 1.0 : 0.0;
    s.unit_scale = kappa > 0 ? std::sqrt(kappa) : 1.0;
    s.faces = std::move(faces);
    s.topo = build_topology(n_vertices, s.faces, &face_edge_ids);
    s.edge_len = std::move(lengths_by_edge);
    for (auto& l : s.edge_len) l *= s.unit_scale;
    if (static_cast<int>(s.edge_len.size()) != s.n_edges()) {
        result.violations.push_back({"length", "surface", "edge length count mismatch"});
        return result;
    }
    return finish_surface(std::move(s), std::move(result));
}

namespace {

SurfaceLoadResult finish_surface(ConeSurface s, SurfaceLoadResult result) {
    auto fail = [&](std::string kind, std::string where, std::string msg) {
        result.violations.push_back({std::move(kind), std::move(where), std::move(msg)});
    };
    const int n_vertices = s.topo.n_vertices;

    if (!s.topo.manifold) {
        fail("manifold", "surface", "mesh is not an edge-manifold triangle mesh");
        return result;
    }
    if (!s.topo.consistently_oriented) {
        fail("orientability", "surface", "faces are not consistently oriented");
        return result;
    }

    const int chi = s.topo.euler(s.n_faces());
    const bool has_boundary = !s.topo.boundary_loop.empty();
    if (s.topology == Topology::sphere && (chi != 2 || has_boundary))
        fail("topology", "surface", "topology tag 'sphere' but Euler characteristic/boundary disagree");
    if (s.topology == Topology::disk && (chi != 1 || !has_boundary))
        fail("topology", "surface", "topology tag 'disk' but Euler characteristic/boundary disagree");
    if (!result.violations.empty()) return result;

    s.corner_angle.assign(s.n_faces(), {0, 0, 0});
    for (int f = 0; f < s.n_faces(); ++f) {
        const double l0 = s.face_side_length(f, 0);
        const double l1 = s.face_side_length(f, 1);
        const double l2 = s.face_side_length(f, 2);
        try {
            ModelTriangle{l0, l1, l2, s.kappa}.validate();
            // Corner k sits between sides k and k+2; side k+1 is opposite.
            s.corner_angle[f][0] = model_angle(l0, l2, l1, s.kappa);
            s.corner_angle[f][1] = model_angle(l1, l0, l2, s.kappa);
            s.corner_angle[f][2] = model_angle(l2, l1, l0, s.kappa);
        } catch (const GeometryError& e) {
            fail("triangle", simplex("face", f), e.what());
        }
    }
    if (!result.violations.empty()) return result;

    s.vertex_angle.assign(n_vertices, 0.0);
    for (int f = 0; f < s.n_faces(); ++f)
        for (int k = 0; k < 3; ++k) s.vertex_angle[s.faces[f][k]] += s.corner_angle[f][k];

    // Link condition: interior vertices must carry total angle >= 2*pi.
    for (int v = 0; v < n_vertices; ++v) {
        if (s.topo.vertex_boundary[v]) continue;
        if (s.vertex_angle[v] < kTwoPi - kAngleTol) {
            std::ostringstream os;
            os << "total angle " << s.vertex_angle[v] << " < 2*pi";
            fail("link-condition", simplex("vertex", v), os.str());
        }
    }

    // Ordered corner fans (CCW). For boundary vertices the fan starts at the
    // boundary-side face.
    s.vertex_fan.resize(n_vertices);
    s.vertex_fan_offset.resize(n_vertices);
    for (int v = 0; v < n_vertices; ++v) {
        const auto& incident = s.topo.vertex_faces[v];
        if (incident.empty()) {
            fail("isolated", simplex("vertex", v), "vertex has no incident face");
            continue;
        }
        auto next_ccw = [&](int f) -> int {
            const int c = s.corner_of(f, v);
            const int e = s.topo.face_edges[f][(c + 2) % 3]; // side (f[c+2], v)
            const auto& ef = s.topo.edge_faces[e];
            return ef[0] == f ? ef[1] : ef[0];
        };
        auto prev_cw = [&](int f) -> int {
            const int c = s.corner_of(f, v);
            const int e = s.topo.face_edges[f][c]; // side (v, f[c+1])
            const auto& ef = s.topo.edge_faces[e];
            return ef[0] == f ? ef[1] : ef[0];
        };
        int start = incident[0];
        if (s.topo.vertex_boundary[v]) {
            int guard = 0;
            while (true) {
                const int prev = prev_cw(start);
                if (prev < 0) break;
                start = prev;
                if (++guard > static_cast<int>(incident.size())) break;
            }
        }
        std::vector<int> fan;
        std::vector<double> offsets;
        double acc = 0;
        int f = start;
        for (std::size_t k = 0; k < incident.size(); ++k) {
            fan.push_back(f);
            offsets.push_back(acc);
            acc += s.corner_angle[f][s.corner_of(f, v)];
            const int nf = next_ccw(f);
            if (nf < 0 || nf == start) break;
            f = nf;
        }
        if (fan.size() != incident.size())
            fail("fan", simplex("vertex", v), "incident faces do not form a single fan");
        s.vertex_fan[v] = std::move(fan);
        s.vertex_fan_offset[v] = std::move(offsets);
    }

    if (!result.violations.empty()) return result;
    result.surface = std::move(s);
    return result;
}

SurfaceLoadResult load_surface_json(const nlohmann::json& doc) {
    SurfaceLoadResult result;
    auto fail = [&](std::string msg) {
        result.violations.push_back({"parse", "document", std::move(msg)});
        return result;
    };
    if (!doc.contains("topology") || !doc.contains("kappa") || !doc.contains("vertices") ||
        !doc.contains("faces") || !doc.contains("edge_lengths"))
        return fail("missing one of: topology, kappa, vertices, faces, edge_lengths");
    const std::string topo_tag = doc["topology"].get<std::string>();
    if (topo_tag != "sphere" && topo_tag != "disk") return fail("topology must be sphere or disk");
    const Topology topology = topo_tag == "sphere" ? Topology::sphere : Topology::disk;
    const double kappa = doc["kappa"].get<double>();
    const int nv = doc["vertices"].get<int>();
    std::vector<std::array<int, 3>> faces;
    for (const auto& f : doc["faces"]) {
        if (!f.is_array() || f.size() != 3) return fail("faces must be triples");
        faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
    }
    std::map<std::pair<int, int>, double> lengths;
    for (const auto& [key, value] : doc["edge_lengths"].items()) {
        const auto dash = key.find('-');
        if (dash == std::string::npos) return fail("edge length key must be 'i-j'");
        const int i = std::stoi(key.substr(0, dash));
        const int j = std::stoi(key.substr(dash + 1));
        lengths[{std::min(i, j), std::max(i, j)}] = value.get<double>();
    }
    return build_cone_surface(topology, kappa, nv, std::move(faces), lengths);
}

SurfaceLoadResult load_surface_off(const std::string& text) {
    SurfaceLoadResult result;
    std::istringstream in(text);
    std::string header;
    in >> header;
    if (header != "OFF") {
        result.violations.push_back({"parse", "document", "expected OFF header or JSON object"});
        return result;
    }
    int nv = 0, nf = 0, ne = 0;
    in >> nv >> nf >> ne;
    std::vector<Vec3> pos(nv);
    for (int v = 0; v < nv; ++v) in >> pos[v][0] >> pos[v][1] >> pos[v][2];
    std::vector<std::array<int, 3>> faces(nf);
    for (int f = 0; f < nf; ++f) {
        int deg;
        in >> deg;
        if (deg != 3) {
            result.violations.push_back({"parse", simplex("face", f), "only triangles supported"});
            return result;
        }
        in >> faces[f][0] >> faces[f][1] >> faces[f][2];
    }
    if (!in) {
        result.violations.push_back({"parse", "document", "truncated OFF data"});
        return result;
    }
    // Chord lengths from the embedding; the embedding itself is discarded.
    std::map<std::pair<int, int>, double> lengths;
    for (const auto& f : faces) {
        for (int k = 0; k < 3; ++k) {
            const int i = f[k], j = f[(k + 1) % 3];
            const auto key = std::pair(std::min(i, j), std::max(i, j));
            const Vec3 d{pos[i][0] - pos[j][0], pos[i][1] - pos[j][1], pos[i][2] - pos[j][2]};
            lengths[key] = std::sqrt(dot(d, d));
        }
    }
    auto probe = build_topology(nv, faces);
    const Topology topology = probe.boundary_loop.empty() ? Topology::sphere : Topology::disk;
    return build_cone_surface(topology, 0.0, nv, std::move(faces), lengths);
}

} // namespace

SurfaceLoadResult load_surface(const std::string& text) {
    // JSON documents start with '{'; everything else is tried as OFF.
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') {
            try {
                return load_surface_json(nlohmann::json::parse(text));
            } catch (const nlohmann::json::exception& e) {
                SurfaceLoadResult r;
                r.violations.push_back({"parse", "document", e.what()});
                return r;
            }
        }
        break;
    }
    return load_surface_off(text);
}

std::string surface_to_json(const ConeSurface& s) {
    nlohmann::json doc;
    doc["schema"] = "catuni/1";
    doc["type"] = "target";
    doc["topology"] = s.topology == Topology::sphere ? "sphere" : "disk";
    doc["kappa"] = s.kappa;
    doc["vertices"] = s.n_vertices();
    doc["faces"] = s.faces;
    nlohmann::json lengths = nlohmann::json::object();
    for (int e = 0; e < s.n_edges(); ++e) {
        std::ostringstream key;
        key << s.topo.edges[e].first << "-" << s.topo.edges[e].second;
        lengths[key.str()] = s.edge_len[e];
    }
    doc["edge_lengths"] = std::move(lengths);
    return doc.dump(2);
}

FlatFaceFrame flat_face_frame(const ConeSurface& s, int f) {
    FlatFaceFrame fr;
    const double l0 = s.face_side_length(f, 0);
    const double l2 = s.face_side_length(f, 2);
    const double a0 = s.corner_angle[f][0];
    fr.z[0] = {0, 0};
    fr.z[1] = {l0, 0};
    fr.z[2] = {l2 * std::cos(a0), l2 * std::sin(a0)};
    return fr;
}

SphereFaceFrame sphere_face_frame(const ConeSurface& s, int f) {
    SphereFaceFrame fr;
    const double l0 = s.face_side_length(f, 0);
    const double l2 = s.face_side_length(f, 2);
    const double a0 = s.corner_angle[f][0];
    fr.p[0] = {0, 0, 1};
    fr.p[1] = {std::sin(l0), 0, std::cos(l0)};
    fr.p[2] = {std::sin(l2) * std::cos(a0), std::sin(l2) * std::sin(a0), std::cos(l2)};
    return fr;
}

FaceBaryPoint on_face(const ConeSurface& s, const SurfacePoint& p, int preferred_face) {
    switch (p.kind) {
    case SurfacePoint::Kind::face:
        return {p.id, {p.a, p.b, 1.0 - p.a - p.b}};
    case SurfacePoint::Kind::vertex: {
        int f = preferred_face;
        if (f < 0 || s.corner_of(f, p.id) < 0) f = s.topo.vertex_faces[p.id].at(0);
        const int c = s.corner_of(f, p.id);
        std::array<double, 3> w{0, 0, 0};
        w[c] = 1.0;
        return {f, w};
    }
    case SurfacePoint::Kind::edge: {
        const auto& ef = s.topo.edge_faces[p.id];
        int f = preferred_face;
        if (f != ef[0] && f != ef[1]) f = ef[0];
        const auto [i, j] = s.topo.edges[p.id];
        const int ci = s.corner_of(f, i), cj = s.corner_of(f, j);
        std::array<double, 3> w{0, 0, 0};
        w[ci] = 1.0 - p.a;
        w[cj] = p.a;
        return {f, w};
    }
    }
    return {};
}

double within_face_distance(const ConeSurface& s, int f, const std::array<double, 3>& wa,
                            const std::array<double, 3>& wb) {
    if (s.kappa == 0) {
        const auto fr = flat_face_frame(s, f);
        Complex pa{0, 0}, pb{0, 0};
        for (int k = 0; k < 3; ++k) {
            pa += wa[k] * fr.z[k];
            pb += wb[k] * fr.z[k];
        }
        return std::abs(pa - pb);
    }
    const auto fr = sphere_face_frame(s, f);
    Vec3 pa{0, 0, 0}, pb{0, 0, 0};
    for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 3; ++d) {
            pa[d] += wa[k] * fr.p[k][d];
            pb[d] += wb[k] * fr.p[k][d];
        }
    return sphere_distance(normalized(pa), normalized(pb));
}

TangentConeChart tangent_chart(const ConeSurface& s, const SurfacePoint& p) {
    TangentConeChart chart;
    chart.base = p;
    if (p.kind == SurfacePoint::Kind::vertex) {
        const int v = p.id;
        if (s.is_boundary_vertex(v))
            throw GeometryError("tangent_chart: boundary point has no full tangent cone");
        chart.base_vertex = v;
        chart.total_angle = s.vertex_angle[v];
        chart.beta = chart.total_angle / kTwoPi;
        chart.fan_faces = s.vertex_fan[v];
        chart.fan_offsets = s.vertex_fan_offset[v];
        for (int f : chart.fan_faces) chart.fan_angles.push_back(s.corner_angle[f][s.corner_of(f, v)]);
        return chart;
    }
    if (p.kind == SurfacePoint::Kind::edge) {
        const auto& ef = s.topo.edge_faces[p.id];
        if (ef[1] < 0)
            throw GeometryError("tangent_chart: boundary point has no full tangent cone");
        chart.beta = 1;
        chart.total_angle = kTwoPi;
        chart.fan_faces = {ef[0], ef[1]};
        chart.fan_offsets = {0, kPi};
        chart.fan_angles = {kPi, kPi};
        return chart;
    }
    chart.beta = 1;
    chart.total_angle = kTwoPi;
    chart.fan_faces = {p.id};
    chart.fan_offsets = {0};
    chart.fan_angles = {kTwoPi};
    return chart;
}

Complex cone_to_model_z(const ConePoint& cp, double beta) {
    const double r = std::pow(cp.rho, 1.0 / beta);
    const double a = cp.theta / beta;
    return {r * std::cos(a), r * std::sin(a)};
}

ConePoint model_z_to_cone(const Complex& z, double beta) {
    return {std::pow(std::abs(z), beta), beta * std::arg(z)};
}

} // namespace catuni
