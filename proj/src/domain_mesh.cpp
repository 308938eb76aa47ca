#include "catuni/domain_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "catuni/errors.hpp"
#include "catuni/geom_kernel.hpp"

namespace catuni {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& a) {
    const double n = std::sqrt(dot(a, a));
    return {a[0] / n, a[1] / n, a[2] / n};
}

double sphere_distance(const Vec3& a, const Vec3& b) {
    // atan2 form is accurate for both small and near-antipodal separations.
    const Vec3 c = cross(a, b);
    return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

namespace {

double edge_chart_length(const DomainMesh& m, int v0, int v1) {
    if (m.kind == DomainMesh::Kind::sphere) return sphere_distance(m.pos[v0], m.pos[v1]);
    return std::hypot(m.pos[v0][0] - m.pos[v1][0], m.pos[v0][1] - m.pos[v1][1]);
}

void finalize_mesh(DomainMesh& m, const std::vector<std::array<int, 3>>* explicit_edges = nullptr) {
    m.topo = build_topology(m.n_vertices(), m.faces, explicit_edges);
    if (!m.topo.manifold || !m.topo.consistently_oriented)
        throw Error("domain mesh construction produced a non-manifold or misoriented mesh");

    // Chart assignment and cached corner coordinates. A face is assigned a
    // chart in which its image triangle is positively oriented (equivalently,
    // a chart whose singular pole the face does not wrap).
    m.face_chart.assign(m.n_faces(), 0);
    m.face_coords.resize(m.n_faces());
    m.face_area.resize(m.n_faces());
    int neg = 0;
    auto assign = [&](int f, int chart) {
        for (int k = 0; k < 3; ++k)
            m.face_coords[f][k] = to_chart(m, chart, m.pos[m.faces[f][k]]);
        const Complex u = m.face_coords[f][1] - m.face_coords[f][0];
        const Complex v = m.face_coords[f][2] - m.face_coords[f][0];
        m.face_chart[f] = chart;
        m.face_area[f] = 0.5 * (u.real() * v.imag() - u.imag() * v.real());
    };
    for (int f = 0; f < m.n_faces(); ++f) {
        int chart = 0;
        if (m.kind == DomainMesh::Kind::sphere) {
            double zc = 0;
            for (int k = 0; k < 3; ++k) zc += m.pos[m.faces[f][k]][2];
            chart = zc <= 0 ? 0 : 1;
        }
        assign(f, chart);
        if (m.face_area[f] <= 0 && m.kind == DomainMesh::Kind::sphere) assign(f, 1 - chart);
        if (m.face_area[f] <= 0) ++neg;
    }
    // A globally reversed mesh shows up as negative areas everywhere.
    if (neg == m.n_faces()) {
        for (auto& f : m.faces) std::swap(f[1], f[2]);
        std::vector<std::array<int, 3>> swapped;
        if (explicit_edges) {
            swapped = *explicit_edges;
            for (auto& fe : swapped) std::swap(fe[0], fe[2]);
            finalize_mesh(m, &swapped);
        } else {
            finalize_mesh(m);
        }
        return;
    }
    if (neg != 0) {
#ifdef CATUNI_DEBUG_ORIENTATION
        for (int f = 0; f < m.n_faces(); ++f) {
            if (m.face_area[f] <= 0)
                std::fprintf(stderr, "face %d area %.6g chart %d verts %d %d %d z %.3f %.3f %.3f\n", f,
                             m.face_area[f], m.face_chart[f], m.faces[f][0], m.faces[f][1],
                             m.faces[f][2], m.pos[m.faces[f][0]][2], m.pos[m.faces[f][1]][2],
                             m.pos[m.faces[f][2]][2]);
        }
#endif
        throw Error("domain mesh has mixed face orientations in charts");
    }

    // Cotangent weights from chart coordinates.
    m.edge_weight.assign(m.n_edges(), 0.0);
    for (int f = 0; f < m.n_faces(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const Complex zk = m.face_coords[f][k];
            const Complex za = m.face_coords[f][(k + 1) % 3];
            const Complex zb = m.face_coords[f][(k + 2) % 3];
            const Complex u = za - zk, v = zb - zk;
            const double crossz = u.real() * v.imag() - u.imag() * v.real();
            const double cot = (u.real() * v.real() + u.imag() * v.imag()) / crossz;
            // Corner k faces the edge (k+1, k+2), which is side k+1.
            m.edge_weight[m.topo.face_edges[f][(k + 1) % 3]] += 0.5 * cot;
        }
    }
}

// Distance from the origin to the boundary of the inscribed equilateral
// triangle along the unit direction d.
double triangle_boundary_radius(double dx, double dy) {
    static const double vx[3] = {0.0, -std::sqrt(3.0) / 2, std::sqrt(3.0) / 2};
    static const double vy[3] = {1.0, -0.5, -0.5};
    double r = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double dn = -(vx[k] * dx + vy[k] * dy); // outward normal is -V_k
        if (dn > 1e-15) r = std::min(r, 0.5 / dn);
    }
    return r;
}

// Radial reparameterization of the triangle onto the unit disk.
Complex psi(double x, double y) {
    const double n = std::hypot(x, y);
    if (n < 1e-300) return {0, 0};
    const double r = triangle_boundary_radius(x / n, y / n);
    return {x / r, y / r};
}

Vec3 inverse_stereographic_lower(const Complex& z) {
    const double s = std::norm(z);
    return {2.0 * z.real() / (1.0 + s), 2.0 * z.imag() / (1.0 + s), (s - 1.0) / (1.0 + s)};
}

} // namespace

DomainMesh build_sphere_mesh(int n) {
    if (n < 0) throw InvalidInputError("build_sphere_mesh: level must be nonnegative");
    const int N = 1 << n;
    const double ax = 0.0, ay = 1.0;
    const double bx = -std::sqrt(3.0) / 2, by = -0.5;
    const double cx = std::sqrt(3.0) / 2, cy = -0.5;

    auto lattice_xy = [&](int i, int j) {
        const int k = N - i - j;
        return std::pair<double, double>{(i * ax + j * bx + k * cx) / N,
                                         (i * ay + j * by + k * cy) / N};
    };
    auto idx = [&](int i, int j) { return i * (N + 1) - i * (i - 1) / 2 + j; };
    const int lattice_count = (N + 1) * (N + 2) / 2;

    DomainMesh m;
    m.kind = DomainMesh::Kind::sphere;
    m.level = n;

    std::vector<int> a_id(lattice_count, -1), b_id(lattice_count, -1);
    for (int i = 0; i <= N; ++i) {
        for (int j = 0; j <= N - i; ++j) {
            const auto [x, y] = lattice_xy(i, j);
            const Complex w = psi(x, y);
            a_id[idx(i, j)] = m.n_vertices();
            m.pos.push_back(inverse_stereographic_lower(w));
            const bool boundary = (i == 0 || j == 0 || i + j == N);
            if (boundary) {
                b_id[idx(i, j)] = a_id[idx(i, j)];
            } else {
                // Antipodal image of the half-turned disk; equivalently the
                // equator mirror of the copy-A vertex, which fixes the shared
                // boundary pointwise.
                const Vec3 p = inverse_stereographic_lower(w);
                b_id[idx(i, j)] = m.n_vertices();
                m.pos.push_back({p[0], p[1], -p[2]});
            }
        }
    }
    // The two copies of an interior lattice edge are distinct edges of the
    // glued sphere even when both endpoints lie on the shared equator, so
    // edges are keyed explicitly. Types: 0 = (i,j)-(i+1,j), 1 = (i,j)-(i,j+1),
    // 2 = (i+1,j)-(i,j+1).
    std::map<std::array<int, 4>, int> edge_ids;
    int next_edge = 0;
    auto edge_id = [&](int type, int i, int j, int copy) {
        const bool shared = (type == 0 && j == 0) || (type == 1 && i == 0) ||
                            (type == 2 && i + j == N - 1);
        const std::array<int, 4> key{type, i, j, shared ? 0 : copy};
        auto it = edge_ids.find(key);
        if (it != edge_ids.end()) return it->second;
        edge_ids.emplace(key, next_edge);
        return next_edge++;
    };

    std::vector<std::array<int, 3>> face_edge_keys;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N - i; ++j) {
            m.faces.push_back({a_id[idx(i, j)], a_id[idx(i + 1, j)], a_id[idx(i, j + 1)]});
            face_edge_keys.push_back({edge_id(0, i, j, 0), edge_id(2, i, j, 0), edge_id(1, i, j, 0)});
            m.faces.push_back({b_id[idx(i, j)], b_id[idx(i, j + 1)], b_id[idx(i + 1, j)]});
            face_edge_keys.push_back({edge_id(1, i, j, 1), edge_id(2, i, j, 1), edge_id(0, i, j, 1)});
            if (i + j < N - 1) {
                m.faces.push_back({a_id[idx(i + 1, j)], a_id[idx(i + 1, j + 1)], a_id[idx(i, j + 1)]});
                face_edge_keys.push_back(
                    {edge_id(1, i + 1, j, 0), edge_id(0, i, j + 1, 0), edge_id(2, i, j, 0)});
                m.faces.push_back({b_id[idx(i + 1, j)], b_id[idx(i, j + 1)], b_id[idx(i + 1, j + 1)]});
                face_edge_keys.push_back(
                    {edge_id(2, i, j, 1), edge_id(0, i, j + 1, 1), edge_id(1, i + 1, j, 1)});
            }
        }
    }
    finalize_mesh(m, &face_edge_keys);
    return m;
}

DomainMesh build_disk_mesh(int n) {
    if (n < 0) throw InvalidInputError("build_disk_mesh: level must be nonnegative");
    const int R = 1 << n;

    DomainMesh m;
    m.kind = DomainMesh::Kind::disk;
    m.level = n;

    std::vector<int> ring_start(R + 1, 0);
    m.pos.push_back({0, 0, 0});
    for (int j = 1; j <= R; ++j) {
        ring_start[j] = m.n_vertices();
        const double r = double(j) / R;
        for (int i = 0; i < 6 * j; ++i) {
            const double a = kTwoPi * i / (6.0 * j);
            m.pos.push_back({r * std::cos(a), r * std::sin(a), 0});
        }
    }
    auto ring_vertex = [&](int j, int i) {
        if (j == 0) return 0;
        const int count = 6 * j;
        return ring_start[j] + ((i % count) + count) % count;
    };
    for (int j = 1; j <= R; ++j) {
        for (int s = 0; s < 6; ++s) {
            for (int t = 0; t < j; ++t) {
                const int o0 = ring_vertex(j, s * j + t);
                const int o1 = ring_vertex(j, s * j + t + 1);
                const int in = ring_vertex(j - 1, s * (j - 1) + t);
                m.faces.push_back({o0, o1, in});
                if (t + 1 < j) {
                    const int in1 = ring_vertex(j - 1, s * (j - 1) + t + 1);
                    m.faces.push_back({o1, in1, in});
                }
            }
        }
    }
    finalize_mesh(m);
    return m;
}

std::array<Complex, 3> chart_coordinates(const DomainMesh& mesh, int face) {
    return mesh.face_coords.at(face);
}

Complex to_chart(const DomainMesh& mesh, int chart, const Vec3& p) {
    if (mesh.kind == DomainMesh::Kind::disk) return {p[0], p[1]};
    if (chart == 0) return Complex{p[0], p[1]} / (1.0 - p[2]);
    return Complex{p[0], -p[1]} / (1.0 + p[2]);
}

Vec3 from_chart(const DomainMesh& mesh, int chart, const Complex& z) {
    if (mesh.kind == DomainMesh::Kind::disk) return {z.real(), z.imag(), 0};
    const double s = std::norm(z);
    if (chart == 0) return {2 * z.real() / (1 + s), 2 * z.imag() / (1 + s), (s - 1) / (1 + s)};
    return {2 * z.real() / (1 + s), -2 * z.imag() / (1 + s), (1 - s) / (1 + s)};
}

double DomainMesh::max_edge_length() const {
    double mx = 0;
    for (const auto& e : topo.edges) mx = std::max(mx, edge_chart_length(*this, e.first, e.second));
    return mx;
}

double DomainMesh::min_edge_length() const {
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& e : topo.edges) mn = std::min(mn, edge_chart_length(*this, e.first, e.second));
    return mn;
}

namespace {

std::array<double, 3> face_signed_weights(const DomainMesh& m, int f, const Vec3& p) {
    const auto& fc = m.faces[f];
    if (m.kind == DomainMesh::Kind::sphere) {
        const Vec3& a = m.pos[fc[0]];
        const Vec3& b = m.pos[fc[1]];
        const Vec3& c = m.pos[fc[2]];
        // Sign of the corner determinant orients the test; coarse meshes have
        // near-hemispherical faces whose planar normal may point either way.
        const double s = dot(cross(a, b), c) >= 0 ? 1.0 : -1.0;
        return {s * dot(cross(b, c), p), s * dot(cross(c, a), p), s * dot(cross(a, b), p)};
    }
    auto cr = [](const Vec3& u, const Vec3& v, const Vec3& w) {
        return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0]);
    };
    const Vec3& a = m.pos[fc[0]];
    const Vec3& b = m.pos[fc[1]];
    const Vec3& c = m.pos[fc[2]];
    return {cr(b, c, p), cr(c, a, p), cr(a, b, p)};
}

} // namespace

FaceBary locate_domain_point(const DomainMesh& mesh, const Vec3& p, int seed_face) {
    int f = std::clamp(seed_face, 0, mesh.n_faces() - 1);
    const int max_steps = 4 * mesh.n_faces();
    int prev = -1;
    for (int step = 0; step < max_steps; ++step) {
        const auto w = face_signed_weights(mesh, f, p);
        int worst = -1;
        double worst_val = -1e-13;
        for (int k = 0; k < 3; ++k) {
            if (w[k] < worst_val) {
                worst_val = w[k];
                worst = k;
            }
        }
        if (worst < 0) {
            const double s = w[0] + w[1] + w[2];
            return {f, {w[0] / s, w[1] / s, w[2] / s}};
        }
        // Cross the edge opposite corner `worst`, i.e. side worst+1.
        const int e = mesh.topo.face_edges[f][(worst + 1) % 3];
        const auto& ef = mesh.topo.edge_faces[e];
        int next = ef[0] == f ? ef[1] : ef[0];
        if (next < 0 || next == prev) break;
        prev = f;
        f = next;
    }
    // Exhaustive fallback: best face by least-negative minimum weight.
    int best_f = 0;
    double best_min = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_w{};
    for (int g = 0; g < mesh.n_faces(); ++g) {
        auto w = face_signed_weights(mesh, g, p);
        const double s = w[0] + w[1] + w[2];
        if (s <= 0) continue; // wrong side of the sphere
        const double mn = std::min({w[0] / s, w[1] / s, w[2] / s});
        if (mn > best_min) {
            best_min = mn;
            best_f = g;
            best_w = {w[0] / s, w[1] / s, w[2] / s};
        }
    }
    for (auto& x : best_w) x = std::max(x, 0.0);
    const double s = best_w[0] + best_w[1] + best_w[2];
    return {best_f, {best_w[0] / s, best_w[1] / s, best_w[2] / s}};
}

Vec3 domain_point(const DomainMesh& mesh, const FaceBary& fb) {
    const auto& f = mesh.faces[fb.face];
    Vec3 p{0, 0, 0};
    for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 3; ++d) p[d] += fb.w[k] * mesh.pos[f[k]][d];
    if (mesh.kind == DomainMesh::Kind::sphere) p = normalized(p);
    return p;
}

ProbeChart probe_chart(const DomainMesh& mesh, const Vec3& p0) {
    ProbeChart c;
    c.kind = mesh.kind;
    if (mesh.kind == DomainMesh::Kind::disk) {
        c.center = {p0[0], p0[1]};
        return c;
    }
    // Rotation taking p0 to the south pole, so chart 0 is centered there.
    const Vec3 south{0, 0, -1};
    Vec3 axis = cross(p0, south);
    const double s = std::sqrt(dot(axis, axis));
    const double co = dot(p0, south);
    if (s < 1e-14) {
        if (co > 0) return c; // already south
        c.rot = {1, 0, 0, 0, -1, 0, 0, 0, -1};
        return c;
    }
    axis = normalized(axis);
    const double si = s;
    const double x = axis[0], y = axis[1], z = axis[2], t = 1 - co;
    c.rot = {co + x * x * t, x * y * t - z * si, x * z * t + y * si,
             x * y * t + z * si, co + y * y * t, y * z * t - x * si,
             x * z * t - y * si, y * z * t + x * si, co + z * z * t};
    return c;
}

Complex probe_coord(const ProbeChart& chart, const Vec3& p) {
    if (chart.kind == DomainMesh::Kind::disk) return Complex{p[0], p[1]} - chart.center;
    const auto& r = chart.rot;
    const Vec3 q{r[0] * p[0] + r[1] * p[1] + r[2] * p[2],
                 r[3] * p[0] + r[4] * p[1] + r[5] * p[2],
                 r[6] * p[0] + r[7] * p[1] + r[8] * p[2]};
    return Complex{q[0], q[1]} / (1.0 - q[2]);
}

Vec3 probe_point(const ProbeChart& chart, const Complex& z) {
    if (chart.kind == DomainMesh::Kind::disk) {
        const Complex w = z + chart.center;
        return {w.real(), w.imag(), 0};
    }
    const double s = std::norm(z);
    const Vec3 q{2 * z.real() / (1 + s), 2 * z.imag() / (1 + s), (s - 1) / (1 + s)};
    const auto& r = chart.rot;
    return {r[0] * q[0] + r[3] * q[1] + r[6] * q[2],
            r[1] * q[0] + r[4] * q[1] + r[7] * q[2],
            r[2] * q[0] + r[5] * q[1] + r[8] * q[2]};
}

std::string export_mesh_text(const DomainMesh& mesh) {
    std::ostringstream out;
    out.precision(17);
    out << "OFF\n" << mesh.n_vertices() << " " << mesh.n_faces() << " 0\n";
    for (const auto& p : mesh.pos) out << p[0] << " " << p[1] << " " << p[2] << "\n";
    for (const auto& f : mesh.faces) out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
    return out.str();
}

} // namespace catuni
