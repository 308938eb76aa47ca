#include "catuni/surface_fixtures.hpp"

#include <cmath>

#include "catuni/domain_mesh.hpp"
#include "catuni/errors.hpp"

namespace catuni {

namespace {

ConeSurface must_build(SurfaceLoadResult r, const char* what) {
    if (!r.ok()) {
        std::string msg = std::string("fixture ") + what + " failed validation:";
        for (const auto& v : r.violations) msg += " [" + v.kind + " " + v.where + ": " + v.message + "]";
        throw Error(msg);
    }
    return std::move(*r.surface);
}

double flat_chord(double r1, double t1, double r2, double t2) {
    const double d2 = r1 * r1 + r2 * r2 - 2 * r1 * r2 * std::cos(t1 - t2);
    return std::sqrt(std::max(0.0, d2));
}

// Distance on the beta-cone over the unit sphere in (colatitude, longitude)
// coordinates, longitude difference dl assumed in [0, pi].
double spherical_chord(double phi1, double phi2, double dl) {
    const double c = std::cos(phi1) * std::cos(phi2) + std::sin(phi1) * std::sin(phi2) * std::cos(dl);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

} // namespace

ConeSurface make_flat_disk_target(double radius, int rings) {
    if (rings < 1) throw InvalidInputError("flat disk target needs at least one ring");
    // Reuse the domain disk construction (rings = 2^n is not required here,
    // so build the ring complex directly).
    std::vector<std::pair<double, double>> polar; // (r, angle)
    std::vector<std::array<int, 3>> faces;
    std::vector<int> ring_start(rings + 1, 0);
    polar.emplace_back(0.0, 0.0);
    for (int j = 1; j <= rings; ++j) {
        ring_start[j] = static_cast<int>(polar.size());
        for (int i = 0; i < 6 * j; ++i)
            polar.emplace_back(radius * j / rings, kTwoPi * i / (6.0 * j));
    }
    auto rv = [&](int j, int i) {
        if (j == 0) return 0;
        const int c = 6 * j;
        return ring_start[j] + ((i % c) + c) % c;
    };
    for (int j = 1; j <= rings; ++j) {
        for (int s = 0; s < 6; ++s) {
            for (int t = 0; t < j; ++t) {
                faces.push_back({rv(j, s * j + t), rv(j, s * j + t + 1), rv(j - 1, s * (j - 1) + t)});
                if (t + 1 < j)
                    faces.push_back({rv(j, s * j + t + 1), rv(j - 1, s * (j - 1) + t + 1),
                                     rv(j - 1, s * (j - 1) + t)});
            }
        }
    }
    std::map<std::pair<int, int>, double> lengths;
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) {
            const int i = f[k], j = f[(k + 1) % 3];
            lengths[{std::min(i, j), std::max(i, j)}] =
                flat_chord(polar[i].first, polar[i].second, polar[j].first, polar[j].second);
        }
    return must_build(build_cone_surface(Topology::disk, 0.0, static_cast<int>(polar.size()),
                                         std::move(faces), lengths),
                      "flat disk");
}

ConeSurface make_cone_disk_target(double beta, double radius, int rings, int sectors) {
    if (beta < 1) throw InvalidInputError("cone disk target needs beta >= 1");
    if (sectors <= 2 * beta) throw InvalidInputError("cone disk target needs sectors > 2*beta");
    const double step = kTwoPi * beta / sectors;
    std::vector<std::pair<double, double>> polar;
    polar.emplace_back(0.0, 0.0); // apex
    auto rv = [&](int j, int i) {
        return 1 + (j - 1) * sectors + ((i % sectors) + sectors) % sectors;
    };
    for (int j = 1; j <= rings; ++j)
        for (int i = 0; i < sectors; ++i) polar.emplace_back(radius * j / rings, step * i);
    std::vector<std::array<int, 3>> faces;
    for (int i = 0; i < sectors; ++i) faces.push_back({0, rv(1, i), rv(1, i + 1)});
    for (int j = 1; j < rings; ++j) {
        for (int i = 0; i < sectors; ++i) {
            faces.push_back({rv(j, i), rv(j + 1, i), rv(j + 1, i + 1)});
            faces.push_back({rv(j, i), rv(j + 1, i + 1), rv(j, i + 1)});
        }
    }
    std::map<std::pair<int, int>, double> lengths;
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) {
            const int i = f[k], j = f[(k + 1) % 3];
            double d = flat_chord(polar[i].first, polar[i].second, polar[j].first, polar[j].second);
            lengths[{std::min(i, j), std::max(i, j)}] = d;
        }
    return must_build(build_cone_surface(Topology::disk, 0.0, static_cast<int>(polar.size()),
                                         std::move(faces), lengths),
                      "cone disk");
}

ConeSurface make_sphere_target(int level) {
    const DomainMesh m = build_sphere_mesh(level);
    std::vector<double> lengths(m.n_edges());
    for (int e = 0; e < m.n_edges(); ++e) {
        const auto [i, j] = m.topo.edges[e];
        lengths[e] = sphere_distance(m.pos[i], m.pos[j]);
    }
    return must_build(build_cone_surface_explicit(Topology::sphere, 1.0, m.n_vertices(), m.faces,
                                                  m.topo.face_edges, std::move(lengths)),
                      "sphere");
}

ConeSurface make_spherical_cone_target(double beta, int bands, int sectors) {
    if (beta < 1) throw InvalidInputError("spherical cone target needs beta >= 1");
    if (sectors <= 2 * beta) throw InvalidInputError("spherical cone target needs sectors > 2*beta");
    if (bands < 2) throw InvalidInputError("spherical cone target needs at least two bands");
    const double dl = kTwoPi * beta / sectors;

    std::vector<double> phis; // colatitude per ring, rings 1..bands-1
    for (int j = 1; j < bands; ++j) phis.push_back(kPi * j / bands);
    const int north = 0, south = 1;
    auto rv = [&](int j, int i) {
        return 2 + (j - 1) * sectors + ((i % sectors) + sectors) % sectors;
    };
    const int nv = 2 + (bands - 1) * sectors;

    std::vector<std::array<int, 3>> faces;
    for (int i = 0; i < sectors; ++i) faces.push_back({north, rv(1, i), rv(1, i + 1)});
    for (int j = 1; j + 1 < bands; ++j) {
        for (int i = 0; i < sectors; ++i) {
            faces.push_back({rv(j, i), rv(j + 1, i), rv(j + 1, i + 1)});
            faces.push_back({rv(j, i), rv(j + 1, i + 1), rv(j, i + 1)});
        }
    }
    for (int i = 0; i < sectors; ++i) faces.push_back({south, rv(bands - 1, i + 1), rv(bands - 1, i)});

    auto phi_of = [&](int v) {
        if (v == north) return 0.0;
        if (v == south) return kPi;
        return phis[(v - 2) / sectors];
    };
    auto lam_of = [&](int v) {
        if (v == north || v == south) return 0.0;
        return dl * ((v - 2) % sectors);
    };
    std::map<std::pair<int, int>, double> lengths;
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) {
            const int i = f[k], j = f[(k + 1) % 3];
            double dlam = 0.0;
            if (i != north && i != south && j != north && j != south) {
                dlam = std::abs(lam_of(i) - lam_of(j));
                dlam = std::min(dlam, kTwoPi * beta - dlam);
            }
            lengths[{std::min(i, j), std::max(i, j)}] = spherical_chord(phi_of(i), phi_of(j), dlam);
        }
    return must_build(
        build_cone_surface(Topology::sphere, 1.0, nv, std::move(faces), lengths), "spherical cone");
}

SurfaceLoadResult make_tetrahedron_target() {
    std::vector<std::array<int, 3>> faces{{0, 1, 2}, {0, 2, 3}, {0, 3, 1}, {1, 3, 2}};
    std::map<std::pair<int, int>, double> lengths;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) lengths[{i, j}] = 1.0;
    return build_cone_surface(Topology::sphere, 0.0, 4, std::move(faces), lengths);
}

SurfaceLoadResult make_doubled_square_target() {
    // Corners 0..3, front center 4, back center 5.
    std::vector<std::array<int, 3>> faces{{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4},
                                          {1, 0, 5}, {2, 1, 5}, {3, 2, 5}, {0, 3, 5}};
    std::map<std::pair<int, int>, double> lengths;
    const double spoke = std::sqrt(2.0) / 2;
    for (int i = 0; i < 4; ++i) {
        lengths[{std::min(i, (i + 1) % 4), std::max(i, (i + 1) % 4)}] = 1.0;
        lengths[{i, 4}] = spoke;
        lengths[{i, 5}] = spoke;
    }
    return build_cone_surface(Topology::sphere, 0.0, 6, std::move(faces), lengths);
}

} // namespace catuni
