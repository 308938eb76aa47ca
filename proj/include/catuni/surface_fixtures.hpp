#pragma once

// Bundled target fixtures: admissible cone surfaces for experiments and the
// canonical inadmissible ones for validation tests.

#include "catuni/target_surface.hpp"

namespace catuni {

/// Flat disk of the given radius, triangulated by concentric hexagonal rings.
ConeSurface make_flat_disk_target(double radius, int rings);

/// Flat cone disk: apex of total angle 2*pi*beta at the center, total radius
/// `radius`, `rings` concentric rings, `sectors` vertices per ring.
ConeSurface make_cone_disk_target(double beta, double radius, int rings, int sectors);

/// Round unit sphere: geodesic edge lengths of the level-n domain sphere
/// triangulation, kappa = 1.
ConeSurface make_sphere_target(int level);

/// Spherical cone sphere ("rugby ball"): unit-curvature surface of revolution
/// with two antipodal cone points of total angle 2*pi*beta, sampled on
/// `bands` latitude bands and `sectors` meridians.
ConeSurface make_spherical_cone_target(double beta, int bands, int sectors);

/// Regular tetrahedron, unit edges, kappa = 0. Violates the link condition.
SurfaceLoadResult make_tetrahedron_target();

/// Double of the flat unit square (two copies glued along the boundary,
/// each split into four triangles). Violates the link condition at corners.
SurfaceLoadResult make_doubled_square_target();

} // namespace catuni
