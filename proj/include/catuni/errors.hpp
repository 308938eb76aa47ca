#pragma once

#include <stdexcept>
#include <string>

namespace catuni {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (parse failures, metric violations).
struct InvalidInputError : Error {
    using Error::Error;
};

// Geometric preconditions violated (triangle inequality, perimeter bound,
// domain restrictions of the model trigonometry).
struct GeometryError : Error {
    using Error::Error;
};

// A face's image does not fit inside a convex geodesic ball of the target.
// The caller is expected to refine rather than continue.
struct LocalityError : Error {
    explicit LocalityError(int face_id, const std::string& msg)
        : Error(msg), face(face_id) {}
    int face;
};

// A geodesic left the surface through its boundary.
struct BoundaryError : Error {
    using Error::Error;
};

// The solver gave up (degenerate input, energy collapse).
struct SolverError : Error {
    using Error::Error;
};

} // namespace catuni
