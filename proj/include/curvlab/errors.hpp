#pragma once

#include <stdexcept>
#include <string>

namespace curvlab {

// Base class for everything this library throws on purpose.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed inputs: mismatched sizes, non-finite entries, missing data.
struct structural_error : error {
    using error::error;
};

// Mathematically invalid query: infeasible base point, direction outside the
// tangent cone, functional outside the normal cone, step too large.
struct domain_error : error {
    using error::error;
};

// The requested operation has no implementation for this variant.
struct unsupported_error : error {
    using error::error;
};

// A standing assumption the caller must guarantee is missing or violated
// (constraint qualification not asserted, gradient floor on the zero set).
struct assumption_error : error {
    using error::error;
};

// The grid cannot resolve the requested quantity.
struct resolution_error : error {
    using error::error;
};

// Bad run configuration (schema violation, unknown key, bad override).
struct config_error : error {
    using error::error;
};

} // namespace curvlab
