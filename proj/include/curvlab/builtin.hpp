#pragma once

#include <string>
#include <utility>
#include <vector>

#include "curvlab/bangbang.hpp"
#include "curvlab/objective.hpp"
#include "curvlab/sets.hpp"
#include "curvlab/soc.hpp"

namespace curvlab {

// A bundled problem ready for the report pipeline. Surface problems carry the
// switching field and candidate surface densities instead of direction lists.
struct BuiltinProblem {
    std::string name;
    std::string description;

    AdmissibleSet set;
    Objective objective;
    Vector point;

    bool surface = false;
    AdjointField field;
    // constant surface densities to screen, instantiated once the zero set
    // is extracted and its node count is known
    std::vector<double> density_levels;
    BangBangConfig surface_cfg;

    SocConfig soc;
};

// name/description rows in bundled order
const std::vector<std::pair<std::string, std::string>>& builtin_listing();

// J(u) = integral of field * u, the objective whose gradient representative
// is the field itself; second derivative and kernel are zero
Objective linear_surface_objective(const AdjointField& f);

// cells == 0 keeps the example's own grid; only grid-backed examples accept
// an override (config_error otherwise). Unknown names are a config_error.
BuiltinProblem make_builtin(const std::string& name, int cells = 0);

} // namespace curvlab
