#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "curvlab/vec.hpp"

namespace curvlab {

// Twice differentiable objective given by callbacks. The gradient is the
// Riesz representative in the vector's own pairing, so grad paired with h
// equals the directional derivative.
struct Objective {
    enum class Smoothness { c2_taylor, custom };

    std::function<double(const Vector&)> eval;
    std::function<Vector(const Vector&)> grad;
    // Second derivative as a bilinear form: hess_form(x, a, b) = J''(x)(a, b).
    std::function<double(const Vector&, const Vector&, const Vector&)> hess_form;
    Smoothness smoothness = Smoothness::c2_taylor;

    // Optional integral kernel for applying J'' to surface measures:
    // J''(x)(mu, nu) = integral of kernel(s, t) dmu(s) dnu(t).
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> kernel;

    bool complete() const { return eval && grad && hess_form; }
};

struct ConsistencyReport {
    bool ok = false;
    double worst_grad_rel = 0.0; // gradient vs central differences of eval
    double worst_hess_rel = 0.0; // hess_form vs central differences of grad
    double worst_symmetry = 0.0; // |J''(a,b) - J''(b,a)| scaled
    std::string detail;
};

// Derivative self-checks at the given points. High-dimensional points are
// probed along a seeded subset of coordinates so grid-sized objectives stay
// cheap. Accepted tolerances: relative 1e-5 for the gradient, 1e-4 for the
// Hessian, 1e-12*(1+|value|) for symmetry of the bilinear form.
ConsistencyReport check_objective(const Objective& J, std::span<const Vector> points,
                                  std::uint64_t seed);

} // namespace curvlab
