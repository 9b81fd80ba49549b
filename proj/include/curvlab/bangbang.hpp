#pragma once

#include "curvlab/grid.hpp"
#include "curvlab/objective.hpp"
#include "curvlab/soc.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace curvlab {

// Continuous scalar field on a grid: node values plus node gradients, with
// optional closed-form callbacks used for off-node evaluation. Gradients
// fall back to central differences of the node values.
struct AdjointField {
    Grid grid;
    Eigen::VectorXd values;   // one per node
    Eigen::MatrixXd gradients; // count() x dim
    std::function<double(const Eigen::VectorXd&)> value_fn;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient_fn;
    double grad_floor = 1e-6;
};

AdjointField make_adjoint(Grid grid, std::function<double(const Eigen::VectorXd&)> value_fn,
                          std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient_fn = {});

// field evaluation at arbitrary points: callbacks when present, otherwise
// multilinear interpolation of the node data
double field_value(const AdjointField& f, const Eigen::VectorXd& p);
Eigen::VectorXd field_gradient(const AdjointField& f, const Eigen::VectorXd& p);

// Discretized weighted surface supported on the zero level of the field:
// nodes with local surface weights (unit atoms in 1d, segment lengths in
// 2d), the gradient magnitude per node, and an optional density.
struct SurfaceMeasure {
    Eigen::MatrixXd nodes;     // k x dim
    Eigen::VectorXd weights;   // k
    Eigen::VectorXd grad_norm; // k
    std::optional<Eigen::VectorXd> density;

    Eigen::Index size() const { return weights.size(); }
    double total_variation() const; // sum of weight * |density|
    SurfaceMeasure with_density(Eigen::VectorXd g) const;
};

// roots by bisection in 1d, marching squares with midpoint nodes in 2d;
// density left unset
SurfaceMeasure extract_zero_set(const AdjointField& f);

// Dyadic shrink of the sublevel measure ratio s / (4 L({|field| <= s}));
// the estimate is the tail minimum, with a flag reporting whether the tail
// settled instead of silently averaging an oscillation.
struct LevelSetConstant {
    std::vector<double> s_schedule;
    std::vector<double> measures;
    std::vector<double> ratios;
    double K_estimate = 0.0;
    bool monotone_flag = false;
};

LevelSetConstant level_set_constant(const AdjointField& f, double s_max, int levels);

// one half of the squared density against the gradient magnitude over the
// surface
double surface_curvature(const SurfaceMeasure& sm);

// Feasible flip profile at step t: the band on the signed-distance side
// selected by the density sign, scaled by 2/t. The returned grid function
// h satisfies xbar + t h inside the pointwise unit box, where xbar is the
// negative sign of the field.
Vector recovery_strip_sequence(const AdjointField& f, const SurfaceMeasure& sm, double t);

struct RecoveryLimit {
    std::string label;
    double target = 0.0;
    std::vector<double> measured; // one per step of the schedule
    double rate = 0.0;            // mean error-halving factor per step
    bool converged = false;
};

struct RecoveryReport {
    std::vector<double> ts;
    std::vector<RecoveryLimit> limits;
};

// tabulates the pairing against each test function, the total variation,
// and the curvature pairing of the strip profiles against their surface
// targets
RecoveryReport verify_recovery_limits(
    const AdjointField& f, const SurfaceMeasure& sm, const std::vector<double>& t_schedule,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& test_functions);

struct TaylorReport {
    std::vector<double> ts;
    std::vector<double> residuals; // second-order remainder per step
    double base_integral = 0.0;    // integral of |field|
    double first_order = 0.0;      // integral of xbar * v
    double surface_term = 0.0;     // surface integral of v^2 / |grad|
    bool shrinking = false;
};

// second-order expansion of the integral of |-field + t v| around t = 0,
// with the quadratic coefficient taken from the surface term
TaylorReport l1_taylor_check(const AdjointField& f,
                             const std::function<double(const Eigen::VectorXd&)>& v,
                             const std::vector<double>& t_schedule);

struct EstimateCheck {
    bool ok = false;
    double worst = 0.0; // most negative evaluation
    int witness_v = -1;
    double witness_alpha = 0.0;
};

// quadratic-in-alpha lower estimate tying the curvature value to the
// surface data: alpha^2 Q / 2 - alpha <h, v> + integral of v^2/|grad| >= 0
EstimateCheck fundamental_estimate_check(
    const SurfaceMeasure& sm,
    const std::vector<std::function<double(const Eigen::VectorXd&)>>& v_samples,
    const std::vector<double>& alpha_samples, double Q);

struct BangBangConfig {
    double s_max = 0.0; // 0: dimension default (0.2 in 1d, 0.4 in 2d)
    int levels = 0;     // 0: dimension default (7 in 1d, 6 in 2d)
    GrowthConfig growth;
    double pos_tol = 1e-10;
};

// Full second-order screen for the pointwise unit box at the bang-bang
// point of the field: the per-density strict inequality
//   surface_curvature(g) + J''(g-weighted surface)^2 > 0,
// quadratic growth sampled by band flips measured in the total-variation
// norm, and the level-set constant gating the strict claim. J'' must carry
// an integral kernel to act on surface arguments.
SOCReport bangbang_no_gap(const AdjointField& f, const Objective& J,
                          const std::vector<Eigen::VectorXd>& g_samples,
                          const BangBangConfig& cfg = {});

} // namespace curvlab
