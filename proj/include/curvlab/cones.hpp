#pragma once

#include <optional>
#include <span>
#include <vector>

#include "curvlab/sets.hpp"

// Cone calculus at a feasible base point. The discretized spaces used here
// are finite dimensional, where the weak-* and the ordinary tangent cone
// coincide, so only the ordinary cone is implemented; directions that only
// exist in a weak-* closure (surface measures against a bang-bang box) are
// handled by the surface machinery instead of by these membership tests.
//
// A cautionary note on second-order regularity: nonnegativity cones in
// L2-type discretizations need not be second-order regular, and the distance
// decay check below is the tool that exposes such failures numerically.

namespace curvlab {

struct ConeQuery {
    const AdmissibleSet* set = nullptr;
    Vector base;
    std::optional<Vector> functional; // must lie in -N_C(base) when present
    double tol = 1e-9;                // activity detection slack

    ConeQuery(const AdmissibleSet& C, Vector base_point);
    ConeQuery(const AdmissibleSet& C, Vector base_point, Vector phi);
};

// h in T_C(x). Boundary counts as inside (closed-set convention).
bool tangent_cone_membership(const ConeQuery& q, const Vector& h);

// phi in N_C(x), i.e. the pairing with every tangent direction is <= 0.
bool normal_cone_membership(const ConeQuery& q, const Vector& phi);

// phi in -N_C(x): pairing with every tangent direction is >= 0. This is the
// membership a functional stored on a ConeQuery has to pass.
bool minus_normal_cone_membership(const ConeQuery& q, const Vector& phi);

// x + t h feasible for some t > 0 (supported variants only).
bool radial_cone_membership(const ConeQuery& q, const Vector& h);

// tangent and pairing with the stored functional vanishes up to
// tol * |phi| * |h|.
bool critical_cone_membership(const ConeQuery& q, const Vector& h, double tol = 1e-8);

// Metric-ish projections used by the direction samplers. Results always pass
// the corresponding membership test; they need not be exact metric
// projections for every variant.
Vector project_tangent(const ConeQuery& q, const Vector& v);
Vector project_critical(const ConeQuery& q, const Vector& v);

// ===== target-set (K-side) cone tests =====================================

bool cone_tangent_contains(const ConvexSet& K, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& d, double tol);
bool cone_normal_contains(const ConvexSet& K, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& lambda, double tol);

// ===== second-order tangent sets ==========================================

// T_K^2(z, h): the set of accelerations r with dist(z + t h + t^2 r / 2, K)
// = o(t^2). For the polyhedral kinds this is the tangent cone of T_K(z) at
// h; for the ball it is a shifted halfspace.
struct SecondOrderTangentSet {
    enum class Kind { all_space, half_line_nonpos, shifted, empty };
    Kind kind = Kind::all_space;
    ConvexSet base;         // shifted: base cone
    Eigen::VectorXd offset; // shifted: translation

    bool contains(const Eigen::VectorXd& r, double tol) const;
};

SecondOrderTangentSet second_order_tangent_set(const ConvexSet& K, const Eigen::VectorXd& z,
                                               const Eigen::VectorXd& h, double tol = 1e-9);

// ===== distance decay along x + t h =======================================

// Necessary condition probe: along a second-order regular set,
// dist(x + t h, C) = O(t^2) for tangent h. Ratios dist/t^2 exploding across
// the schedule flag the violation.
struct SorReport {
    bool violated = false;
    std::vector<double> ts, dists, ratios;
    double initial_ratio = 0.0, peak_ratio = 0.0;
};

SorReport sor_necessary_check(const AdmissibleSet& C, const Vector& x, const Vector& h,
                              std::span<const double> t_schedule);
std::vector<double> default_t_schedule(double t0 = 0.1, int k_max = 24);

// ===== constraint qualification ===========================================

// Numerical check of G'(x)X - R_K(G(x)) = Z for targets with at most two
// rows. Backs the zkcq_asserted flag; a full-rank Jacobian is sufficient.
bool verify_zkcq(const LevelSetConstraint& c, const Vector& x);

// Multiplier recovery: least-residual lambda in N_K(G(x)) with
// G'(x)^T lambda = -phi. Returns empty when the residual stays above
// tol * (1 + |phi|).
std::optional<Eigen::VectorXd> normal_multiplier(const LevelSetConstraint& c, const Vector& x,
                                                 const Vector& phi, double tol = 1e-8);

} // namespace curvlab
