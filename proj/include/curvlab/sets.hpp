#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <variant>

#include "curvlab/grid.hpp"
#include "curvlab/vec.hpp"

namespace curvlab {

// Closed convex target set K of a constraint G(x) in K. Box targets here are
// honest sets, not cones; the name records the role in the pullback formulas.
struct ConvexSet {
    enum class Kind { half_line_nonpos, box, unit_ball, polyhedral };
    Kind kind = Kind::half_line_nonpos;
    int dim = 1;

    Eigen::VectorXd lower, upper; // box
    Eigen::MatrixXd A;            // polyhedral rows
    Eigen::VectorXd b;

    static ConvexSet half_line_nonpos();
    static ConvexSet box(Eigen::VectorXd lower, Eigen::VectorXd upper);
    static ConvexSet unit_ball(int dim);
    static ConvexSet polyhedral(Eigen::MatrixXd A, Eigen::VectorXd b);

    double residual(const Eigen::VectorXd& z) const; // max inequality violation
    bool contains(const Eigen::VectorXd& z, double tol) const { return residual(z) <= tol; }
};

struct BoxSet {
    Vector lower, upper;
};

struct PolyhedronSet {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
};

// Preimage constraint C = { x : G(x) in K } with caller-supplied derivatives.
// Cone formulas for this variant require the constraint qualification
// G'(x)X - R_K(G(x)) = Z, which the caller asserts (verify_zkcq can back the
// assertion numerically for up to two constraint rows).
struct LevelSetConstraint {
    std::function<Eigen::VectorXd(const Vector&)> value;
    std::function<Eigen::MatrixXd(const Vector&)> jacobian;
    // component-wise second derivative form: hess_form(x, a, b)[i] = G_i''(x)(a, b)
    std::function<Eigen::VectorXd(const Vector&, const Vector&, const Vector&)> hess_form;
    ConvexSet target;
    bool zkcq_asserted = false;
    bool convex_hint = false; // caller vouches the preimage is convex
};

// Plane region bounded by the curve x2 = |x1|^alpha with 1 < alpha < 2.
// side == above is the (convex) epigraph, side == below its flipped copy.
struct PowerEpigraph {
    enum class Side { above, below };
    double alpha = 1.5;
    Side side = Side::above;
};

// Pointwise box |u| <= 1 over a grid, the discretization of the unit ball of
// L-infinity inside the space of measures with the total-variation norm.
struct BangBangBox {
    Grid grid;
};

struct AdmissibleSet {
    std::variant<BoxSet, PolyhedronSet, LevelSetConstraint, PowerEpigraph, BangBangBox> v;

    template <class T> const T* as() const { return std::get_if<T>(&v); }
    template <class T> bool is() const { return std::holds_alternative<T>(v); }
};

AdmissibleSet make_box(Vector lower, Vector upper);
AdmissibleSet make_polyhedron(Eigen::MatrixXd A, Eigen::VectorXd b);
AdmissibleSet make_level_set(LevelSetConstraint c);
AdmissibleSet make_power_epigraph(double alpha, PowerEpigraph::Side side);
AdmissibleSet make_bangbang(Grid grid);

// 1e-10 for analytic sets, 1e-8 for grid-based ones.
double default_feasibility_tol(const AdmissibleSet& C);

// Worst violation over the defining inequalities (0 when feasible).
double feasibility_residual(const AdmissibleSet& C, const Vector& x);

bool membership(const AdmissibleSet& C, const Vector& x, double tol);
bool membership(const AdmissibleSet& C, const Vector& x); // default tol

bool is_convex(const AdmissibleSet& C);

// Distance in the vector's own norm. Throws unsupported_error for variants
// without a trustworthy distance (general level sets with vector targets).
double distance(const AdmissibleSet& C, const Vector& x);

// Metric projection; exact for box-like and polyhedral variants, Newton-based
// for scalar level sets, curve search for the power epigraphs.
Vector project(const AdmissibleSet& C, const Vector& x);

// Exact projection onto { y : A y <= b } by active-set enumeration.
// Intended for the desk-scale polyhedra used here (few rows).
Eigen::VectorXd project_polyhedron(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   const Eigen::VectorXd& p);

// min-norm residual of phi against { A^T mu : mu >= 0 }, via
// Lawson-Hanson nonnegative least squares. Returns the residual norm.
double conic_hull_residual(const Eigen::MatrixXd& At, const Eigen::VectorXd& phi,
                           Eigen::VectorXd* mu_out = nullptr);

} // namespace curvlab
