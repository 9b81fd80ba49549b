#pragma once

#include "curvlab/cones.hpp"
#include "curvlab/sets.hpp"
#include "curvlab/vec.hpp"

#include <optional>
#include <string>
#include <vector>

namespace curvlab {

// Directional curvature of an admissible set C at a feasible point x with a
// functional phi in -N_C(x):
//
//   Q(h) = inf { liminf <phi, r_k> : t_k -> 0+, t_k r_k -> 0,
//                x + t_k h + t_k^2 r_k / 2 in C }
//
// valued in [-inf, +inf]. In the finite-dimensional discretizations treated
// here the vanishing condition on t_k r_k is a norm statement, so bounded
// inner problems with a radius relaxation probe recover the classification.
struct CurvatureValue {
    enum class Kind { finite, plus_infinity, minus_infinity };
    Kind kind = Kind::finite;
    double value = 0.0; // finite kind only

    std::string method;
    bool converged = false;
    double divergence_rate = 0.0; // mean log2 growth per halved step when infinite
    std::vector<double> ts;
    std::vector<double> estimates; // inner minima of 2 <phi, y - x - t h> / t^2
    std::vector<std::string> notes;

    bool finite() const { return kind == Kind::finite; }
    static CurvatureValue finite_value(double v, std::string method);
    static CurvatureValue infinite(Kind k, std::string method);
};

struct BruteForceOptions {
    double t0 = 0.1;
    int k_max = 20;
    int restarts = 16;
    unsigned seed = 20260822;
    double radius_factor = 100.0; // bound |r| <= factor * |h| in the inner problem
    double relax_factor = 10.0;   // escalation applied when the bound binds
    double rel_tol = 1e-4;        // plateau detection on successive estimates
    int inner_iterations = 30;
    std::optional<double> feasibility_tol; // default depends on the set kind
};

// numerical evaluation straight from the definition
CurvatureValue brute_force_curvature(const AdmissibleSet& C, const Vector& x,
                                     const Vector& phi, const Vector& h,
                                     const BruteForceOptions& opts = {});

// curvature of a constraint target at z with functional phi_K in -N_K(z);
// exact for the polyhedral kinds (zero on critical directions) and for the
// unit ball, whose boundary contributes mu |d|^2 through the multiplier mu
CurvatureValue cone_curvature(const ConvexSet& K, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& phi_K, const Eigen::VectorXd& d,
                              double tol = 1e-8);

// chain rule through the constraint map: with phi + G'(x)^T lambda = 0 and
// lambda in N_K(G(x)),
//   Q_C(h) = Q_K(G'(x) h) + <lambda, G''(x)(h, h)>
CurvatureValue pullback_curvature(const LevelSetConstraint& c, const Vector& x,
                                  const Vector& phi, const Vector& h);

struct CurvatureOptions {
    bool force_brute = false;
    BruteForceOptions brute;
};

// dispatcher: exact values where the set structure provides them, numerical
// evaluation otherwise
CurvatureValue directional_curvature(const AdmissibleSet& C, const Vector& x,
                                     const Vector& phi, const Vector& h,
                                     const CurvatureOptions& opts = {});

// agreement probe between the bounded-radius value and a relaxed bound; a
// material gap flags directions whose curvature lives outside the modelled
// space (reduced inner problems are only trustworthy when this is stable)
struct MrcReport {
    bool consistent = false;
    CurvatureValue base;
    CurvatureValue relaxed;
    double rel_gap = 0.0;
};

MrcReport mrc_probe(const AdmissibleSet& C, const Vector& x, const Vector& phi,
                    const Vector& h, const BruteForceOptions& opts = {});

} // namespace curvlab
