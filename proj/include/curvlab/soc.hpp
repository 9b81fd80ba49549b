#pragma once

#include "curvlab/curvature.hpp"
#include "curvlab/objective.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace curvlab {

// First-order condition at a feasible point: the gradient lies in the
// negative polar of the tangent cone. On failure a tangent direction with
// negative first-order pay is produced.
struct FoncResult {
    bool holds = false;
    std::optional<Vector> witness;
    double pay = 0.0; // pairing of the gradient with the witness
};

FoncResult fonc_check(const AdmissibleSet& C, const Objective& J, const Vector& xbar);

// Non-degeneracy backing for the strict second-order check. Criterion (a) is
// ellipticity of the Hessian form, (c) first-order growth fitted from
// feasible samples, (d) a finite-dimensional ambient space. The Legendre-form
// criterion (b) is documented but never claimed: on a finite grid every
// bilinear form passes it vacuously, so a numerical check would say nothing.
struct NdcResult {
    enum class Criterion { ellipticity, first_order_growth, finite_dimensional };
    bool established = false;
    std::optional<Criterion> via;
    double constant = 0.0; // eigenvalue floor for (a), fitted constant for (c)
    std::string detail;
};

struct NdcOptions {
    int samples = 64;
    double radius = 1e-2;
    std::uint64_t seed = 20260822;
    // feasible points near the base point; overrides the built-in sampler
    std::function<std::vector<Vector>(double, int, std::uint64_t)> sampler;
};

NdcResult ndc_check(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                    const NdcOptions& opts = {});

// One scanned direction of the second-order necessary condition
//   Q(h) + J''(x)(h, h) >= c |h|^2.
struct SncEntry {
    Vector h;
    CurvatureValue curvature;
    enum class Kind { finite, plus_infinity, violated, inconclusive };
    Kind kind = Kind::finite;
    double residual = 0.0; // finite entries: Q + J'' h^2 - c |h|^2
};

std::vector<SncEntry> snc_scan(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                               double c, std::span<const Vector> directions,
                               const CurvatureOptions& copts = {});

// Strict positivity of Q(h) + J''(x)(h, h) over normalized critical
// directions. advisory is set when the non-degeneracy backing is missing.
struct SscResult {
    bool holds = false;
    bool advisory = false;
    std::optional<Vector> witness;
    double margin = 0.0; // smallest finite sampled value
    int checked = 0;
    std::vector<std::string> notes;
};

SscResult ssc_check(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                    std::span<const Vector> directions, const CurvatureOptions& copts = {},
                    bool ndc_established = true);

// Empirical quadratic growth: feasible samples x near the base point and the
// ratios 2 (J(x) - J(xbar)) / |x - xbar|^2. fitted_c is a 1% trimmed minimum
// to keep sampler round-off outliers from poisoning the constant; the raw
// minimum is reported alongside.
struct GrowthConfig {
    std::vector<double> eps_schedule = {1e-1, 5e-2, 2.5e-2, 1.25e-2};
    int samples_per_radius = 64;
    std::string sampler_tag = "projection";
    std::uint64_t seed = 20260822;
    double eps_max = 0.0; // 0 means the largest schedule entry
    // feasible points at the given radius; overrides the built-in sampler
    std::function<std::vector<Vector>(double, int, std::uint64_t)> sampler;
};

struct GrowthSample {
    double radius = 0.0;
    double norm = 0.0; // |x - xbar| in the space's own norm
    double ratio = 0.0;
};

struct GrowthReport {
    std::vector<double> radii;
    std::vector<GrowthSample> samples;
    double fitted_c = 0.0;
    double raw_min = 0.0;
    double epsilon_used = 0.0;
    int sample_count = 0;
    std::uint64_t seed = 0;
    std::string sampler_tag;
    std::vector<std::string> notes;
};

GrowthReport growth_sample(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                           const GrowthConfig& cfg = {});

// Deterministic low-discrepancy directions on the unit sphere filtered into
// the critical cone; a scan over them is the desk-scale substitute for the
// quantification over all critical directions.
std::vector<Vector> critical_directions(const AdmissibleSet& C, const Vector& xbar,
                                        const Vector& phi, int count,
                                        std::span<const Vector> extra = {});

struct SocConfig {
    int direction_count = 24;
    std::vector<Vector> extra_directions;
    CurvatureOptions curvature;
    GrowthConfig growth;
    NdcOptions ndc;
    double snc_tol = 1e-6;
    // which hypothesis backs the necessary condition; recorded, not checked
    std::string hypothesis = "mrc";
};

struct SOCReport {
    enum class Verdict { no_gap_consistent, inconsistent, inconclusive };

    FoncResult fonc;
    NdcResult ndc;
    std::vector<SncEntry> snc;
    SscResult ssc;
    GrowthReport growth;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::string> diagnostics;
};

// Full pipeline: first-order check, non-degeneracy, growth sampling, then the
// necessary and strict second-order scans, rendered into one verdict. The
// consistent verdict requires every signal to point the same way; definitive
// negative evidence yields inconsistent, unresolved pieces inconclusive.
SOCReport no_gap_report(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                        const SocConfig& cfg = {});

} // namespace curvlab
