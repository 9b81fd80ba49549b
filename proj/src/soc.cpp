#include "curvlab/soc.hpp"

#include "curvlab/errors.hpp"
#include "curvlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace curvlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// radical-inverse sequence; bases cycle through a fixed prime table
double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,
                           43,  47,  53,  59,  61,  67,  71,  73,  79,  83,  89,  97,  101,
                           103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167,
                           173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
                           241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311};
constexpr int kPrimeCount = static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0]));

// quasi-random gaussian vector: Box-Muller on consecutive Halton coordinates
Eigen::VectorXd halton_gaussian(std::uint64_t index, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index j = 0; j < n; j += 2) {
        const int b1 = kPrimes[(2 * j) % kPrimeCount];
        const int b2 = kPrimes[(2 * j + 1) % kPrimeCount];
        const std::uint64_t shift = 1 + static_cast<std::uint64_t>(j / kPrimeCount);
        double u1 = halton(index + shift, b1);
        double u2 = halton(index + shift, b2);
        u1 = std::min(std::max(u1, 1e-12), 1.0 - 1e-12);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        v[j] = rad * std::cos(2.0 * M_PI * u2);
        if (j + 1 < n)
            v[j + 1] = rad * std::sin(2.0 * M_PI * u2);
    }
    return v;
}

// entries-space steepest descent of h -> pairing(phi, h)
Eigen::VectorXd pairing_descent(const Vector& phi) {
    if (phi.tag() == NormTag::euclidean)
        return -phi.entries();
    return -phi.entries().cwiseProduct(*phi.weights());
}

std::function<std::vector<Vector>(double, int, std::uint64_t)>
default_sampler(const AdmissibleSet& C, const Vector& xbar, std::string* tag) {
    if (const auto* pe = C.as<PowerEpigraph>()) {
        if (tag)
            *tag = "graph";
        const double alpha = pe->alpha;
        const bool above = pe->side == PowerEpigraph::Side::above;
        return [xbar, alpha, above](double r, int count, std::uint64_t seed) {
            std::vector<Vector> out;
            out.reserve(static_cast<size_t>(count));
            for (int i = 0; i < count; ++i) {
                std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(i)));
                std::uniform_real_distribution<double> u(-1.0, 1.0);
                std::uniform_real_distribution<double> s(0.0, 1.0);
                const double x1 = r * u(rng);
                const double lift = r * s(rng);
                const double curve = std::pow(std::abs(x1), alpha);
                Eigen::VectorXd e(2);
                e << x1, above ? curve + lift : curve - lift;
                out.push_back(xbar.like(e));
            }
            return out;
        };
    }
    if (tag)
        *tag = "projection";
    return [&C, xbar](double r, int count, std::uint64_t seed) {
        std::vector<Vector> out;
        out.reserve(static_cast<size_t>(count));
        const Eigen::Index n = xbar.size();
        for (int i = 0; i < count; ++i) {
            Eigen::VectorXd d = halton_gaussian(
                splitmix64(seed) % 100000 + static_cast<std::uint64_t>(i) * 3 + 1, n);
            Vector delta = xbar.like(d);
            const double dn = delta.norm();
            if (dn <= 0)
                continue;
            out.push_back(project(C, xbar + delta * (r / dn)));
        }
        return out;
    };
}

} // namespace

FoncResult fonc_check(const AdmissibleSet& C, const Objective& J, const Vector& xbar) {
    if (!membership(C, xbar))
        throw structural_error("fonc_check: base point is not feasible");
    if (!J.complete())
        throw structural_error("fonc_check: objective lacks derivatives");
    const Vector g = J.grad(xbar);
    ConeQuery q(C, xbar);
    FoncResult out;
    out.holds = minus_normal_cone_membership(q, g);
    if (out.holds)
        return out;
    Vector w = project_tangent(q, xbar.like(pairing_descent(g)));
    const double wn = w.norm();
    if (wn > 0)
        w = w * (1.0 / wn);
    out.pay = pairing(g, w);
    out.witness = w;
    return out;
}

NdcResult ndc_check(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                    const NdcOptions& opts) {
    NdcResult out;
    if (!C.is<BangBangBox>()) {
        out.established = true;
        out.via = NdcResult::Criterion::finite_dimensional;
        out.detail = "ambient space is finite-dimensional";
        return out;
    }

    // measure-space discretization: the grid stands in for an
    // infinite-dimensional space, so dimensionality cannot be claimed
    const Eigen::Index n = xbar.size();
    if (n <= 512) {
        // ellipticity floor of the Hessian form in the grid inner product, by
        // power iteration on the shifted form; for the total-variation norm
        // the floor transfers with a 1/|domain| factor via Cauchy-Schwarz
        const Eigen::VectorXd w = xbar.weights()
                                      ? *xbar.weights()
                                      : Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd wrt = w.cwiseSqrt().cwiseInverse();
        auto matvec = [&](const Eigen::VectorXd& v) {
            const Vector hv = xbar.like(v.cwiseProduct(wrt));
            Eigen::VectorXd out_v(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
                ei[i] = 1.0;
                out_v[i] = J.hess_form(xbar, xbar.like(ei), hv);
            }
            return Eigen::VectorXd(out_v.cwiseProduct(wrt));
        };
        auto power = [&](const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& A) {
            Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
            for (Eigen::Index i = 0; i < n; ++i)
                v[i] += 1e-3 * static_cast<double>(i % 7);
            v.normalize();
            double lam = 0.0;
            for (int it = 0; it < 160; ++it) {
                Eigen::VectorXd av = A(v);
                lam = v.dot(av);
                const double an = av.norm();
                if (an == 0)
                    return 0.0;
                v = av / an;
            }
            return lam;
        };
        const double top = power(matvec);
        const double shift = std::abs(top) + 1.0;
        const double lam_min =
            shift - power([&](const Eigen::VectorXd& v) {
                return Eigen::VectorXd(shift * v - matvec(v));
            });
        if (lam_min > 1e-8 * (1.0 + std::abs(top))) {
            out.established = true;
            out.via = NdcResult::Criterion::ellipticity;
            out.constant = xbar.tag() == NormTag::weighted_l1 ? lam_min / w.sum() : lam_min;
            out.detail = "Hessian form elliptic on the grid inner product";
            return out;
        }
    }

    // first-order growth of the pairing against the gradient over feasible
    // samples near the base point
    auto sampler = opts.sampler;
    std::string tag;
    if (!sampler)
        sampler = default_sampler(C, xbar, &tag);
    const Vector g = J.grad(xbar);
    const double jx = 1.0 + g.norm();
    double fitted = kInf;
    int used = 0;
    for (const Vector& x : sampler(opts.radius, opts.samples, opts.seed)) {
        const Vector d = x - xbar;
        const double dn = d.norm();
        if (dn <= 1e-12 * (1.0 + opts.radius))
            continue;
        fitted = std::min(fitted, 2.0 * pairing(g, d) / (dn * dn));
        ++used;
    }
    if (used > 0 && fitted > 1e-8 * jx) {
        out.established = true;
        out.via = NdcResult::Criterion::first_order_growth;
        out.constant = fitted;
        out.detail = "first-order growth fitted from feasible samples";
        return out;
    }
    out.detail = "no criterion established; the Legendre-form criterion is "
                 "never claimed numerically";
    return out;
}

std::vector<SncEntry> snc_scan(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                               double c, std::span<const Vector> directions,
                               const CurvatureOptions& copts) {
    const Vector g = J.grad(xbar);
    ConeQuery q(C, xbar, g);
    std::vector<SncEntry> out;
    out.reserve(directions.size());
    for (const Vector& h : directions) {
        if (!critical_cone_membership(q, h))
            throw domain_error("snc_scan: direction is not critical");
        SncEntry e{h, directional_curvature(C, xbar, g, h, copts)};
        switch (e.curvature.kind) {
        case CurvatureValue::Kind::plus_infinity:
            e.kind = SncEntry::Kind::plus_infinity;
            e.residual = kInf;
            break;
        case CurvatureValue::Kind::minus_infinity:
            e.kind = SncEntry::Kind::violated;
            e.residual = -kInf;
            break;
        case CurvatureValue::Kind::finite:
            if (e.curvature.method == "brute_force" && !e.curvature.converged) {
                e.kind = SncEntry::Kind::inconclusive;
                e.residual = std::numeric_limits<double>::quiet_NaN();
            } else {
                const double hn = h.norm();
                e.kind = SncEntry::Kind::finite;
                e.residual = e.curvature.value + J.hess_form(xbar, h, h) - c * hn * hn;
            }
            break;
        }
        out.push_back(std::move(e));
    }
    return out;
}

SscResult ssc_check(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                    std::span<const Vector> directions, const CurvatureOptions& copts,
                    bool ndc_established) {
    const Vector g = J.grad(xbar);
    ConeQuery q(C, xbar, g);
    SscResult out;
    out.advisory = !ndc_established;
    out.margin = kInf;
    const double strict_tol = 1e-9 * (1.0 + g.norm());
    for (const Vector& raw : directions) {
        const double rn = raw.norm();
        if (rn <= 0)
            continue;
        const Vector h = raw * (1.0 / rn);
        if (!critical_cone_membership(q, h))
            throw domain_error("ssc_check: direction is not critical");
        const CurvatureValue Q = directional_curvature(C, xbar, g, h, copts);
        ++out.checked;
        if (Q.kind == CurvatureValue::Kind::plus_infinity)
            continue;
        if (Q.kind == CurvatureValue::Kind::minus_infinity) {
            out.holds = false;
            out.witness = h;
            out.margin = -kInf;
            return out;
        }
        if (Q.method == "brute_force" && !Q.converged) {
            out.notes.push_back("unresolved curvature along a sampled direction");
            continue;
        }
        const double val = Q.value + J.hess_form(xbar, h, h);
        out.margin = std::min(out.margin, val);
        if (val <= strict_tol) {
            out.holds = false;
            out.witness = h;
            return out;
        }
    }
    if (out.checked == 0)
        out.notes.push_back("no nonzero critical directions sampled; vacuously strict");
    out.holds = true;
    return out;
}

GrowthReport growth_sample(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                           const GrowthConfig& cfg) {
    if (!membership(C, xbar))
        throw structural_error("growth_sample: base point is not feasible");
    GrowthReport rep;
    rep.seed = cfg.seed;
    rep.radii = cfg.eps_schedule;
    rep.sampler_tag = cfg.sampler_tag;
    auto sampler = cfg.sampler;
    if (!sampler)
        sampler = default_sampler(C, xbar, &rep.sampler_tag);
    double eps_max = cfg.eps_max;
    if (eps_max <= 0)
        for (double r : cfg.eps_schedule)
            eps_max = std::max(eps_max, r);
    rep.epsilon_used = eps_max;

    const double jbar = J.eval(xbar);
    const double feas_tol = 10.0 * default_feasibility_tol(C);
    const size_t nr = cfg.eps_schedule.size();
    std::vector<std::vector<Vector>> points(nr);
    for (size_t ri = 0; ri < nr; ++ri)
        points[ri] = sampler(cfg.eps_schedule[ri],
                             cfg.samples_per_radius,
                             splitmix64(cfg.seed + 0x9e37ull * ri));

    struct Slot {
        bool ok = false;
        bool infeasible = false;
        GrowthSample s;
    };
    std::vector<size_t> offsets(nr + 1, 0);
    for (size_t ri = 0; ri < nr; ++ri)
        offsets[ri + 1] = offsets[ri] + points[ri].size();
    std::vector<Slot> slots(offsets[nr]);
    parallel_for(static_cast<int>(slots.size()), [&](int idx_i) {
        const size_t idx = static_cast<size_t>(idx_i);
        const size_t ri = static_cast<size_t>(
            std::upper_bound(offsets.begin(), offsets.end(), idx) - offsets.begin() - 1);
        const Vector& x = points[ri][idx - offsets[ri]];
        Slot& slot = slots[idx];
        const Vector d = x - xbar;
        const double dn = d.norm();
        if (dn <= 1e-12 * (1.0 + cfg.eps_schedule[ri]) || dn > eps_max)
            return;
        if (feasibility_residual(C, x) > feas_tol) {
            slot.infeasible = true;
            return;
        }
        slot.ok = true;
        slot.s = GrowthSample{cfg.eps_schedule[ri], dn,
                              2.0 * (J.eval(x) - jbar) / (dn * dn)};
    });

    int dropped_infeasible = 0;
    std::vector<char> radius_hit(nr, 0);
    for (size_t idx = 0; idx < slots.size(); ++idx) {
        const Slot& slot = slots[idx];
        if (slot.infeasible) {
            ++dropped_infeasible;
            continue;
        }
        if (!slot.ok)
            continue;
        const size_t ri = static_cast<size_t>(
            std::upper_bound(offsets.begin(), offsets.end(), idx) - offsets.begin() - 1);
        radius_hit[ri] = 1;
        rep.samples.push_back(slot.s);
    }
    rep.sample_count = static_cast<int>(rep.samples.size());
    if (dropped_infeasible > 0)
        rep.notes.push_back(std::to_string(dropped_infeasible) +
                            " samples dropped: feasibility residual too large");
    for (size_t ri = 0; ri < nr; ++ri)
        if (!radius_hit[ri])
            rep.notes.push_back("radius " + std::to_string(cfg.eps_schedule[ri]) +
                                " yielded no usable samples");

    if (rep.samples.empty()) {
        rep.fitted_c = 0.0;
        rep.raw_min = 0.0;
        rep.notes.push_back("no samples retained; growth constant not estimated");
        return rep;
    }
    std::vector<double> ratios;
    ratios.reserve(rep.samples.size());
    for (const GrowthSample& s : rep.samples)
        ratios.push_back(s.ratio);
    std::sort(ratios.begin(), ratios.end());
    rep.raw_min = ratios.front();
    const size_t trim = static_cast<size_t>(0.01 * static_cast<double>(ratios.size()));
    rep.fitted_c = ratios[std::min(trim, ratios.size() - 1)];
    return rep;
}

std::vector<Vector> critical_directions(const AdmissibleSet& C, const Vector& xbar,
                                        const Vector& phi, int count,
                                        std::span<const Vector> extra) {
    ConeQuery q(C, xbar, phi);
    std::vector<Vector> out;
    auto push = [&](Vector h) {
        const double hn = h.norm();
        if (hn <= 1e-8)
            return;
        h = h * (1.0 / hn);
        // normalization rescales any projection slack, so re-verify
        if (!critical_cone_membership(q, h))
            return;
        for (const Vector& prev : out) {
            const Vector diff = prev - h;
            if (diff.norm() <= 1e-6)
                return;
        }
        out.push_back(std::move(h));
    };
    for (const Vector& h : extra)
        if (critical_cone_membership(q, h))
            push(h);
    const Eigen::Index n = xbar.size();
    for (std::uint64_t i = 1; i <= 16ull * static_cast<std::uint64_t>(count); ++i) {
        if (static_cast<int>(out.size()) >= count)
            break;
        const Vector v = xbar.like(halton_gaussian(i, n));
        push(project_critical(q, v));
    }
    return out;
}

SOCReport no_gap_report(const AdmissibleSet& C, const Objective& J, const Vector& xbar,
                        const SocConfig& cfg) {
    SOCReport rep;
    rep.diagnostics.push_back("necessary-condition hypothesis asserted: " + cfg.hypothesis);
    try {
        rep.fonc = fonc_check(C, J, xbar);
    } catch (const error& e) {
        rep.diagnostics.push_back(std::string("first-order check failed: ") + e.what());
        rep.verdict = SOCReport::Verdict::inconclusive;
        return rep;
    }

    try {
        rep.growth = growth_sample(C, J, xbar, cfg.growth);
    } catch (const error& e) {
        rep.diagnostics.push_back(std::string("growth sampling failed: ") + e.what());
    }

    if (!rep.fonc.holds) {
        rep.diagnostics.push_back("first-order condition fails: tangent direction with "
                                  "negative pay found");
        rep.verdict = SOCReport::Verdict::inconsistent;
        return rep;
    }

    rep.ndc = ndc_check(C, J, xbar, cfg.ndc);

    std::vector<Vector> dirs;
    try {
        dirs = critical_directions(C, xbar, J.grad(xbar), cfg.direction_count,
                                   cfg.extra_directions);
    } catch (const error& e) {
        rep.diagnostics.push_back(std::string("direction sampling failed: ") + e.what());
    }

    // the necessary condition is scanned at c = 0: the sampled growth
    // constant is an overestimate whenever constraints are strongly active
    // (the first-order pay inflates every ratio), so feeding it back in
    // would flag sound minimizers
    const double pos_tol = 1e-10;
    try {
        rep.snc = snc_scan(C, J, xbar, 0.0, dirs, cfg.curvature);
        rep.ssc = ssc_check(C, J, xbar, dirs, cfg.curvature, rep.ndc.established);
    } catch (const error& e) {
        rep.diagnostics.push_back(std::string("second-order scan failed: ") + e.what());
        rep.verdict = SOCReport::Verdict::inconclusive;
        return rep;
    }

    bool snc_violated = false;
    bool snc_unresolved = false;
    for (const SncEntry& e : rep.snc) {
        if (e.kind == SncEntry::Kind::violated ||
            (e.kind == SncEntry::Kind::finite && e.residual < -cfg.snc_tol))
            snc_violated = true;
        if (e.kind == SncEntry::Kind::inconclusive)
            snc_unresolved = true;
    }
    const bool growth_positive = rep.growth.fitted_c > pos_tol;

    if (snc_violated) {
        rep.diagnostics.push_back("necessary condition violated along a sampled direction");
        rep.verdict = SOCReport::Verdict::inconsistent;
        return rep;
    }
    if (rep.ssc.holds && !growth_positive && rep.growth.sample_count > 0) {
        rep.diagnostics.push_back("strict condition holds at sample resolution but the "
                                  "growth constant is not positive");
        rep.verdict = SOCReport::Verdict::inconsistent;
        return rep;
    }
    if (!rep.ssc.holds && growth_positive) {
        rep.diagnostics.push_back("growth constant positive but the strict condition "
                                  "fails along a sampled direction");
        rep.verdict = SOCReport::Verdict::inconsistent;
        return rep;
    }
    if (!rep.ssc.holds && !growth_positive) {
        rep.diagnostics.push_back("no quadratic growth: the strict condition fails and "
                                  "the sampler finds no positive constant");
        rep.verdict = SOCReport::Verdict::inconsistent;
        return rep;
    }
    if (snc_unresolved || !rep.ssc.notes.empty() || rep.growth.sample_count == 0) {
        rep.diagnostics.push_back("unresolved pieces prevent a definitive verdict");
        rep.verdict = SOCReport::Verdict::inconclusive;
        return rep;
    }
    rep.verdict = SOCReport::Verdict::no_gap_consistent;
    return rep;
}

} // namespace curvlab
