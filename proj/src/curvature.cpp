#include "curvlab/curvature.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace curvlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// entries-space gradient of delta -> pairing(phi, delta)
Eigen::VectorXd pairing_gradient(const Vector& phi) {
    if (phi.tag() == NormTag::euclidean)
        return phi.entries();
    return phi.entries().cwiseProduct(*phi.weights());
}

struct InnerProblem {
    const AdmissibleSet* C = nullptr;
    Vector shifted_base; // x + t h
    double cap = 0.0;    // norm bound on delta = y - x - t h
    double ftol = 0.0;
};

// alternate between the feasibility projection and the radius bound; the
// radius step shrinks toward the base point, which stays inside every cap
std::optional<Vector> restore(const InnerProblem& P, Vector delta) {
    double prev_res = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (int round = 0; round < 30; ++round) {
        const double n = delta.norm();
        if (n > P.cap)
            delta = n > 0 ? delta * (P.cap / n) : delta * 0.0;
        const Vector y = P.shifted_base + delta;
        const double res = feasibility_residual(*P.C, y);
        if (res <= P.ftol)
            return delta;
        // the radius bound and the feasibility projection fight each other
        // when their targets are disjoint; stop once progress dies
        if (res > 0.9 * prev_res) {
            if (++stalls >= 3)
                break;
        } else {
            stalls = 0;
        }
        prev_res = res;
        try {
            delta = project(*P.C, y) - P.shifted_base;
        } catch (const error&) {
            break;
        }
    }
    const double n = delta.norm();
    if (n <= P.cap * (1.0 + 1e-9) &&
        feasibility_residual(*P.C, P.shifted_base + delta) <= P.ftol)
        return delta;
    return std::nullopt;
}

struct InnerResult {
    bool feasible = false;
    bool ball_active = false;
    double value = 0.0; // min of pairing(phi, delta) over the probes
};

// Exact inner optimum for a scalar smooth constraint: minimize <c, delta>
// subject to G(b + delta) <= 0 and |delta| <= cap. Solves the stationarity
// systems of the candidate active sets by damped Newton; pure descent methods
// cannot discover the tangential slide along the boundary because the
// objective gradient has no component in that direction.
struct PolishResult {
    double value = 0.0;
    double norm = 0.0;
};

std::optional<PolishResult> kkt_polish(const LevelSetConstraint& lc, const InnerProblem& P,
                                       const Eigen::VectorXd& c, const Eigen::VectorXd& start) {
    if (P.shifted_base.tag() != NormTag::euclidean || lc.target.kind != ConvexSet::Kind::half_line_nonpos)
        return std::nullopt;
    const Eigen::Index n = P.shifted_base.size();
    const Eigen::VectorXd b = P.shifted_base.entries();
    auto G = [&](const Eigen::VectorXd& d) {
        return lc.value(P.shifted_base.like(b + d))[0];
    };
    auto g = [&](const Eigen::VectorXd& d) {
        return Eigen::VectorXd(lc.jacobian(P.shifted_base.like(b + d)).row(0).transpose());
    };
    auto H = [&](const Eigen::VectorXd& d) {
        Eigen::MatrixXd h(n, n);
        const Vector y = P.shifted_base.like(b + d);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
            ei[i] = 1.0;
            for (Eigen::Index j = 0; j <= i; ++j) {
                Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
                ej[j] = 1.0;
                h(i, j) = h(j, i) =
                    lc.hess_form(y, P.shifted_base.like(ei), P.shifted_base.like(ej))[0];
            }
        }
        return h;
    };

    const double cn = c.norm();
    std::optional<PolishResult> best;
    auto admit = [&](Eigen::VectorXd d) {
        double dn = d.norm();
        if (dn > P.cap * (1.0 + 1e-6))
            return;
        if (dn > P.cap && dn > 0) {
            d *= P.cap / dn; // shave solver roundoff off the radius bound
            dn = P.cap;
        }
        // feasibility polish along the constraint gradient
        for (int ps = 0; ps < 3; ++ps) {
            const double val = G(d);
            if (val <= 0)
                break;
            const Eigen::VectorXd gv = g(d);
            const double gs = gv.squaredNorm();
            if (gs == 0)
                return;
            d -= (val / gs) * gv;
        }
        if (G(d) > P.ftol || d.norm() > P.cap * (1.0 + 1e-6))
            return;
        const double v = c.dot(d);
        if (!best || v < best->value)
            best = PolishResult{v, d.norm()};
    };

    // the incoming search point, re-valued at machine feasibility so slack
    // within the acceptance tolerance cannot undercut an exact optimum
    admit(start);

    // ball face only
    if (cn > 0)
        admit(-(P.cap / cn) * c);

    // constraint surface, with and without the ball face; the ball equation
    // and its multiplier column are scaled by 1/cap so the residual tolerance
    // controls the radius overshoot relative to the cap, not absolutely
    for (int with_ball = 0; with_ball <= 1; ++with_ball) {
        if (with_ball && P.cap <= 0)
            break;
        Eigen::VectorXd d = start;
        if (d.norm() > P.cap && d.norm() > 0)
            d *= P.cap / d.norm();
        double mu = 0.0, nu = 0.0;
        {
            const Eigen::VectorXd g0 = g(d);
            if (g0.squaredNorm() > 0)
                mu = std::max(0.0, -c.dot(g0) / g0.squaredNorm());
        }
        const Eigen::Index m = n + 1 + with_ball;
        auto residual = [&](const Eigen::VectorXd& dv, double muv, double nuv) {
            Eigen::VectorXd F(m);
            F.head(n) = c + muv * g(dv);
            if (with_ball)
                F.head(n) += (nuv / P.cap) * dv;
            F[n] = G(dv);
            if (with_ball)
                F[n + 1] = 0.5 * (dv.squaredNorm() - P.cap * P.cap) / P.cap;
            return F;
        };
        double prev = std::numeric_limits<double>::infinity();
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            const Eigen::VectorXd gy = g(d);
            const Eigen::VectorXd F = residual(d, mu, nu);
            const double fn = F.norm();
            if (fn <= 1e-13 * (1.0 + cn)) {
                converged = true;
                break;
            }
            Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(m, m);
            Jm.topLeftCorner(n, n) = mu * H(d);
            if (with_ball)
                Jm.topLeftCorner(n, n) += (nu / P.cap) * Eigen::MatrixXd::Identity(n, n);
            Jm.block(0, n, n, 1) = gy;
            Jm.block(n, 0, 1, n) = gy.transpose();
            if (with_ball) {
                Jm.block(0, n + 1, n, 1) = d / P.cap;
                Jm.block(n + 1, 0, 1, n) = d.transpose() / P.cap;
            }
            const Eigen::VectorXd step = Jm.fullPivLu().solve(-F);
            if (!step.allFinite())
                break;
            double damp = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 25; ++ls) {
                const Eigen::VectorXd dn = d + damp * step.head(n);
                const double mun = mu + damp * step[n];
                const double nun = with_ball ? nu + damp * step[n + 1] : 0.0;
                if (residual(dn, mun, nun).norm() < fn) {
                    d = dn;
                    mu = mun;
                    nu = nun;
                    moved = true;
                    break;
                }
                damp *= 0.5;
            }
            if (!moved || std::abs(fn - prev) <= 1e-17 * (1.0 + fn))
                break;
            prev = fn;
        }
        if (converged && mu >= -1e-10 && nu >= -1e-10)
            admit(d);
    }
    return best;
}

InnerResult inner_solve(const InnerProblem& P, const Vector& phi, int restarts,
                        int iterations, unsigned seed) {
    const Eigen::VectorXd g = pairing_gradient(phi);
    const double gn = g.norm();
    InnerResult out;
    double best = std::numeric_limits<double>::infinity();
    double best_norm = 0.0;
    std::optional<Eigen::VectorXd> best_d;

    auto consider = [&](const std::optional<Vector>& d) {
        if (!d)
            return;
        const double v = pairing(phi, *d);
        if (v < best) {
            best = v;
            best_norm = d->norm();
            best_d = d->entries();
        }
        out.feasible = true;
    };

    const Eigen::Index n = P.shifted_base.size();
    for (int r = 0; r < restarts; ++r) {
        std::mt19937 rng(seed + 1000003u * static_cast<unsigned>(r));
        Eigen::VectorXd d0 = Eigen::VectorXd::Zero(n);
        if (r == 1 && gn > 0) {
            d0 = -(P.cap / gn) * g;
        } else if (r >= 2) {
            std::normal_distribution<double> gauss;
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (Eigen::Index i = 0; i < n; ++i)
                d0[i] = gauss(rng);
            const double dn = d0.norm();
            if (dn > 0)
                d0 *= u(rng) * P.cap / dn;
        }
        std::optional<Vector> d = restore(P, P.shifted_base.like(d0));
        consider(d);
        Vector cur = d ? *d : P.shifted_base.like(Eigen::VectorXd::Zero(n));
        if (gn == 0)
            continue;
        int failures = d ? 0 : 1;
        for (int it = 0; it < iterations; ++it) {
            const double step = 2.0 * P.cap * std::pow(0.55, it) / gn;
            const Vector trial = cur.like(cur.entries() - step * g);
            std::optional<Vector> d2 = restore(P, trial);
            consider(d2);
            if (d2) {
                cur = *d2;
                failures = 0;
            } else if (++failures >= 4 && !out.feasible) {
                break; // nothing reachable from this start
            }
        }
    }
    if (out.feasible && best_d) {
        if (const auto* lc = P.C->as<LevelSetConstraint>()) {
            // the polish value is authoritative when available: its point is
            // feasible to machine precision, while the search points carry
            // the acceptance slack, which the 2/t^2 scaling would amplify
            if (auto pol = kkt_polish(*lc, P, g, *best_d)) {
                best = pol->value;
                best_norm = pol->norm;
            }
        }
    }
    out.value = best;
    out.ball_active = out.feasible && P.cap > 0 && best_norm >= 0.98 * P.cap;
    return out;
}

enum class StepStatus { ok, active, empty, unbounded };

bool plateau(const std::vector<double>& q, const std::vector<StepStatus>& st, double rtol) {
    const size_t n = q.size();
    if (n < 5)
        return false;
    for (size_t i = n - 3; i < n; ++i)
        if (st[i] != StepStatus::ok || !std::isfinite(q[i]))
            return false;
    return std::abs(q[n - 1] - q[n - 2]) <= rtol * (1.0 + std::abs(q[n - 1])) &&
           std::abs(q[n - 2] - q[n - 3]) <= rtol * (1.0 + std::abs(q[n - 2]));
}

// mean log2 growth of |q| per step over the trailing monotone stretch,
// ignoring any saturation plateau at the end
double fit_divergence_rate(const std::vector<double>& q) {
    std::vector<double> mags;
    for (double v : q)
        if (std::isfinite(v) && std::abs(v) > 1e-12)
            mags.push_back(std::abs(v));
    while (mags.size() >= 2 &&
           std::abs(mags.back() / mags[mags.size() - 2] - 1.0) < 0.05)
        mags.pop_back();
    if (mags.size() < 2)
        return 0.0;
    size_t start = mags.size() - 1;
    while (start > 0 && mags[start] > mags[start - 1] && mags.size() - start < 9)
        --start;
    if (mags.size() - start < 2)
        return 0.0;
    double acc = 0.0;
    for (size_t i = start + 1; i < mags.size(); ++i)
        acc += std::log2(mags[i] / mags[i - 1]);
    return acc / static_cast<double>(mags.size() - 1 - start);
}

} // namespace

CurvatureValue CurvatureValue::finite_value(double v, std::string method) {
    CurvatureValue out;
    out.kind = Kind::finite;
    out.value = v;
    out.method = std::move(method);
    out.converged = true;
    return out;
}

CurvatureValue CurvatureValue::infinite(Kind k, std::string method) {
    CurvatureValue out;
    out.kind = k;
    out.method = std::move(method);
    return out;
}

CurvatureValue brute_force_curvature(const AdmissibleSet& C, const Vector& x,
                                     const Vector& phi, const Vector& h,
                                     const BruteForceOptions& opts) {
    const ConeQuery q(C, x, phi);
    CurvatureValue out;
    out.method = "brute_force";
    if (!tangent_cone_membership(q, h)) {
        out = CurvatureValue::infinite(CurvatureValue::Kind::plus_infinity, "brute_force");
        out.notes.push_back("direction outside the tangent cone: no feasible arcs");
        return out;
    }
    const double ftol = opts.feasibility_tol.value_or(default_feasibility_tol(C));
    const double hnorm = h.norm();
    const double radius = opts.radius_factor * hnorm;
    const double scale = (1.0 + phi.norm() * hnorm * hnorm);
    const double inf_threshold = 1e6 * scale;
    const double growth_floor = 10.0 * scale;

    if (hnorm == 0 && !is_convex(C)) {
        out.notes.push_back("zero direction on a nonconvex set: bounded probe only");
        out.ts.push_back(opts.t0);
        out.estimates.push_back(0.0);
        out.value = 0.0;
        return out; // converged stays false
    }

    // the acceptance slack leaks into the estimates scaled by 2 / t^2, so it
    // has to shrink with the step; the floor is what projections deliver
    const double slack_floor =
        2e-14 * (1.0 + x.entries().cwiseAbs().maxCoeff() + hnorm);

    // the radius bound lets the solver trade first-order moves of size
    // c t^2 for second-order gain, so estimates approach the limit like
    // q (1 + c t); with a halving schedule that linear error cancels in
    // the two-point extrapolation 2 q_k - q_{k-1}
    std::vector<double> extrapolated;
    std::vector<StepStatus> status;
    for (int k = 0; k <= opts.k_max; ++k) {
        const double t = opts.t0 * std::pow(2.0, -k);
        const double step_ftol = slack_floor + ftol * (t * t) / (opts.t0 * opts.t0);
        InnerProblem P{&C, x + h * t, 0.5 * t * t * radius, step_ftol};
        const unsigned seed = opts.seed + 7919u * static_cast<unsigned>(k);
        InnerResult res = inner_solve(P, phi, opts.restarts, opts.inner_iterations, seed);
        StepStatus st = StepStatus::ok;
        double estimate = kNaN;
        if (!res.feasible) {
            // widen the bound: a problem still empty under the relaxed radius
            // marks the step empty, otherwise the wide value extends the trail
            InnerProblem P2 = P;
            P2.cap = P.cap * opts.relax_factor;
            InnerResult res2 =
                inner_solve(P2, phi, opts.restarts, opts.inner_iterations, seed + 17u);
            if (!res2.feasible) {
                st = StepStatus::empty;
            } else {
                estimate = 2.0 * res2.value / (t * t);
                st = StepStatus::active;
                out.notes.push_back("radius bound widened at t=" + std::to_string(t));
            }
        } else {
            // the value under the pinned radius bound is the estimate; when
            // the bound binds at the optimum, a narrower probe separates a
            // genuine radius-driven blow-up from the benign boundary ride
            estimate = 2.0 * res.value / (t * t);
            if (res.ball_active) {
                InnerProblem Plo = P;
                Plo.cap = P.cap / opts.relax_factor;
                InnerResult rlo =
                    inner_solve(Plo, phi, opts.restarts, opts.inner_iterations, seed + 17u);
                const double qlo = rlo.feasible ? 2.0 * rlo.value / (t * t) : kNaN;
                if (k >= 2 && rlo.feasible && estimate < 0 &&
                    std::abs(estimate) >= 3.0 * std::abs(qlo) &&
                    std::abs(estimate) > growth_floor)
                    st = StepStatus::unbounded;
                else if (rlo.feasible &&
                         std::abs(estimate - qlo) <= 0.05 * (1.0 + std::abs(estimate)))
                    st = StepStatus::ok;
                else
                    st = StepStatus::active;
            }
            // while the radius bound still covers the whole first-order
            // displacement the estimates sit on a pre-asymptotic shelf; keep
            // them out of the plateau test
            if (st == StepStatus::ok && t * opts.radius_factor >= 2.0)
                st = StepStatus::active;
        }
        out.ts.push_back(t);
        out.estimates.push_back(estimate);
        status.push_back(st);
        const size_t m = out.estimates.size();
        if (m >= 2 && st == StepStatus::ok && status[m - 2] == StepStatus::ok &&
            std::isfinite(out.estimates[m - 2]))
            extrapolated.push_back(2.0 * estimate - out.estimates[m - 2]);
        else
            extrapolated.push_back(estimate);

        if (plateau(extrapolated, status, opts.rel_tol)) {
            out.converged = true;
            break;
        }
        const size_t n = status.size();
        if (n >= 2 && status[n - 1] == StepStatus::empty && status[n - 2] == StepStatus::empty)
            break;
        if (n >= 2 && status[n - 1] == StepStatus::unbounded &&
            status[n - 2] == StepStatus::unbounded)
            break;
    }

    const size_t n = status.size();
    if (n >= 2 && status[n - 1] == StepStatus::empty && status[n - 2] == StepStatus::empty) {
        const double rate = fit_divergence_rate(out.estimates);
        out.kind = CurvatureValue::Kind::plus_infinity;
        out.divergence_rate = rate;
        out.notes.push_back("no admissible second-order correction within the radius "
                            "bound at small steps");
        return out;
    }
    if (n >= 2 && status[n - 1] == StepStatus::unbounded &&
        status[n - 2] == StepStatus::unbounded) {
        out.kind = CurvatureValue::Kind::minus_infinity;
        out.divergence_rate = fit_divergence_rate(out.estimates);
        out.notes.push_back("estimate scales with the allowed radius: unbounded below");
        return out;
    }

    if (out.converged) {
        out.value = extrapolated.back();
        out.notes.push_back("limit extrapolated from consecutive steps");
        return out;
    }

    // threshold and sustained-growth classification on the recorded estimates
    std::vector<double> clean;
    for (double v : out.estimates)
        if (std::isfinite(v))
            clean.push_back(v);
    if (!clean.empty()) {
        const double last = clean.back();
        auto trailing_monotone = [&](int m, int sign) {
            if (static_cast<int>(clean.size()) < m + 1)
                return false;
            for (size_t i = clean.size() - static_cast<size_t>(m); i < clean.size(); ++i)
                if (sign * (clean[i] - clean[i - 1]) <= 0)
                    return false;
            return true;
        };
        const bool up4 = trailing_monotone(4, +1);
        const bool down4 = trailing_monotone(4, -1);
        if (last > inf_threshold && up4) {
            out.kind = CurvatureValue::Kind::plus_infinity;
            out.divergence_rate = fit_divergence_rate(clean);
            out.notes.push_back("estimates exceeded the explosion threshold");
            return out;
        }
        if (last < -inf_threshold && down4) {
            out.kind = CurvatureValue::Kind::minus_infinity;
            out.divergence_rate = fit_divergence_rate(clean);
            out.notes.push_back("estimates fell beyond the explosion threshold");
            return out;
        }
        if (clean.size() >= 7) {
            const double ref = clean[clean.size() - 7];
            if (trailing_monotone(6, +1) && last > growth_floor && ref > 0 &&
                last >= 2.5 * ref) {
                out.kind = CurvatureValue::Kind::plus_infinity;
                out.divergence_rate = fit_divergence_rate(clean);
                out.notes.push_back("sustained geometric growth across the step schedule");
                return out;
            }
            if (trailing_monotone(6, -1) && last < -growth_floor && ref < 0 &&
                last <= 2.5 * ref) {
                out.kind = CurvatureValue::Kind::minus_infinity;
                out.divergence_rate = fit_divergence_rate(clean);
                out.notes.push_back("sustained geometric decay across the step schedule");
                return out;
            }
        }
        out.value = last;
        out.notes.push_back("schedule exhausted without plateau or classification");
    } else {
        out.kind = CurvatureValue::Kind::plus_infinity;
        out.notes.push_back("inner problem empty at every step");
    }
    return out;
}

CurvatureValue cone_curvature(const ConvexSet& K, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& phi_K, const Eigen::VectorXd& d,
                              double tol) {
    if (!cone_normal_contains(K, z, -phi_K, std::max(tol, 1e-9) * (1.0 + phi_K.norm())))
        throw domain_error("cone curvature needs a functional in the polar normal cone");
    if (!cone_tangent_contains(K, z, d, 1e-9 * (1.0 + d.cwiseAbs().maxCoeff()))) {
        auto out = CurvatureValue::infinite(CurvatureValue::Kind::plus_infinity, "cone_exact");
        out.notes.push_back("direction outside the tangent cone");
        return out;
    }
    const double pay = phi_K.dot(d);
    const double crit_tol = tol * (1.0 + phi_K.norm()) * (1.0 + d.norm());
    if (std::abs(pay) > crit_tol) {
        // scaling the direction inside the tangent cone drives the value down
        auto out = CurvatureValue::infinite(CurvatureValue::Kind::minus_infinity, "cone_exact");
        out.notes.push_back("first-order pay along the direction");
        return out;
    }
    switch (K.kind) {
    case ConvexSet::Kind::half_line_nonpos:
    case ConvexSet::Kind::box:
    case ConvexSet::Kind::polyhedral:
        return CurvatureValue::finite_value(0.0, "cone_exact");
    case ConvexSet::Kind::unit_ball: {
        if (z.norm() < 1.0 - 1e-9)
            return CurvatureValue::finite_value(0.0, "cone_exact");
        const double mu = -phi_K.dot(z) / z.squaredNorm();
        // boundary contribution of the curved constraint
        const double flat = (d - d.dot(z) / z.squaredNorm() * z).squaredNorm();
        return CurvatureValue::finite_value(mu * flat, "cone_exact");
    }
    }
    throw unsupported_error("cone curvature: unknown target kind");
}

CurvatureValue pullback_curvature(const LevelSetConstraint& c, const Vector& x,
                                  const Vector& phi, const Vector& h) {
    auto lam = normal_multiplier(c, x, phi);
    if (!lam)
        throw domain_error("no multiplier certifies the functional for the pullback");
    const Eigen::VectorXd z = c.value(x);
    const Eigen::MatrixXd J = c.jacobian(x);
    const Eigen::VectorXd d = J * h.entries();
    CurvatureValue inner = cone_curvature(c.target, z, -*lam, d);
    if (!inner.finite()) {
        inner.method = "pullback";
        return inner;
    }
    const double correction = lam->dot(c.hess_form(x, h, h));
    CurvatureValue out = CurvatureValue::finite_value(inner.value + correction, "pullback");
    out.notes = std::move(inner.notes);
    return out;
}

CurvatureValue directional_curvature(const AdmissibleSet& C, const Vector& x,
                                     const Vector& phi, const Vector& h,
                                     const CurvatureOptions& opts) {
    if (opts.force_brute)
        return brute_force_curvature(C, x, phi, h, opts.brute);
    const ConeQuery q(C, x, phi);
    if (!tangent_cone_membership(q, h)) {
        auto out =
            CurvatureValue::infinite(CurvatureValue::Kind::plus_infinity, "tangent_test");
        out.notes.push_back("direction outside the tangent cone: no feasible arcs");
        return out;
    }
    const double pay = pairing(phi, h);
    const bool critical =
        std::abs(pay) <= 1e-8 * (1.0 + phi.norm()) * (1.0 + h.norm());
    if (C.is<BoxSet>() || C.is<BangBangBox>() || C.is<PolyhedronSet>()) {
        if (critical)
            return CurvatureValue::finite_value(0.0, "polyhedral_exact");
        // tangent directions are radial here, so rescaled arcs pay first order
        auto out =
            CurvatureValue::infinite(CurvatureValue::Kind::minus_infinity, "polyhedral_exact");
        out.notes.push_back("first-order pay along the direction");
        return out;
    }
    if (const auto* lc = C.as<LevelSetConstraint>()) {
        if (critical)
            return pullback_curvature(*lc, x, phi, h);
        return brute_force_curvature(C, x, phi, h, opts.brute);
    }
    return brute_force_curvature(C, x, phi, h, opts.brute);
}

MrcReport mrc_probe(const AdmissibleSet& C, const Vector& x, const Vector& phi,
                    const Vector& h, const BruteForceOptions& opts) {
    MrcReport rep;
    rep.base = brute_force_curvature(C, x, phi, h, opts);
    BruteForceOptions wide = opts;
    wide.radius_factor *= wide.relax_factor;
    // the wider radius slows the approach by a factor of relax_factor in t,
    // so give the schedule the matching number of extra halvings
    wide.k_max += static_cast<int>(std::ceil(std::log2(wide.relax_factor))) + 1;
    rep.relaxed = brute_force_curvature(C, x, phi, h, wide);
    if (rep.base.kind != rep.relaxed.kind) {
        rep.consistent = false;
        rep.rel_gap = std::numeric_limits<double>::infinity();
        return rep;
    }
    if (!rep.base.finite()) {
        rep.consistent = true;
        return rep;
    }
    rep.rel_gap = std::abs(rep.base.value - rep.relaxed.value) /
                  (1.0 + std::abs(rep.base.value));
    rep.consistent = rep.rel_gap <= 1e-2;
    return rep;
}

} // namespace curvlab
