#include "curvlab/sets.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace curvlab {

// ===== ConvexSet ===========================================================

ConvexSet ConvexSet::half_line_nonpos() {
    ConvexSet k;
    k.kind = Kind::half_line_nonpos;
    k.dim = 1;
    return k;
}

ConvexSet ConvexSet::box(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    if (lower.size() != upper.size() || lower.size() == 0)
        throw structural_error("box bounds length mismatch");
    if ((lower.array() > upper.array()).any())
        throw structural_error("box has lower > upper");
    ConvexSet k;
    k.kind = Kind::box;
    k.dim = static_cast<int>(lower.size());
    k.lower = std::move(lower);
    k.upper = std::move(upper);
    return k;
}

ConvexSet ConvexSet::unit_ball(int dim) {
    if (dim < 1)
        throw structural_error("unit ball needs dim >= 1");
    ConvexSet k;
    k.kind = Kind::unit_ball;
    k.dim = dim;
    return k;
}

ConvexSet ConvexSet::polyhedral(Eigen::MatrixXd A, Eigen::VectorXd b) {
    if (A.rows() != b.size() || A.rows() == 0)
        throw structural_error("polyhedral rows do not match offsets");
    ConvexSet k;
    k.kind = Kind::polyhedral;
    k.dim = static_cast<int>(A.cols());
    k.A = std::move(A);
    k.b = std::move(b);
    return k;
}

double ConvexSet::residual(const Eigen::VectorXd& z) const {
    if (z.size() != dim)
        throw structural_error("convex set residual: dimension mismatch");
    switch (kind) {
    case Kind::half_line_nonpos:
        return std::max(0.0, z[0]);
    case Kind::box:
        return std::max(0.0, std::max((lower - z).maxCoeff(), (z - upper).maxCoeff()));
    case Kind::unit_ball:
        return std::max(0.0, z.norm() - 1.0);
    case Kind::polyhedral:
        return std::max(0.0, (A * z - b).maxCoeff());
    }
    return 0.0;
}

// ===== constructors ========================================================

AdmissibleSet make_box(Vector lower, Vector upper) {
    require_same_space(lower, upper, "make_box");
    if ((lower.entries().array() > upper.entries().array()).any())
        throw structural_error("box has lower > upper");
    return AdmissibleSet{BoxSet{std::move(lower), std::move(upper)}};
}

AdmissibleSet make_polyhedron(Eigen::MatrixXd A, Eigen::VectorXd b) {
    if (A.rows() != b.size() || A.rows() == 0)
        throw structural_error("polyhedron rows do not match offsets");
    return AdmissibleSet{PolyhedronSet{std::move(A), std::move(b)}};
}

AdmissibleSet make_level_set(LevelSetConstraint c) {
    if (!c.value || !c.jacobian || !c.hess_form)
        throw structural_error("level set constraint callbacks incomplete");
    return AdmissibleSet{std::move(c)};
}

AdmissibleSet make_power_epigraph(double alpha, PowerEpigraph::Side side) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw structural_error("power epigraph exponent must lie in (1, 2)");
    return AdmissibleSet{PowerEpigraph{alpha, side}};
}

AdmissibleSet make_bangbang(Grid grid) {
    return AdmissibleSet{BangBangBox{std::move(grid)}};
}

// ===== feasibility =========================================================

double default_feasibility_tol(const AdmissibleSet& C) {
    return C.is<BangBangBox>() ? 1e-8 : 1e-10;
}

double feasibility_residual(const AdmissibleSet& C, const Vector& x) {
    if (const auto* s = C.as<BoxSet>()) {
        require_same_space(x, s->lower, "feasibility_residual");
        const double lo = (s->lower.entries() - x.entries()).maxCoeff();
        const double hi = (x.entries() - s->upper.entries()).maxCoeff();
        return std::max(0.0, std::max(lo, hi));
    }
    if (const auto* s = C.as<PolyhedronSet>()) {
        if (x.size() != s->A.cols())
            throw structural_error("polyhedron dimension mismatch");
        return std::max(0.0, (s->A * x.entries() - s->b).maxCoeff());
    }
    if (const auto* s = C.as<LevelSetConstraint>())
        return s->target.residual(s->value(x));
    if (const auto* s = C.as<PowerEpigraph>()) {
        if (x.size() != 2)
            throw structural_error("power epigraph lives in the plane");
        const double curve = std::pow(std::abs(x[0]), s->alpha);
        return s->side == PowerEpigraph::Side::above ? std::max(0.0, curve - x[1])
                                                     : std::max(0.0, x[1] - curve);
    }
    if (const auto* s = C.as<BangBangBox>()) {
        if (x.size() != s->grid.count())
            throw structural_error("control vector does not match the grid");
        return std::max(0.0, x.entries().cwiseAbs().maxCoeff() - 1.0);
    }
    throw unsupported_error("feasibility_residual: unknown variant");
}

bool membership(const AdmissibleSet& C, const Vector& x, double tol) {
    if (!(tol >= 0.0))
        throw structural_error("membership tolerance must be nonnegative");
    return feasibility_residual(C, x) <= tol;
}

bool membership(const AdmissibleSet& C, const Vector& x) {
    return membership(C, x, default_feasibility_tol(C));
}

bool is_convex(const AdmissibleSet& C) {
    if (const auto* s = C.as<PowerEpigraph>())
        return s->side == PowerEpigraph::Side::above;
    if (const auto* s = C.as<LevelSetConstraint>())
        return s->convex_hint;
    return true;
}

// ===== nonnegative least squares ===========================================

double conic_hull_residual(const Eigen::MatrixXd& At, const Eigen::VectorXd& phi,
                           Eigen::VectorXd* mu_out) {
    const Eigen::Index n = At.cols();
    if (At.rows() != phi.size())
        throw structural_error("conic_hull_residual: shape mismatch");

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> in_p(static_cast<size_t>(n), false);
    const double wtol = 1e-12 * (1.0 + phi.cwiseAbs().maxCoeff());

    auto solve_on = [&](const std::vector<int>& idx) {
        Eigen::MatrixXd Ap(At.rows(), static_cast<Eigen::Index>(idx.size()));
        for (size_t j = 0; j < idx.size(); ++j)
            Ap.col(static_cast<Eigen::Index>(j)) = At.col(idx[j]);
        Eigen::VectorXd z =
            Ap.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(phi);
        return z;
    };

    for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer) {
        Eigen::VectorXd w = At.transpose() * (phi - At * x);
        int j = -1;
        double best = wtol;
        for (Eigen::Index i = 0; i < n; ++i)
            if (!in_p[static_cast<size_t>(i)] && w[i] > best) {
                best = w[i];
                j = static_cast<int>(i);
            }
        if (j < 0)
            break;
        in_p[static_cast<size_t>(j)] = true;

        for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner) {
            std::vector<int> idx;
            for (Eigen::Index i = 0; i < n; ++i)
                if (in_p[static_cast<size_t>(i)])
                    idx.push_back(static_cast<int>(i));
            if (idx.empty())
                break;
            Eigen::VectorXd z = solve_on(idx);
            bool all_pos = true;
            for (size_t k = 0; k < idx.size(); ++k)
                all_pos = all_pos && z[static_cast<Eigen::Index>(k)] > 0.0;
            if (all_pos) {
                x.setZero();
                for (size_t k = 0; k < idx.size(); ++k)
                    x[idx[k]] = z[static_cast<Eigen::Index>(k)];
                break;
            }
            double alpha = 1.0;
            for (size_t k = 0; k < idx.size(); ++k) {
                const double zk = z[static_cast<Eigen::Index>(k)];
                const double xk = x[idx[k]];
                if (zk <= 0.0 && xk - zk > 0.0)
                    alpha = std::min(alpha, xk / (xk - zk));
            }
            for (size_t k = 0; k < idx.size(); ++k) {
                const double zk = z[static_cast<Eigen::Index>(k)];
                double& xk = x.coeffRef(idx[k]);
                xk += alpha * (zk - xk);
                if (xk <= 1e-14) {
                    xk = 0.0;
                    in_p[static_cast<size_t>(idx[k])] = false;
                }
            }
        }
    }
    if (mu_out)
        *mu_out = x;
    return (phi - At * x).norm();
}

// ===== polyhedron projection ==============================================

namespace {

void subsets_of_size(int m, int k, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> pick(static_cast<size_t>(k));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == k) {
            visit(pick);
            return;
        }
        for (int i = start; i < m; ++i) {
            pick[static_cast<size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
}

} // namespace

Eigen::VectorXd project_polyhedron(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                   const Eigen::VectorXd& p) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    if (m > 18)
        throw unsupported_error("polyhedron projection limited to desk-scale row counts");
    const double scale = 1.0 + p.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
    const double tol = 1e-11 * scale;

    if (((A * p - b).array() <= tol).all())
        return p;

    Eigen::VectorXd best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= std::min(m, n); ++k) {
        bool found_at_k = false;
        subsets_of_size(m, k, [&](const std::vector<int>& S) {
            Eigen::MatrixXd As(k, n);
            Eigen::VectorXd bs(k);
            for (int j = 0; j < k; ++j) {
                As.row(j) = A.row(S[static_cast<size_t>(j)]);
                bs[j] = b[S[static_cast<size_t>(j)]];
            }
            Eigen::MatrixXd G = As * As.transpose();
            Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
            if (lu.rank() < k)
                return;
            Eigen::VectorXd mu = lu.solve(As * p - bs);
            if ((mu.array() < -tol).any())
                return;
            Eigen::VectorXd y = p - As.transpose() * mu;
            if (((A * y - b).array() > tol).any())
                return;
            const double d = (y - p).norm();
            if (d < best_d) {
                best_d = d;
                best = y;
                found_at_k = true;
            }
        });
        if (found_at_k)
            break; // KKT point of a convex projection is unique
    }
    if (best.size() == 0)
        throw domain_error("polyhedron projection found no KKT point (empty set?)");
    return best;
}

// ===== power epigraph curve search ========================================

namespace {

// closest point on the curve s -> (s, |s|^alpha) to p, squared distance
struct CurveHit {
    double s;
    double d2;
};

CurveHit closest_on_branch(double alpha, const Eigen::Vector2d& p, double sign) {
    auto d2 = [&](double s) {
        const double x = sign * s;
        const double dx = x - p[0];
        const double dy = std::pow(s, alpha) - p[1];
        return dx * dx + dy * dy;
    };
    const double S = std::abs(p[0]) + std::pow(std::max(0.0, p[1]) + 1.0, 1.0 / alpha) + 1.0;
    const int coarse = 128;
    double bs = 0.0, bv = d2(0.0);
    for (int i = 1; i <= coarse; ++i) {
        const double s = S * i / coarse;
        const double v = d2(s);
        if (v < bv) {
            bv = v;
            bs = s;
        }
    }
    double lo = std::max(0.0, bs - S / coarse);
    double hi = std::min(S, bs + S / coarse);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, c = hi;
    double x1 = c - gr * (c - a), x2 = a + gr * (c - a);
    double f1 = d2(x1), f2 = d2(x2);
    for (int it = 0; it < 120 && (c - a) > 1e-14 * (1.0 + S); ++it) {
        if (f1 < f2) {
            c = x2;
            x2 = x1;
            f2 = f1;
            x1 = c - gr * (c - a);
            f1 = d2(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (c - a);
            f2 = d2(x2);
        }
    }
    const double s = 0.5 * (a + c);
    return {s, d2(s)};
}

Eigen::Vector2d closest_on_curve(double alpha, const Eigen::Vector2d& p) {
    const CurveHit plus = closest_on_branch(alpha, p, +1.0);
    const CurveHit minus = closest_on_branch(alpha, p, -1.0);
    const CurveHit& h = plus.d2 <= minus.d2 ? plus : minus;
    const double sign = plus.d2 <= minus.d2 ? +1.0 : -1.0;
    return {sign * h.s, std::pow(h.s, alpha)};
}

// ===== scalar level set projection (Newton on the KKT system) =============

Eigen::VectorXd project_scalar_level_set(const LevelSetConstraint& c, const Vector& xref,
                                         const Eigen::VectorXd& p) {
    const Eigen::Index n = p.size();
    auto G = [&](const Eigen::VectorXd& y) { return c.value(xref.like(y))[0]; };
    auto g = [&](const Eigen::VectorXd& y) {
        return Eigen::VectorXd(c.jacobian(xref.like(y)).row(0).transpose());
    };
    auto H = [&](const Eigen::VectorXd& y) {
        Eigen::MatrixXd h(n, n);
        const Vector yy = xref.like(y);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd ei = Eigen::VectorXd::Zero(n);
            ei[i] = 1.0;
            const Vector vei = xref.like(ei);
            for (Eigen::Index j = 0; j <= i; ++j) {
                Eigen::VectorXd ej = Eigen::VectorXd::Zero(n);
                ej[j] = 1.0;
                h(i, j) = h(j, i) = c.hess_form(yy, vei, xref.like(ej))[0];
            }
        }
        return h;
    };

    Eigen::VectorXd y = p;
    const Eigen::VectorXd g0 = g(p);
    const double gn0 = g0.squaredNorm();
    double mu = gn0 > 0 ? std::max(0.0, G(p) / gn0) : 0.0;
    const double target = 1e-15 * (1.0 + p.norm());
    const double accept = 1e-12 * (1.0 + p.norm());
    Eigen::VectorXd best_y = p;
    double best_fn = std::numeric_limits<double>::infinity();

    // pure feasibility steps along the constraint gradient drive the
    // remaining violation to rounding level without moving the point
    auto polish = [&](Eigen::VectorXd v) {
        for (int ps = 0; ps < 3; ++ps) {
            const Eigen::VectorXd gv = g(v);
            const double gn = gv.squaredNorm();
            const double val = G(v);
            if (gn == 0 || val <= 0)
                break;
            v -= (val / gn) * gv;
        }
        return v;
    };

    for (int it = 0; it < 80; ++it) {
        const Eigen::VectorXd gy = g(y);
        Eigen::VectorXd F(n + 1);
        F.head(n) = y - p + mu * gy;
        F[n] = G(y);
        if (F.norm() < best_fn) {
            best_fn = F.norm();
            best_y = y;
        }
        if (F.norm() <= target)
            return polish(y);
        Eigen::MatrixXd Jm(n + 1, n + 1);
        Jm.setZero();
        Jm.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n) + mu * H(y);
        Jm.topRightCorner(n, 1) = gy;
        Jm.bottomLeftCorner(1, n) = gy.transpose();
        Eigen::VectorXd step = Jm.fullPivLu().solve(-F);
        double damp = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
            Eigen::VectorXd yn = y + damp * step.head(n);
            const double mun = mu + damp * step[n];
            Eigen::VectorXd Fn(n + 1);
            Fn.head(n) = yn - p + mun * g(yn);
            Fn[n] = G(yn);
            if (Fn.norm() < F.norm()) {
                y = yn;
                mu = mun;
                break;
            }
            damp *= 0.5;
            if (ls == 29) {
                if (best_fn <= accept)
                    return polish(best_y);
                throw unsupported_error("level set projection did not converge");
            }
        }
    }
    if (best_fn <= accept)
        return polish(best_y);
    throw unsupported_error("level set projection did not converge");
}

} // namespace

// ===== distance / projection ==============================================

Vector project(const AdmissibleSet& C, const Vector& x) {
    if (const auto* s = C.as<BoxSet>()) {
        require_same_space(x, s->lower, "project");
        return x.like(
            x.entries().cwiseMax(s->lower.entries()).cwiseMin(s->upper.entries()));
    }
    if (const auto* s = C.as<BangBangBox>()) {
        if (x.size() != s->grid.count())
            throw structural_error("control vector does not match the grid");
        return x.like(x.entries().cwiseMax(-1.0).cwiseMin(1.0));
    }
    if (const auto* s = C.as<PolyhedronSet>()) {
        if (x.tag() != NormTag::euclidean)
            throw unsupported_error("polyhedron projection needs the euclidean norm");
        return x.like(project_polyhedron(s->A, s->b, x.entries()));
    }
    if (const auto* s = C.as<PowerEpigraph>()) {
        if (feasibility_residual(C, x) == 0.0)
            return x;
        Eigen::Vector2d p(x[0], x[1]);
        Eigen::Vector2d q = closest_on_curve(s->alpha, p);
        return x.like(Eigen::VectorXd(q));
    }
    if (const auto* s = C.as<LevelSetConstraint>()) {
        if (s->target.kind != ConvexSet::Kind::half_line_nonpos)
            throw unsupported_error("projection only for scalar level sets");
        if (x.tag() != NormTag::euclidean)
            throw unsupported_error("level set projection needs the euclidean norm");
        if (feasibility_residual(C, x) == 0.0)
            return x;
        return x.like(project_scalar_level_set(*s, x, x.entries()));
    }
    throw unsupported_error("project: unknown variant");
}

double distance(const AdmissibleSet& C, const Vector& x) {
    if (const auto* s = C.as<BoxSet>()) {
        require_same_space(x, s->lower, "distance");
        Eigen::VectorXd gap = (s->lower.entries() - x.entries())
                                  .cwiseMax(x.entries() - s->upper.entries())
                                  .cwiseMax(0.0);
        return x.like(gap).norm();
    }
    if (const auto* s = C.as<BangBangBox>()) {
        (void)s;
        Eigen::VectorXd gap = (x.entries().cwiseAbs().array() - 1.0).max(0.0).matrix();
        return x.like(gap).norm();
    }
    const Vector p = project(C, x);
    return (x - p).norm();
}

} // namespace curvlab
