#include "curvlab/cones.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace curvlab {

namespace {

enum class Act { interior, lower, upper, pinned };

std::vector<Act> box_activity(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const Eigen::VectorXd& x, double tol) {
    std::vector<Act> a(static_cast<size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double s = tol * (1.0 + std::abs(lower[i]) + std::abs(upper[i]));
        const bool lo = x[i] <= lower[i] + s;
        const bool hi = x[i] >= upper[i] - s;
        a[static_cast<size_t>(i)] =
            lo && hi ? Act::pinned : (lo ? Act::lower : (hi ? Act::upper : Act::interior));
    }
    return a;
}

double entry_scale(const Vector& v) {
    return v.size() == 0 ? 1.0 : 1.0 + v.entries().cwiseAbs().maxCoeff();
}

// gradient of the defining inequality g <= 0 of a power epigraph at a
// boundary point with x1 != 0
Eigen::Vector2d epigraph_row(const PowerEpigraph& s, const Eigen::VectorXd& x) {
    const double slope = s.alpha * std::pow(std::abs(x[0]), s.alpha - 1.0) *
                         (x[0] >= 0 ? 1.0 : -1.0);
    if (s.side == PowerEpigraph::Side::above)
        return {slope, -1.0}; // g = |x1|^a - x2
    return {-slope, 1.0};     // g = x2 - |x1|^a
}

enum class EpiPlace { interior, origin, boundary };

EpiPlace epigraph_place(const PowerEpigraph& s, const Eigen::VectorXd& x, double tol) {
    const double curve = std::pow(std::abs(x[0]), s.alpha);
    const double slack =
        s.side == PowerEpigraph::Side::above ? x[1] - curve : curve - x[1];
    if (slack > tol)
        return EpiPlace::interior;
    if (std::abs(x[0]) <= tol)
        return EpiPlace::origin;
    return EpiPlace::boundary;
}

// Rows R with T_C(x) = { h : R h <= 0 } for the analytic small-n variants.
// Not used for grid-sized boxes, which keep a componentwise fast path.
Eigen::MatrixXd tangent_rows(const AdmissibleSet& C, const Vector& x, double tol) {
    if (const auto* s = C.as<PolyhedronSet>()) {
        const Eigen::VectorXd slack = s->b - s->A * x.entries();
        std::vector<int> act;
        for (Eigen::Index i = 0; i < slack.size(); ++i)
            if (slack[i] <= tol * (1.0 + std::abs(s->b[i])))
                act.push_back(static_cast<int>(i));
        Eigen::MatrixXd R(static_cast<Eigen::Index>(act.size()), s->A.cols());
        for (size_t k = 0; k < act.size(); ++k)
            R.row(static_cast<Eigen::Index>(k)) = s->A.row(act[k]);
        return R;
    }
    if (const auto* s = C.as<BoxSet>()) {
        const auto act = box_activity(s->lower.entries(), s->upper.entries(), x.entries(), tol);
        std::vector<Eigen::VectorXd> rows;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
            if (act[static_cast<size_t>(i)] == Act::lower ||
                act[static_cast<size_t>(i)] == Act::pinned) {
                e[i] = -1.0;
                rows.push_back(e);
            }
            if (act[static_cast<size_t>(i)] == Act::upper ||
                act[static_cast<size_t>(i)] == Act::pinned) {
                e[i] = 1.0;
                rows.push_back(e);
            }
        }
        Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), x.size());
        for (size_t k = 0; k < rows.size(); ++k)
            R.row(static_cast<Eigen::Index>(k)) = rows[k];
        return R;
    }
    if (const auto* s = C.as<PowerEpigraph>()) {
        Eigen::MatrixXd R(0, 2);
        switch (epigraph_place(*s, x.entries(), tol)) {
        case EpiPlace::interior:
            return R;
        case EpiPlace::origin:
            R.resize(1, 2);
            R << 0.0, (s->side == PowerEpigraph::Side::above ? -1.0 : 1.0);
            return R;
        case EpiPlace::boundary:
            R.resize(1, 2);
            R.row(0) = epigraph_row(*s, x.entries());
            return R;
        }
    }
    if (const auto* s = C.as<LevelSetConstraint>()) {
        if (!s->zkcq_asserted)
            throw assumption_error(
                "level set cone query without an asserted constraint qualification");
        if (x.tag() != NormTag::euclidean)
            throw unsupported_error("level set cones need euclidean vectors");
        const Eigen::VectorXd z = s->value(x);
        const Eigen::MatrixXd J = s->jacobian(x);
        const ConvexSet& K = s->target;
        std::vector<Eigen::VectorXd> rows;
        switch (K.kind) {
        case ConvexSet::Kind::half_line_nonpos:
            if (z[0] >= -tol)
                rows.push_back(J.row(0).transpose());
            break;
        case ConvexSet::Kind::box: {
            const auto act = box_activity(K.lower, K.upper, z, tol);
            for (int i = 0; i < K.dim; ++i) {
                if (act[static_cast<size_t>(i)] == Act::upper ||
                    act[static_cast<size_t>(i)] == Act::pinned)
                    rows.push_back(J.row(i).transpose());
                if (act[static_cast<size_t>(i)] == Act::lower ||
                    act[static_cast<size_t>(i)] == Act::pinned)
                    rows.push_back(-J.row(i).transpose());
            }
            break;
        }
        case ConvexSet::Kind::polyhedral: {
            const Eigen::VectorXd slack = K.b - K.A * z;
            for (Eigen::Index i = 0; i < slack.size(); ++i)
                if (slack[i] <= tol * (1.0 + std::abs(K.b[i])))
                    rows.push_back((K.A.row(i) * J).transpose());
            break;
        }
        case ConvexSet::Kind::unit_ball:
            if (z.norm() >= 1.0 - tol)
                rows.push_back((z.transpose() * J).transpose());
            break;
        }
        Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), x.size());
        for (size_t k = 0; k < rows.size(); ++k)
            R.row(static_cast<Eigen::Index>(k)) = rows[k];
        return R;
    }
    throw unsupported_error("tangent_rows: variant not handled");
}

bool box_like_tangent(const std::vector<Act>& act, const Eigen::VectorXd& h, double htol) {
    for (size_t i = 0; i < act.size(); ++i) {
        const double hi = h[static_cast<Eigen::Index>(i)];
        switch (act[i]) {
        case Act::interior:
            break;
        case Act::lower:
            if (hi < -htol)
                return false;
            break;
        case Act::upper:
            if (hi > htol)
                return false;
            break;
        case Act::pinned:
            if (std::abs(hi) > htol)
                return false;
            break;
        }
    }
    return true;
}

bool box_like_normal(const std::vector<Act>& act, const Eigen::VectorXd& phi, double ntol) {
    for (size_t i = 0; i < act.size(); ++i) {
        const double p = phi[static_cast<Eigen::Index>(i)];
        switch (act[i]) {
        case Act::interior:
            if (std::abs(p) > ntol)
                return false;
            break;
        case Act::lower:
            if (p > ntol)
                return false;
            break;
        case Act::upper:
            if (p < -ntol)
                return false;
            break;
        case Act::pinned:
            break;
        }
    }
    return true;
}

std::optional<std::vector<Act>> box_like_activity(const AdmissibleSet& C, const Vector& x,
                                                  double tol) {
    if (const auto* s = C.as<BoxSet>())
        return box_activity(s->lower.entries(), s->upper.entries(), x.entries(), tol);
    if (C.is<BangBangBox>()) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.size());
        return box_activity(-ones, ones, x.entries(), tol);
    }
    return std::nullopt;
}

} // namespace

ConeQuery::ConeQuery(const AdmissibleSet& C, Vector base_point)
    : set(&C), base(std::move(base_point)) {
    if (!membership(C, base, default_feasibility_tol(C)))
        throw structural_error("cone query at an infeasible base point");
}

ConeQuery::ConeQuery(const AdmissibleSet& C, Vector base_point, Vector phi)
    : ConeQuery(C, std::move(base_point)) {
    functional = std::move(phi);
    if (!minus_normal_cone_membership(*this, *functional))
        throw domain_error("stored functional is not in -N_C(x)");
}

bool tangent_cone_membership(const ConeQuery& q, const Vector& h) {
    require_same_space(q.base, h, "tangent_cone_membership");
    const double htol = 1e-11 * entry_scale(h);
    if (auto act = box_like_activity(*q.set, q.base, q.tol))
        return box_like_tangent(*act, h.entries(), htol);
    const Eigen::MatrixXd R = tangent_rows(*q.set, q.base, q.tol);
    if (R.rows() == 0)
        return true;
    const double rscale = 1.0 + R.cwiseAbs().maxCoeff();
    return ((R * h.entries()).array() <= htol * rscale).all();
}

bool normal_cone_membership(const ConeQuery& q, const Vector& phi) {
    require_same_space(q.base, phi, "normal_cone_membership");
    const double ntol = 1e-9 * entry_scale(phi);
    if (auto act = box_like_activity(*q.set, q.base, q.tol))
        return box_like_normal(*act, phi.entries(), ntol);
    if (const auto* s = q.set->as<LevelSetConstraint>())
        return normal_multiplier(*s, q.base, phi * -1.0).has_value();
    const Eigen::MatrixXd R = tangent_rows(*q.set, q.base, q.tol);
    if (R.rows() == 0)
        return phi.entries().cwiseAbs().maxCoeff() <= ntol;
    // phi must be a nonnegative combination of the active rows
    return conic_hull_residual(R.transpose(), phi.entries()) <= ntol * std::sqrt(phi.size());
}

bool minus_normal_cone_membership(const ConeQuery& q, const Vector& phi) {
    return normal_cone_membership(q, phi * -1.0);
}

bool radial_cone_membership(const ConeQuery& q, const Vector& h) {
    require_same_space(q.base, h, "radial_cone_membership");
    const double htol = 1e-11 * entry_scale(h);
    if (auto act = box_like_activity(*q.set, q.base, q.tol))
        return box_like_tangent(*act, h.entries(), htol); // polyhedral: radial == tangent
    if (q.set->is<PolyhedronSet>())
        return tangent_cone_membership(q, h);
    if (const auto* s = q.set->as<PowerEpigraph>()) {
        const Eigen::VectorXd& x = q.base.entries();
        switch (epigraph_place(*s, x, q.tol)) {
        case EpiPlace::interior:
            return true;
        case EpiPlace::origin:
            if (s->side == PowerEpigraph::Side::below)
                return h[1] <= htol;
            // above: second coordinate strictly up, or no first component
            if (h[1] > htol)
                return true;
            return std::abs(h[0]) <= htol && h[1] >= -htol;
        case EpiPlace::boundary: {
            const Eigen::Vector2d row = epigraph_row(*s, x);
            const double d = row.dot(h.entries().head<2>());
            if (s->side == PowerEpigraph::Side::below)
                return d <= htol; // concave boundary: tangent rays stay inside
            if (h.entries().cwiseAbs().maxCoeff() <= htol)
                return true;
            return d < -htol; // convex boundary: need strict descent of g
        }
        }
    }
    throw unsupported_error("radial cone test not available for this variant");
}

bool critical_cone_membership(const ConeQuery& q, const Vector& h, double tol) {
    if (!q.functional)
        throw structural_error("critical cone query needs a functional");
    if (!tangent_cone_membership(q, h))
        return false;
    const double p = pairing(*q.functional, h);
    return std::abs(p) <= tol * (1.0 + q.functional->norm()) * (1.0 + h.norm());
}

Vector project_tangent(const ConeQuery& q, const Vector& v) {
    require_same_space(q.base, v, "project_tangent");
    if (auto act = box_like_activity(*q.set, q.base, q.tol)) {
        Eigen::VectorXd h = v.entries();
        for (Eigen::Index i = 0; i < h.size(); ++i) {
            switch ((*act)[static_cast<size_t>(i)]) {
            case Act::interior:
                break;
            case Act::lower:
                h[i] = std::max(h[i], 0.0);
                break;
            case Act::upper:
                h[i] = std::min(h[i], 0.0);
                break;
            case Act::pinned:
                h[i] = 0.0;
                break;
            }
        }
        return v.like(std::move(h));
    }
    const Eigen::MatrixXd R = tangent_rows(*q.set, q.base, q.tol);
    if (R.rows() == 0)
        return v;
    return v.like(project_polyhedron(R, Eigen::VectorXd::Zero(R.rows()), v.entries()));
}

Vector project_critical(const ConeQuery& q, const Vector& v) {
    if (!q.functional)
        throw structural_error("critical projection needs a functional");
    Eigen::VectorXd u = q.functional->entries();
    if (q.functional->tag() != NormTag::euclidean)
        u = u.cwiseProduct(*q.functional->weights());
    const double uu = u.squaredNorm();

    // box-like sets at a supported point: the pairing against the tangent
    // cone is one-signed coordinatewise, so criticality pins every strictly
    // active coordinate to zero and the rest only need the tangent clamp
    if (auto act = box_like_activity(*q.set, q.base, q.tol)) {
        const double strict = 1e-10 * (1.0 + u.cwiseAbs().maxCoeff());
        Eigen::VectorXd h = v.entries();
        for (Eigen::Index i = 0; i < h.size(); ++i) {
            const Act a = (*act)[static_cast<size_t>(i)];
            if (a == Act::pinned || (a != Act::interior && std::abs(u[i]) > strict)) {
                h[i] = 0.0;
            } else if (a == Act::lower) {
                h[i] = std::max(h[i], 0.0);
            } else if (a == Act::upper) {
                h[i] = std::min(h[i], 0.0);
            }
        }
        Vector cand = v.like(std::move(h));
        if (critical_cone_membership(q, cand))
            return cand;
    }

    // alternating projections between the tangent cone and the kernel of the
    // functional; callers verify membership afterwards
    Vector h = v;
    for (int it = 0; it < 512; ++it) {
        h = project_tangent(q, h);
        if (uu > 0) {
            const double c = u.dot(h.entries()) / uu;
            h = h.like(h.entries() - c * u);
        }
    }
    return project_tangent(q, h);
}

// ===== K-side cones =======================================================

bool cone_tangent_contains(const ConvexSet& K, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& d, double tol) {
    if (K.residual(z) > tol * 10.0)
        throw domain_error("tangent query at a point outside the target set");
    switch (K.kind) {
    case ConvexSet::Kind::half_line_nonpos:
        return z[0] < -tol || d[0] <= tol;
    case ConvexSet::Kind::box:
        return box_like_tangent(box_activity(K.lower, K.upper, z, tol), d, tol);
    case ConvexSet::Kind::polyhedral: {
        const Eigen::VectorXd slack = K.b - K.A * z;
        for (Eigen::Index i = 0; i < slack.size(); ++i)
            if (slack[i] <= tol * (1.0 + std::abs(K.b[i])) && K.A.row(i).dot(d) > tol)
                return false;
        return true;
    }
    case ConvexSet::Kind::unit_ball:
        return z.norm() < 1.0 - tol || z.dot(d) <= tol;
    }
    return false;
}

bool cone_normal_contains(const ConvexSet& K, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& lambda, double tol) {
    if (K.residual(z) > tol * 10.0)
        throw domain_error("normal query at a point outside the target set");
    switch (K.kind) {
    case ConvexSet::Kind::half_line_nonpos:
        return z[0] < -tol ? std::abs(lambda[0]) <= tol : lambda[0] >= -tol;
    case ConvexSet::Kind::box:
        return box_like_normal(box_activity(K.lower, K.upper, z, tol), lambda, tol);
    case ConvexSet::Kind::polyhedral: {
        const Eigen::VectorXd slack = K.b - K.A * z;
        std::vector<int> act;
        for (Eigen::Index i = 0; i < slack.size(); ++i)
            if (slack[i] <= tol * (1.0 + std::abs(K.b[i])))
                act.push_back(static_cast<int>(i));
        if (act.empty())
            return lambda.cwiseAbs().maxCoeff() <= tol;
        Eigen::MatrixXd At(K.dim, static_cast<Eigen::Index>(act.size()));
        for (size_t k = 0; k < act.size(); ++k)
            At.col(static_cast<Eigen::Index>(k)) = K.A.row(act[k]).transpose();
        return conic_hull_residual(At, lambda) <= tol * 10.0;
    }
    case ConvexSet::Kind::unit_ball: {
        if (z.norm() < 1.0 - tol)
            return lambda.cwiseAbs().maxCoeff() <= tol;
        const double c = z.dot(lambda) / z.squaredNorm();
        return c >= -tol && (lambda - c * z).norm() <= tol * (1.0 + lambda.norm());
    }
    }
    return false;
}

// ===== second-order tangent sets ==========================================

bool SecondOrderTangentSet::contains(const Eigen::VectorXd& r, double tol) const {
    switch (kind) {
    case Kind::all_space:
        return true;
    case Kind::half_line_nonpos:
        return r[0] <= tol;
    case Kind::shifted:
        return base.residual(r - offset) <= tol;
    case Kind::empty:
        return false;
    }
    return false;
}

SecondOrderTangentSet second_order_tangent_set(const ConvexSet& K, const Eigen::VectorXd& z,
                                               const Eigen::VectorXd& h, double tol) {
    SecondOrderTangentSet out;
    if (!cone_tangent_contains(K, z, h, std::max(tol, 1e-9)))
        throw domain_error("second-order tangent set queried off the tangent cone");

    auto polyhedral_rows = [&](const std::vector<Eigen::VectorXd>& rows) {
        if (rows.empty()) {
            out.kind = SecondOrderTangentSet::Kind::all_space;
            return out;
        }
        Eigen::MatrixXd R(static_cast<Eigen::Index>(rows.size()), K.dim);
        for (size_t k = 0; k < rows.size(); ++k)
            R.row(static_cast<Eigen::Index>(k)) = rows[k];
        out.kind = SecondOrderTangentSet::Kind::shifted;
        out.base = ConvexSet::polyhedral(R, Eigen::VectorXd::Zero(R.rows()));
        out.offset = Eigen::VectorXd::Zero(K.dim);
        return out;
    };

    switch (K.kind) {
    case ConvexSet::Kind::half_line_nonpos:
        if (z[0] < -tol || h[0] < -tol)
            out.kind = SecondOrderTangentSet::Kind::all_space;
        else
            out.kind = SecondOrderTangentSet::Kind::half_line_nonpos;
        return out;
    case ConvexSet::Kind::box: {
        const auto act = box_activity(K.lower, K.upper, z, tol);
        std::vector<Eigen::VectorXd> rows;
        for (int i = 0; i < K.dim; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(K.dim);
            const bool still_lo = (act[static_cast<size_t>(i)] == Act::lower ||
                                   act[static_cast<size_t>(i)] == Act::pinned) &&
                                  std::abs(h[i]) <= tol;
            const bool still_hi = (act[static_cast<size_t>(i)] == Act::upper ||
                                   act[static_cast<size_t>(i)] == Act::pinned) &&
                                  std::abs(h[i]) <= tol;
            if (still_lo) {
                e[i] = -1.0;
                rows.push_back(e);
                e[i] = 0.0;
            }
            if (still_hi) {
                e[i] = 1.0;
                rows.push_back(e);
            }
        }
        return polyhedral_rows(rows);
    }
    case ConvexSet::Kind::polyhedral: {
        std::vector<Eigen::VectorXd> rows;
        const Eigen::VectorXd slack = K.b - K.A * z;
        for (Eigen::Index i = 0; i < slack.size(); ++i)
            if (slack[i] <= tol * (1.0 + std::abs(K.b[i])) &&
                std::abs(K.A.row(i).dot(h)) <= tol)
                rows.push_back(K.A.row(i).transpose());
        return polyhedral_rows(rows);
    }
    case ConvexSet::Kind::unit_ball: {
        if (z.norm() < 1.0 - tol || z.dot(h) < -tol) {
            out.kind = SecondOrderTangentSet::Kind::all_space;
            return out;
        }
        out.kind = SecondOrderTangentSet::Kind::shifted;
        Eigen::MatrixXd R(1, K.dim);
        R.row(0) = z.transpose();
        out.base = ConvexSet::polyhedral(R, Eigen::VectorXd::Zero(1));
        out.offset = -h.squaredNorm() / z.squaredNorm() * z;
        return out;
    }
    }
    throw unsupported_error("second_order_tangent_set: unknown target kind");
}

// ===== distance decay =====================================================

std::vector<double> default_t_schedule(double t0, int k_max) {
    std::vector<double> ts;
    for (int k = 0; k <= k_max; ++k)
        ts.push_back(t0 * std::pow(2.0, -k));
    return ts;
}

SorReport sor_necessary_check(const AdmissibleSet& C, const Vector& x, const Vector& h,
                              std::span<const double> t_schedule) {
    if (t_schedule.empty())
        throw structural_error("distance decay check needs a schedule");
    SorReport rep;
    const double floor = 1e-13 * entry_scale(x);
    for (double t : t_schedule) {
        if (!(t > 0))
            throw structural_error("schedule steps must be positive");
        const double d = distance(C, x + h * t);
        rep.ts.push_back(t);
        rep.dists.push_back(d);
        rep.ratios.push_back(d / (t * t));
    }
    for (size_t i = 0; i < rep.ts.size(); ++i) {
        if (rep.dists[i] > floor) {
            rep.initial_ratio = rep.ratios[i];
            for (size_t j = i; j < rep.ts.size(); ++j)
                rep.peak_ratio = std::max(rep.peak_ratio, rep.ratios[j]);
            break;
        }
    }
    rep.violated = rep.initial_ratio > 0.0 && rep.peak_ratio > 1e3 * rep.initial_ratio;
    return rep;
}

// ===== constraint qualification and multipliers ===========================

bool verify_zkcq(const LevelSetConstraint& c, const Vector& x) {
    const ConvexSet& K = c.target;
    if (K.dim > 2)
        throw unsupported_error("numeric constraint qualification check limited to two rows");
    const Eigen::MatrixXd J = c.jacobian(x);
    const Eigen::VectorXd z = c.value(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullU);
    const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10 * (1.0 + smax))
            ++rank;
    if (rank == K.dim)
        return true;

    // image is rank deficient; the radial cone of K at z has to supply the
    // missing directions, so G'(x) X - R_K(G(x)) must still cover R^m
    std::vector<Eigen::VectorXd> gens; // generators of -R_K(z)
    const double tol = 1e-9;
    switch (K.kind) {
    case ConvexSet::Kind::half_line_nonpos: {
        Eigen::VectorXd e(1);
        e << 1.0;
        gens.push_back(e); // -R = [0, inf) at an active point, all of R otherwise
        if (z[0] < -tol)
            gens.push_back(-e);
        break;
    }
    case ConvexSet::Kind::box: {
        const auto act = box_activity(K.lower, K.upper, z, tol);
        for (int i = 0; i < K.dim; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(K.dim);
            e[i] = 1.0;
            switch (act[static_cast<size_t>(i)]) {
            case Act::interior:
                gens.push_back(e);
                gens.push_back(-e);
                break;
            case Act::lower: // R points up, so -R contributes -e
                gens.push_back(-e);
                break;
            case Act::upper:
                gens.push_back(e);
                break;
            case Act::pinned:
                break;
            }
        }
        break;
    }
    default:
        throw unsupported_error("constraint qualification check for this target kind");
    }
    for (int i = 0; i < K.dim; ++i) {
        for (double sign : {1.0, -1.0}) {
            const Eigen::VectorXd w = sign * Eigen::VectorXd::Unit(K.dim, i);
            Eigen::MatrixXd At(K.dim, 2 * J.cols() + static_cast<Eigen::Index>(gens.size()));
            Eigen::Index col = 0;
            for (Eigen::Index j = 0; j < J.cols(); ++j) {
                At.col(col++) = J.col(j);
                At.col(col++) = -J.col(j);
            }
            for (const auto& g : gens)
                At.col(col++) = g;
            if (conic_hull_residual(At, w) > 1e-8)
                return false;
        }
    }
    return true;
}

std::optional<Eigen::VectorXd> normal_multiplier(const LevelSetConstraint& c, const Vector& x,
                                                 const Vector& phi, double tol) {
    if (x.tag() != NormTag::euclidean)
        throw unsupported_error("multiplier recovery needs euclidean vectors");
    const Eigen::MatrixXd J = c.jacobian(x);
    const Eigen::VectorXd z = c.value(x);
    const Eigen::VectorXd target = -phi.entries(); // solve J^T lambda = -phi
    const double accept = tol * (1.0 + phi.entries().norm());
    const ConvexSet& K = c.target;
    const double atol = 1e-9;

    // columns of J^T lambda constrained to the normal cone N_K(z), written as
    // a conic combination of signed columns
    std::vector<Eigen::VectorXd> cols;      // candidate directions in X
    std::vector<Eigen::VectorXd> lam_basis; // matching lambda contribution
    auto add = [&](const Eigen::VectorXd& lam) {
        cols.push_back(J.transpose() * lam);
        lam_basis.push_back(lam);
    };
    switch (K.kind) {
    case ConvexSet::Kind::half_line_nonpos:
        if (z[0] >= -atol) {
            Eigen::VectorXd e(1);
            e << 1.0;
            add(e);
        }
        break;
    case ConvexSet::Kind::box: {
        const auto act = box_activity(K.lower, K.upper, z, atol);
        for (int i = 0; i < K.dim; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(K.dim);
            if (act[static_cast<size_t>(i)] == Act::upper ||
                act[static_cast<size_t>(i)] == Act::pinned) {
                e[i] = 1.0;
                add(e);
                e[i] = 0.0;
            }
            if (act[static_cast<size_t>(i)] == Act::lower ||
                act[static_cast<size_t>(i)] == Act::pinned) {
                e[i] = -1.0;
                add(e);
            }
        }
        break;
    }
    case ConvexSet::Kind::polyhedral: {
        const Eigen::VectorXd slack = K.b - K.A * z;
        for (Eigen::Index i = 0; i < slack.size(); ++i)
            if (slack[i] <= atol * (1.0 + std::abs(K.b[i])))
                add(K.A.row(i).transpose());
        break;
    }
    case ConvexSet::Kind::unit_ball:
        if (z.norm() >= 1.0 - atol)
            add(z);
        break;
    }

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(K.dim);
    if (cols.empty())
        return target.norm() <= accept ? std::optional<Eigen::VectorXd>(lambda) : std::nullopt;

    Eigen::MatrixXd At(x.size(), static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k)
        At.col(static_cast<Eigen::Index>(k)) = cols[k];
    Eigen::VectorXd mu;
    const double res = conic_hull_residual(At, target, &mu);
    if (res > accept)
        return std::nullopt;
    for (size_t k = 0; k < lam_basis.size(); ++k)
        lambda += mu[static_cast<Eigen::Index>(k)] * lam_basis[k];
    return lambda;
}

} // namespace curvlab
