#include <doctest.h>

#include <cmath>
#include <random>

#include "curvlab/grid.hpp"
#include "curvlab/objective.hpp"
#include "curvlab/sets.hpp"
#include "curvlab/vec.hpp"

using namespace curvlab;

namespace {

Vector ev(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return Vector::euclidean(v);
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("norms and pairing by direct formula") {
    Vector x = ev({3.0, -4.0});
    CHECK(x.norm() == doctest::Approx(5.0));

    Grid g = Grid::interval(0.0, 2.0, 4); // cell volume 0.5
    Vector u = g.vector(Eigen::Vector4d(1.0, -2.0, 3.0, -4.0), NormTag::weighted_l1);
    CHECK(u.norm() == doctest::Approx(0.5 * (1 + 2 + 3 + 4)));
    Vector u2 = g.vector(Eigen::Vector4d(1.0, -2.0, 3.0, -4.0), NormTag::weighted_l2);
    CHECK(u2.norm() == doctest::Approx(std::sqrt(0.5 * (1 + 4 + 9 + 16))));

    Vector p = g.vector(Eigen::Vector4d(1.0, 1.0, 2.0, 0.0), NormTag::weighted_l2);
    CHECK(pairing(p, u) == doctest::Approx(0.5 * (1 - 2 + 6 + 0)));
}

TEST_CASE("norm homogeneity |a|*norm (property)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(-2.0, 2.0);
    Grid g = Grid::interval(-1.0, 1.0, 8);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd raw(8);
        for (int i = 0; i < 8; ++i)
            raw[i] = ud(rng);
        const double a = ud(rng);
        for (NormTag tag : {NormTag::euclidean, NormTag::weighted_l1, NormTag::weighted_l2}) {
            Vector v = tag == NormTag::euclidean ? Vector::euclidean(raw) : g.vector(raw, tag);
            CHECK((v * a).norm() == doctest::Approx(std::abs(a) * v.norm()).epsilon(1e-12));
        }
    }
}

TEST_CASE("vector structural errors") {
    Eigen::VectorXd bad(2);
    bad << 1.0, std::nan("");
    CHECK_THROWS_AS(Vector::euclidean(bad), structural_error);

    Grid g = Grid::interval(0.0, 1.0, 4);
    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(g.vector(wrong, NormTag::weighted_l1), structural_error);

    Vector a = ev({1.0, 2.0});
    Vector b = g.vector(Eigen::Vector4d::Zero(), NormTag::weighted_l2);
    CHECK_THROWS_AS(pairing(a, b), structural_error);
}

TEST_CASE("grid nodes are interior cell centers, volumes sum to the measure") {
    Grid g1 = Grid::interval(0.0, 1.0, 10);
    CHECK(g1.nodes(0, 0) == doctest::Approx(0.05));
    CHECK(g1.nodes(9, 0) == doctest::Approx(0.95));
    CHECK(g1.volumes->sum() == doctest::Approx(1.0));

    Grid g2 = Grid::box(-1.0, 1.0, -1.0, 1.0, 16);
    CHECK(g2.count() == 256);
    CHECK(g2.volumes->sum() == doctest::Approx(4.0));
    // flat index: x fastest
    CHECK(g2.nodes(g2.flat(3, 0), 0) == doctest::Approx(-1.0 + 3.5 * 0.125));
    CHECK(g2.nodes(g2.flat(0, 3), 1) == doctest::Approx(-1.0 + 3.5 * 0.125));
    for (int i = 0; i < g2.count(); ++i) {
        CHECK(g2.nodes(i, 0) > g2.lo[0]);
        CHECK(g2.nodes(i, 0) < g2.hi[0]);
    }
}

TEST_CASE("box membership matches exact integer arithmetic") {
    // integers are exact in doubles, so an independent integer check is an
    // exact-arithmetic oracle for the box and polyhedron tests
    Vector lo = ev({-1.0, -1.0, -1.0});
    Vector hi = ev({1.0, 1.0, 1.0});
    AdmissibleSet box = make_box(lo, hi);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> di(-3, 3);
    for (int trial = 0; trial < 200; ++trial) {
        long xi[3];
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) {
            xi[i] = di(rng);
            x[i] = static_cast<double>(xi[i]);
        }
        bool exact = true;
        for (long v : xi)
            exact = exact && v >= -1 && v <= 1;
        CHECK(membership(box, Vector::euclidean(x), 0.0) == exact);
    }
}

TEST_CASE("polyhedron membership matches exact integer arithmetic") {
    Eigen::MatrixXd A(3, 2);
    A << 1, 1, -1, 0, 0, -1;
    Eigen::VectorXd b(3);
    b << 2, 0, 0;
    AdmissibleSet poly = make_polyhedron(A, b);
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> di(-2, 4);
    for (int trial = 0; trial < 200; ++trial) {
        const long x0 = di(rng), x1 = di(rng);
        const bool exact = (x0 + x1 <= 2) && (-x0 <= 0) && (-x1 <= 0);
        CHECK(membership(poly, ev({double(x0), double(x1)}), 0.0) == exact);
    }
}

TEST_CASE("membership tolerance semantics and monotonicity") {
    AdmissibleSet box = make_box(ev({-1.0, -1.0}), ev({1.0, 1.0}));
    Vector x = ev({1.0 + 5e-11, 0.0});
    CHECK(membership(box, x));            // default 1e-10 slack
    CHECK(!membership(box, x, 1e-12));    // tighter tol rejects
    CHECK(membership(box, x, 1e-9));      // looser accepts

    // tol-monotonicity on random points (property)
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ud(-1.5, 1.5);
    for (int trial = 0; trial < 50; ++trial) {
        Vector p = ev({ud(rng), ud(rng)});
        for (double t1 : {0.0, 1e-10, 1e-6, 1e-2}) {
            for (double t2 : {1e-9, 1e-4, 1e-1}) {
                if (t1 <= t2 && membership(box, p, t1))
                    CHECK(membership(box, p, t2));
            }
        }
    }
}

TEST_CASE("power epigraph membership at the canonical query") {
    // 0.1^1.5 = 0.0316...; the point (0.1, 0.01) sits strictly below the curve
    AdmissibleSet epi = make_power_epigraph(1.5, PowerEpigraph::Side::above);
    const double curve = std::pow(0.1, 1.5);
    REQUIRE(curve > 0.01); // oracle for the frozen expectation below
    CHECK(!membership(epi, ev({0.1, 0.01}), 1e-10));
    CHECK(membership(epi, ev({0.1, curve}), 1e-12));
    CHECK(membership(epi, ev({0.1, 0.05}), 0.0));

    AdmissibleSet flip = make_power_epigraph(1.5, PowerEpigraph::Side::below);
    CHECK(membership(flip, ev({0.1, 0.01}), 0.0));
    CHECK(!membership(flip, ev({0.1, 0.05}), 1e-10));

    CHECK_THROWS_AS(make_power_epigraph(1.0, PowerEpigraph::Side::above), structural_error);
    CHECK_THROWS_AS(make_power_epigraph(2.0, PowerEpigraph::Side::above), structural_error);
}

TEST_CASE("bangbang box membership uses the grid sup bound") {
    Grid g = Grid::interval(0.0, 1.0, 16);
    AdmissibleSet bb = make_bangbang(g);
    CHECK(default_feasibility_tol(bb) == doctest::Approx(1e-8));
    Vector u = g.constant(1.0, NormTag::weighted_l1);
    CHECK(membership(bb, u));
    u.entries()[3] = 1.0 + 1e-9;
    CHECK(membership(bb, u)); // inside grid slack
    u.entries()[3] = 1.01;
    CHECK(!membership(bb, u));
    Eigen::VectorXd wrong(4);
    wrong.setZero();
    CHECK_THROWS_AS(feasibility_residual(bb, Vector::euclidean(wrong)), structural_error);
}

TEST_CASE("level set membership routes through the target set") {
    LevelSetConstraint c;
    c.value = [](const Vector& x) {
        Eigen::VectorXd z(1);
        z[0] = x.entries().squaredNorm() - 1.0;
        return z;
    };
    c.jacobian = [](const Vector& x) {
        Eigen::MatrixXd j(1, x.size());
        j.row(0) = 2.0 * x.entries().transpose();
        return j;
    };
    c.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        Eigen::VectorXd h(1);
        h[0] = 2.0 * a.entries().dot(b.entries());
        return h;
    };
    c.target = ConvexSet::half_line_nonpos();
    c.convex_hint = true;
    AdmissibleSet ball = make_level_set(c);
    CHECK(membership(ball, ev({0.6, 0.0}), 0.0));
    CHECK(membership(ball, ev({1.0, 0.0}), 1e-12));
    CHECK(!membership(ball, ev({1.1, 0.0}), 1e-6));
    CHECK(is_convex(ball));
}

TEST_CASE("projection and distance agree with closed forms") {
    AdmissibleSet box = make_box(ev({-1.0, -1.0}), ev({1.0, 1.0}));
    Vector p = ev({2.0, 0.5});
    CHECK(project(box, p).entries().isApprox(Eigen::Vector2d(1.0, 0.5)));
    CHECK(distance(box, p) == doctest::Approx(1.0));

    Eigen::MatrixXd A(1, 2);
    A << 1.0, 1.0;
    Eigen::VectorXd b(1);
    b << 0.0;
    AdmissibleSet half = make_polyhedron(A, b);
    Vector q = ev({1.0, 1.0});
    CHECK(distance(half, q) == doctest::Approx(std::sqrt(2.0)));
    CHECK(project(half, q).entries().isApprox(Eigen::Vector2d(0.0, 0.0), 1e-10));

    // corner of the nonnegative-orthant-with-cap polyhedron
    Eigen::MatrixXd A2(2, 2);
    A2 << -1.0, 0.0, 0.0, -1.0;
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(2);
    AdmissibleSet quad = make_polyhedron(A2, b2);
    CHECK(project(quad, ev({-3.0, -4.0})).entries().isApprox(Eigen::Vector2d(0.0, 0.0)));
    CHECK(distance(quad, ev({-3.0, -4.0})) == doctest::Approx(5.0));
}

TEST_CASE("power epigraph distance matches a dense curve scan") {
    AdmissibleSet epi = make_power_epigraph(1.5, PowerEpigraph::Side::above);
    auto scan = [](double alpha, const Eigen::Vector2d& p) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = -400000; i <= 400000; ++i) {
            const double s = i * 1e-5;
            const double dx = s - p[0];
            const double dy = std::pow(std::abs(s), alpha) - p[1];
            best = std::min(best, std::hypot(dx, dy));
        }
        return best;
    };
    for (const auto& p : {Eigen::Vector2d(0.3, -0.2), Eigen::Vector2d(-0.7, 0.1),
                          Eigen::Vector2d(0.05, -0.01)}) {
        const double d = distance(epi, Vector::euclidean(Eigen::VectorXd(p)));
        CHECK(d == doctest::Approx(scan(1.5, p)).epsilon(1e-5));
        Vector pr = project(epi, Vector::euclidean(Eigen::VectorXd(p)));
        CHECK(feasibility_residual(epi, pr) <= 1e-10);
    }
}

TEST_CASE("scalar level set projection lands on the ball surface") {
    LevelSetConstraint c;
    c.value = [](const Vector& x) {
        Eigen::VectorXd z(1);
        z[0] = x.entries().squaredNorm() - 1.0;
        return z;
    };
    c.jacobian = [](const Vector& x) {
        Eigen::MatrixXd j(1, x.size());
        j.row(0) = 2.0 * x.entries().transpose();
        return j;
    };
    c.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        Eigen::VectorXd h(1);
        h[0] = 2.0 * a.entries().dot(b.entries());
        return h;
    };
    c.target = ConvexSet::half_line_nonpos();
    AdmissibleSet ball = make_level_set(c);
    Vector p = ev({2.0, 2.0});
    Vector pr = project(ball, p);
    CHECK(pr.entries().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pr.entries().isApprox(Eigen::Vector2d(1.0, 1.0).normalized(), 1e-10));
    CHECK(distance(ball, p) == doctest::Approx(2.0 * std::sqrt(2.0) - 1.0));
}

TEST_CASE("objective self-checks accept a correct quadratic") {
    Objective J;
    J.eval = [](const Vector& x) {
        return 0.5 * x.entries().squaredNorm() + x.entries().sum();
    };
    J.grad = [](const Vector& x) {
        return x.like(x.entries() + Eigen::VectorXd::Ones(x.size()));
    };
    J.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        return a.entries().dot(b.entries());
    };
    std::vector<Vector> pts = {ev({0.3, -0.7, 1.1}), ev({0.0, 0.0, 0.0})};
    auto rep = check_objective(J, pts, 42);
    CHECK(rep.ok);
    CHECK(rep.worst_grad_rel < 1e-5);
    CHECK(rep.worst_hess_rel < 1e-4);
    CHECK(rep.worst_symmetry < 1e-12);
}

TEST_CASE("objective self-checks flag a wrong gradient and asymmetric form") {
    Objective J;
    J.eval = [](const Vector& x) { return 0.5 * x.entries().squaredNorm(); };
    J.grad = [](const Vector& x) { return x * 1.05; }; // off by 5 percent
    J.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        return a.entries().dot(b.entries());
    };
    std::vector<Vector> pts = {ev({1.0, 2.0})};
    CHECK(!check_objective(J, pts, 42).ok);

    Objective A;
    A.eval = [](const Vector& x) { return x[0] * x[1]; };
    A.grad = [](const Vector& x) {
        Eigen::VectorXd g(2);
        g << x[1], x[0];
        return x.like(g);
    };
    A.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        return a[0] * b[1] + 1e-6 * a[1] * b[0]; // deliberately asymmetric
    };
    CHECK(!check_objective(A, pts, 42).ok);
}

TEST_SUITE_END();
