#include <doctest.h>

#include <curvlab/soc.hpp>

#include <cmath>

using namespace curvlab;

namespace {

Vector ev(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return Vector::euclidean(v);
}

// J(x) = |x - target|^2 / 2 in the euclidean pairing
Objective quadratic_target(Vector target) {
    Objective J;
    J.eval = [target](const Vector& x) {
        const Vector d = x - target;
        return 0.5 * pairing(d, d);
    };
    J.grad = [target](const Vector& x) { return x - target; };
    J.hess_form = [](const Vector&, const Vector& a, const Vector& b) { return pairing(a, b); };
    return J;
}

AdmissibleSet unit_square() {
    return make_box(ev({-1.0, -1.0}), ev({1.0, 1.0}));
}

// smoothing-plus-regularization control problem on a grid of n cells:
// J(u) = |Su - y|^2 / 2 + gamma |u|^2 / 2 with S a gaussian integral kernel,
// self-adjoint in the grid inner product
struct ControlProblem {
    Grid grid;
    Eigen::MatrixXd S;
    Vector yd;
    double gamma;
    AdmissibleSet C;
    Objective J;
    Vector ubar;

    ControlProblem(int n, double gamma_, double target_amp)
        : grid(Grid::interval(0.0, 1.0, n)), yd(grid.constant(0.0, NormTag::weighted_l2)),
          gamma(gamma_), C(make_box(grid.constant(-1.0, NormTag::weighted_l2),
                                    grid.constant(1.0, NormTag::weighted_l2))),
          ubar(grid.constant(0.0, NormTag::weighted_l2)) {
        const double w = grid.cell_volume();
        S.resize(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double si = (i + 0.5) * w;
                const double tj = (j + 0.5) * w;
                S(i, j) = w * std::exp(-std::pow(si - tj, 2) / (2.0 * 0.15 * 0.15));
            }
        yd = grid.sample(
            [target_amp](const Eigen::VectorXd& xi) {
                return target_amp * std::sin(2.0 * M_PI * xi[0]);
            },
            NormTag::weighted_l2);

        const Eigen::MatrixXd& Sm = S;
        const Eigen::VectorXd yv = yd.entries();
        J.eval = [Sm, yv, gamma_, w](const Vector& u) {
            const Eigen::VectorXd r = Sm * u.entries() - yv;
            return 0.5 * w * r.squaredNorm() + 0.5 * gamma_ * w * u.entries().squaredNorm();
        };
        J.grad = [Sm, yv, gamma_](const Vector& u) {
            const Eigen::VectorXd r = Sm * u.entries() - yv;
            return u.like(Sm * r + gamma_ * u.entries());
        };
        J.hess_form = [Sm, gamma_, w](const Vector&, const Vector& a, const Vector& b) {
            return w * (Sm * a.entries()).dot(Sm * b.entries()) +
                   gamma_ * w * a.entries().dot(b.entries());
        };

        // projected gradient to a fixed point of the clamp map
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
        const double step = 1.0 / (0.2 + gamma_);
        for (int it = 0; it < 8000; ++it) {
            const Eigen::VectorXd g = Sm * (Sm * u - yv) + gamma_ * u;
            Eigen::VectorXd next = (u - step * g).cwiseMax(-1.0).cwiseMin(1.0);
            const double move = (next - u).lpNorm<Eigen::Infinity>();
            u = next;
            if (move < 1e-15)
                break;
        }
        ubar = grid.vector(u, NormTag::weighted_l2);
    }
};

} // namespace

TEST_SUITE("soc") {

TEST_CASE("first-order check on a box distinguishes supported points") {
    const AdmissibleSet C = unit_square();
    const Vector xbar = ev({1.0, 0.0});

    const FoncResult hold = fonc_check(C, quadratic_target(ev({2.0, 0.0})), xbar);
    CHECK(hold.holds);

    const FoncResult fail = fonc_check(C, quadratic_target(ev({2.0, 1.0})), xbar);
    CHECK_FALSE(fail.holds);
    REQUIRE(fail.witness.has_value());
    CHECK(fail.pay < -0.5);
    // witness is tangent: first coordinate cannot increase
    CHECK(fail.witness->entries()[0] <= 1e-12);

    CHECK_THROWS_AS(fonc_check(C, quadratic_target(ev({0.0, 0.0})), ev({2.0, 0.0})),
                    structural_error);
}

TEST_CASE("first-order check holds at the kink of the power set") {
    const AdmissibleSet C = make_power_epigraph(1.5, PowerEpigraph::Side::above);
    Objective J;
    J.eval = [](const Vector& x) { return x.entries()[1] - std::pow(x.entries()[0], 2); };
    J.grad = [](const Vector& x) { return ev({-2.0 * x.entries()[0], 1.0}); };
    J.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        return -2.0 * a.entries()[0] * b.entries()[0];
    };
    CHECK(fonc_check(C, J, ev({0.0, 0.0})).holds);
}

TEST_CASE("non-degeneracy dispatch per variant") {
    SUBCASE("finite-dimensional sets pass structurally") {
        const NdcResult r =
            ndc_check(unit_square(), quadratic_target(ev({2.0, 0.0})), ev({1.0, 0.0}));
        CHECK(r.established);
        CHECK(r.via == NdcResult::Criterion::finite_dimensional);
    }

    SUBCASE("identity Hessian form on a grid is elliptic") {
        const Grid g = Grid::interval(0.0, 1.0, 16);
        const AdmissibleSet C = make_bangbang(g);
        Objective J;
        J.eval = [](const Vector& u) { return 0.5 * pairing(u, u); };
        J.grad = [](const Vector& u) { return u; };
        J.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
            return pairing(a, b);
        };
        const Vector xbar = g.constant(0.0, NormTag::weighted_l1);
        const NdcResult r = ndc_check(C, J, xbar);
        CHECK(r.established);
        CHECK(r.via == NdcResult::Criterion::ellipticity);
        // floor 1 in the grid inner product, divided by the domain measure 1
        CHECK(r.constant == doctest::Approx(1.0).epsilon(1e-6));
    }

    SUBCASE("linear objective falls back to fitted first-order growth") {
        const int n = 16;
        const Grid g = Grid::interval(0.0, 1.0, n);
        const AdmissibleSet C = make_bangbang(g);
        const Vector phibar = g.sample(
            [](const Eigen::VectorXd& xi) { return xi[0] - 0.5; }, NormTag::weighted_l1);
        Objective J;
        J.eval = [phibar](const Vector& u) { return pairing(phibar, u); };
        J.grad = [phibar](const Vector&) { return phibar; };
        J.hess_form = [](const Vector&, const Vector&, const Vector&) { return 0.0; };
        const Vector ubar = g.sample(
            [](const Eigen::VectorXd& xi) { return xi[0] < 0.5 ? 1.0 : -1.0; },
            NormTag::weighted_l1);

        NdcOptions opts;
        // cell-aligned symmetric strip flips around the sign change; every
        // such move has pay ratio exactly 1/4
        opts.sampler = [&](double, int, std::uint64_t) {
            std::vector<Vector> out;
            for (int m = 1; m <= n / 2; ++m) {
                Eigen::VectorXd u = ubar.entries();
                for (int j = n / 2 - m; j < n / 2 + m; ++j)
                    u[j] = -u[j];
                out.push_back(ubar.like(u));
            }
            return out;
        };
        const NdcResult r = ndc_check(C, J, ubar, opts);
        CHECK(r.established);
        CHECK(r.via == NdcResult::Criterion::first_order_growth);
        CHECK(r.constant == doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("necessary-condition scan classifies directions") {
    SUBCASE("zero direction has zero residual") {
        const AdmissibleSet C = unit_square();
        const Objective J = quadratic_target(ev({2.0, 0.0}));
        const Vector xbar = ev({1.0, 0.0});
        const std::vector<Vector> dirs = {ev({0.0, 0.0})};
        const auto entries = snc_scan(C, J, xbar, 0.5, dirs);
        REQUIRE(entries.size() == 1);
        CHECK(entries[0].kind == SncEntry::Kind::finite);
        CHECK(entries[0].residual == doctest::Approx(0.0));
    }

    SUBCASE("downward power set reports violation along the kink") {
        const AdmissibleSet C = make_power_epigraph(1.5, PowerEpigraph::Side::below);
        Objective J;
        J.eval = [](const Vector& x) { return -x.entries()[1]; };
        J.grad = [](const Vector&) { return ev({0.0, -1.0}); };
        J.hess_form = [](const Vector&, const Vector&, const Vector&) { return 0.0; };
        const Vector xbar = ev({0.0, 0.0});
        const std::vector<Vector> dirs = {ev({1.0, 0.0}), ev({-1.0, 0.0})};
        const auto entries = snc_scan(C, J, xbar, 0.0, dirs);
        REQUIRE(entries.size() == 2);
        for (const auto& e : entries) {
            CHECK(e.kind == SncEntry::Kind::violated);
            CHECK(std::isinf(e.residual));
            CHECK(e.residual < 0);
        }
    }

    SUBCASE("non-critical direction is rejected") {
        const AdmissibleSet C = make_power_epigraph(1.5, PowerEpigraph::Side::above);
        Objective J;
        J.eval = [](const Vector& x) { return x.entries()[1]; };
        J.grad = [](const Vector&) { return ev({0.0, 1.0}); };
        J.hess_form = [](const Vector&, const Vector&, const Vector&) { return 0.0; };
        const std::vector<Vector> dirs = {ev({0.0, 1.0})};
        CHECK_THROWS_AS(snc_scan(C, J, ev({0.0, 0.0}), 0.0, dirs), domain_error);
    }
}

TEST_CASE("strict condition on the disc boundary depends on the multiplier") {
    LevelSetConstraint lc;
    lc.value = [](const Vector& x) {
        Eigen::VectorXd z(1);
        z << x.entries().squaredNorm() - 1.0;
        return z;
    };
    lc.jacobian = [](const Vector& x) {
        Eigen::MatrixXd J(1, x.size());
        J.row(0) = 2.0 * x.entries().transpose();
        return J;
    };
    lc.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        Eigen::VectorXd z(1);
        z << 2.0 * a.entries().dot(b.entries());
        return z;
    };
    lc.zkcq_asserted = true;
    const AdmissibleSet C = make_level_set(lc);
    const Vector xbar = ev({0.0, 1.0});

    auto objective = [&](double lambda) {
        Objective J;
        J.eval = [lambda, xbar](const Vector& x) {
            const Vector d = x - xbar;
            return -2.0 * lambda * x.entries()[1] - 0.5 * pairing(d, d);
        };
        J.grad = [lambda, xbar](const Vector& x) {
            return x.like(Eigen::VectorXd(ev({0.0, -2.0 * lambda}).entries() -
                                          (x - xbar).entries()));
        };
        J.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
            return -pairing(a, b);
        };
        return J;
    };

    const std::vector<Vector> dirs = {ev({1.0, 0.0}), ev({-1.0, 0.0})};

    // curvature of the boundary pays 2 lambda per unit direction, the
    // objective Hessian takes back 1
    const Objective strong = objective(1.0);
    const SscResult ok = ssc_check(C, strong, xbar, dirs);
    CHECK(ok.holds);
    CHECK_FALSE(ok.advisory);
    CHECK(ok.checked == 2);
    CHECK(ok.margin == doctest::Approx(1.0).epsilon(5e-2));

    const Objective weak = objective(0.25);
    const SscResult bad = ssc_check(C, weak, xbar, dirs);
    CHECK_FALSE(bad.holds);
    REQUIRE(bad.witness.has_value());
}

TEST_CASE("growth sampling on the power set matches the boundary infimum") {
    const AdmissibleSet C = make_power_epigraph(1.5, PowerEpigraph::Side::above);
    Objective J;
    J.eval = [](const Vector& x) {
        return x.entries()[1] - std::pow(x.entries()[0], 2);
    };
    J.grad = [](const Vector& x) { return ev({-2.0 * x.entries()[0], 1.0}); };
    J.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        return -2.0 * a.entries()[0] * b.entries()[0];
    };
    const Vector xbar = ev({0.0, 0.0});
    const GrowthReport rep = growth_sample(C, J, xbar);

    CHECK(rep.sample_count > 200);
    CHECK(rep.fitted_c >= rep.raw_min);
    for (const GrowthSample& s : rep.samples)
        CHECK(s.norm <= rep.epsilon_used + 1e-12);

    // the infimum of the ratio sits on the boundary curve at the largest
    // admissible first coordinate
    double oracle = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 4000; ++i) {
        const double x1 = 0.1 * i / 4000.0;
        const double x2 = std::pow(x1, 1.5);
        const double n2 = x1 * x1 + x2 * x2;
        oracle = std::min(oracle, 2.0 * (x2 - x1 * x1) / n2);
    }
    CHECK(rep.raw_min >= oracle - 1e-9);
    CHECK(rep.fitted_c >= 0.5 * oracle);
    CHECK(rep.fitted_c > 1.0);

    CHECK_THROWS_AS(growth_sample(unit_square(), J, ev({3.0, 0.0})), structural_error);
}

TEST_CASE("downward power set yields descent and an inconsistent verdict") {
    const AdmissibleSet C = make_power_epigraph(1.5, PowerEpigraph::Side::below);
    Objective J;
    J.eval = [](const Vector& x) { return -x.entries()[1]; };
    J.grad = [](const Vector&) { return ev({0.0, -1.0}); };
    J.hess_form = [](const Vector&, const Vector&, const Vector&) { return 0.0; };
    const Vector xbar = ev({0.0, 0.0});

    const SOCReport rep = no_gap_report(C, J, xbar);
    CHECK(rep.fonc.holds);
    CHECK(rep.verdict == SOCReport::Verdict::inconsistent);
    CHECK(rep.growth.fitted_c < -1.0);
    bool violated = false;
    for (const SncEntry& e : rep.snc)
        if (e.kind == SncEntry::Kind::violated)
            violated = true;
    CHECK(violated);
}

TEST_CASE("control problem at its computed minimizer is consistent") {
    const ControlProblem P(20, 0.1, 1.0);

    // the clamp fixed point must mix active and inactive cells for the case
    // to exercise anything
    int active = 0;
    for (Eigen::Index i = 0; i < P.ubar.size(); ++i)
        if (std::abs(std::abs(P.ubar.entries()[i]) - 1.0) < 1e-9)
            ++active;
    REQUIRE(active > 0);
    REQUIRE(active < P.ubar.size());

    const SOCReport rep = no_gap_report(P.C, P.J, P.ubar);
    CHECK(rep.fonc.holds);
    CHECK(rep.ndc.established);
    CHECK(rep.ndc.via == NdcResult::Criterion::finite_dimensional);
    CHECK(rep.ssc.holds);
    CHECK(rep.ssc.margin >= 0.9 * P.gamma);
    CHECK(rep.growth.fitted_c > 0.0);
    for (const SncEntry& e : rep.snc) {
        CHECK(e.kind == SncEntry::Kind::finite);
        CHECK(e.residual >= -1e-9);
    }
    CHECK(rep.verdict == SOCReport::Verdict::no_gap_consistent);
}

TEST_CASE("doubling the objective doubles the constants and keeps the verdict") {
    const ControlProblem P(20, 0.1, 1.0);
    Objective J2;
    const Objective& J1 = P.J;
    J2.eval = [&J1](const Vector& x) { return 2.0 * J1.eval(x); };
    J2.grad = [&J1](const Vector& x) { return J1.grad(x) * 2.0; };
    J2.hess_form = [&J1](const Vector& x, const Vector& a, const Vector& b) {
        return 2.0 * J1.hess_form(x, a, b);
    };

    const SOCReport r1 = no_gap_report(P.C, P.J, P.ubar);
    const SOCReport r2 = no_gap_report(P.C, J2, P.ubar);

    CHECK(r1.verdict == r2.verdict);
    CHECK(r1.fonc.holds == r2.fonc.holds);
    CHECK(r1.ssc.holds == r2.ssc.holds);
    CHECK(r1.ndc.established == r2.ndc.established);
    CHECK(r2.growth.fitted_c == doctest::Approx(2.0 * r1.growth.fitted_c).epsilon(1e-12));
    CHECK(r2.growth.raw_min == doctest::Approx(2.0 * r1.growth.raw_min).epsilon(1e-12));
    REQUIRE(r1.snc.size() == r2.snc.size());
    for (size_t i = 0; i < r1.snc.size(); ++i)
        CHECK(r2.snc[i].residual ==
              doctest::Approx(2.0 * r1.snc[i].residual).epsilon(1e-6));
    CHECK(r2.ssc.margin == doctest::Approx(2.0 * r1.ssc.margin).epsilon(1e-6));
}

TEST_CASE("reports are reproducible run to run") {
    const ControlProblem P(20, 0.1, 1.0);
    const SOCReport a = no_gap_report(P.C, P.J, P.ubar);
    const SOCReport b = no_gap_report(P.C, P.J, P.ubar);

    CHECK(a.verdict == b.verdict);
    CHECK(a.growth.fitted_c == b.growth.fitted_c);
    CHECK(a.growth.raw_min == b.growth.raw_min);
    REQUIRE(a.growth.samples.size() == b.growth.samples.size());
    for (size_t i = 0; i < a.growth.samples.size(); ++i) {
        CHECK(a.growth.samples[i].norm == b.growth.samples[i].norm);
        CHECK(a.growth.samples[i].ratio == b.growth.samples[i].ratio);
    }
    REQUIRE(a.snc.size() == b.snc.size());
    for (size_t i = 0; i < a.snc.size(); ++i)
        CHECK(a.snc[i].residual == b.snc[i].residual);
}

} // TEST_SUITE
