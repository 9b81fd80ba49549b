#include "curvlab/builtin.hpp"

#include <cmath>

#include "curvlab/errors.hpp"

namespace curvlab {

namespace {

Vector ev(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return Vector::euclidean(v);
}

BuiltinProblem box_qp() {
    BuiltinProblem p;
    p.name = "box_qp";
    const Eigen::Vector4d a(2.0, 0.5, -3.0, 0.0);
    p.set = make_box(ev({-1.0, -1.0, -1.0, -1.0}), ev({1.0, 1.0, 1.0, 1.0}));
    p.point = ev({1.0, 0.5, -1.0, 0.0});
    p.objective.eval = [a](const Vector& x) { return 0.5 * (x.entries() - a).squaredNorm(); };
    p.objective.grad = [a](const Vector& x) { return x.like(x.entries() - a); };
    p.objective.hess_form = [](const Vector&, const Vector& u, const Vector& v) {
        return u.entries().dot(v.entries());
    };
    return p;
}

// smoothing-plus-regularization tracking problem on a grid of n cells:
// J(u) = |Su - y|^2 / 2 + gamma |u|^2 / 2 with S a gaussian integral kernel,
// self-adjoint in the grid inner product; the candidate point is the fixed
// point of the projected-gradient clamp map
BuiltinProblem control_constrained(int n) {
    BuiltinProblem p;
    p.name = "control_constrained";
    const Grid grid = Grid::interval(0.0, 1.0, n);
    const double gamma = 0.1;
    const double w = grid.cell_volume();

    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double si = (i + 0.5) * w;
            const double tj = (j + 0.5) * w;
            S(i, j) = w * std::exp(-std::pow(si - tj, 2) / (2.0 * 0.15 * 0.15));
        }
    const Vector yd = grid.sample(
        [](const Eigen::VectorXd& xi) { return std::sin(2.0 * M_PI * xi[0]); },
        NormTag::weighted_l2);

    p.set = make_box(grid.constant(-1.0, NormTag::weighted_l2),
                     grid.constant(1.0, NormTag::weighted_l2));

    const Eigen::VectorXd yv = yd.entries();
    p.objective.eval = [S, yv, gamma, w](const Vector& u) {
        const Eigen::VectorXd r = S * u.entries() - yv;
        return 0.5 * w * r.squaredNorm() + 0.5 * gamma * w * u.entries().squaredNorm();
    };
    p.objective.grad = [S, yv, gamma](const Vector& u) {
        const Eigen::VectorXd r = S * u.entries() - yv;
        return u.like(S * r + gamma * u.entries());
    };
    p.objective.hess_form = [S, gamma, w](const Vector&, const Vector& a, const Vector& b) {
        return w * (S * a.entries()).dot(S * b.entries()) +
               gamma * w * a.entries().dot(b.entries());
    };

    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    const double step = 1.0 / (0.2 + gamma);
    for (int it = 0; it < 8000; ++it) {
        const Eigen::VectorXd g = S * (S * u - yv) + gamma * u;
        Eigen::VectorXd next = (u - step * g).cwiseMax(-1.0).cwiseMin(1.0);
        const double move = (next - u).lpNorm<Eigen::Infinity>();
        u = next;
        if (move < 1e-15)
            break;
    }
    p.point = grid.vector(u, NormTag::weighted_l2);
    return p;
}

BuiltinProblem state_constrained_ball() {
    BuiltinProblem p;
    p.name = "state_constrained_ball";
    const double lambda = 1.0;

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
    lc.convex_hint = true;
    p.set = make_level_set(lc);

    const Vector xbar = ev({0.0, 1.0});
    p.point = xbar;
    p.objective.eval = [lambda, xbar](const Vector& x) {
        const Vector d = x - xbar;
        return -2.0 * lambda * x.entries()[1] - 0.5 * pairing(d, d);
    };
    p.objective.grad = [lambda, xbar](const Vector& x) {
        Eigen::VectorXd g = -(x - xbar).entries();
        g[1] -= 2.0 * lambda;
        return x.like(g);
    };
    p.objective.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
        return -pairing(a, b);
    };
    return p;
}

BuiltinProblem power_epigraph(bool flipped) {
    BuiltinProblem p;
    p.name = flipped ? "power_epigraph_flipped" : "power_epigraph";
    p.set = make_power_epigraph(1.5, flipped ? PowerEpigraph::Side::below
                                             : PowerEpigraph::Side::above);
    p.point = ev({0.0, 0.0});
    if (flipped) {
        p.objective.eval = [](const Vector& x) { return -x.entries()[1]; };
        p.objective.grad = [](const Vector& x) { return x.like(Eigen::Vector2d(0.0, -1.0)); };
        p.objective.hess_form = [](const Vector&, const Vector&, const Vector&) { return 0.0; };
    } else {
        p.objective.eval = [](const Vector& x) {
            return x.entries()[1] - 10.0 * x.entries()[0] * x.entries()[0];
        };
        p.objective.grad = [](const Vector& x) {
            return x.like(Eigen::Vector2d(-20.0 * x.entries()[0], 1.0));
        };
        p.objective.hess_form = [](const Vector&, const Vector& a, const Vector& b) {
            return -20.0 * a.entries()[0] * b.entries()[0];
        };
        // growth ratios turn positive only once the cusp term outweighs the
        // indefinite quadratic, at first coordinates below 1/100
        p.soc.growth.eps_schedule = {4e-3, 2e-3, 1e-3, 5e-4};
    }
    return p;
}

// deepest dyadic level whose band still spans a few cells of the interval
int interval_levels(int cells) {
    const double limit = std::log2(0.2 * cells / 2.0);
    const int lv = static_cast<int>(std::floor(limit));
    return std::min(7, std::max(1, lv));
}

BuiltinProblem bangbang_1d(int cells) {
    BuiltinProblem p;
    p.name = "bangbang_1d";
    const Grid grid = Grid::interval(0.0, 1.0, cells);
    p.field = make_adjoint(
        grid, [](const Eigen::VectorXd& xi) { return xi[0] - 0.5; },
        [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); });
    p.set = make_bangbang(grid);
    p.objective = linear_surface_objective(p.field);
    Eigen::VectorXd xb = -p.field.values.array().sign();
    p.point = grid.vector(xb, NormTag::weighted_l1);
    p.surface = true;
    p.density_levels = {1.0, -2.0};
    p.surface_cfg.levels = interval_levels(cells);
    return p;
}

BuiltinProblem bangbang_2d_circle(int cells) {
    BuiltinProblem p;
    p.name = "bangbang_2d_circle";
    const Grid grid = Grid::box(-1.0, 1.0, -1.0, 1.0, cells);
    p.field = make_adjoint(
        grid,
        [](const Eigen::VectorXd& xi) { return xi.squaredNorm() - 0.25; },
        [](const Eigen::VectorXd& xi) { return Eigen::VectorXd(2.0 * xi); });
    p.set = make_bangbang(grid);
    p.objective = linear_surface_objective(p.field);
    Eigen::VectorXd xb = -p.field.values.array().sign();
    p.point = grid.vector(xb, NormTag::weighted_l1);
    p.surface = true;
    p.density_levels = {1.0};
    return p;
}

} // namespace

Objective linear_surface_objective(const AdjointField& f) {
    const Vector phi = f.grid.vector(f.values, NormTag::weighted_l1);
    Objective J;
    J.eval = [phi](const Vector& u) { return pairing(phi, u); };
    J.grad = [phi](const Vector& u) { return u.like(phi.entries()); };
    J.hess_form = [](const Vector&, const Vector&, const Vector&) { return 0.0; };
    J.kernel = [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
    return J;
}

const std::vector<std::pair<std::string, std::string>>& builtin_listing() {
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"box_qp", "quadratic objective on a box with mixed active bounds"},
        {"control_constrained",
         "smoothing-kernel tracking control with pointwise bounds at a projected-gradient "
         "fixed point"},
        {"state_constrained_ball",
         "boundary minimizer on the unit disc; set curvature pays the multiplier"},
        {"power_epigraph",
         "power-cusp epigraph where infinite curvature carries an indefinite objective"},
        {"power_epigraph_flipped",
         "downward power cusp where the candidate admits second-order descent"},
        {"bangbang_1d", "linear switching field on the unit interval"},
        {"bangbang_2d_circle", "circular switching curve in the plane with surface quadrature"},
    };
    return rows;
}

namespace {

BuiltinProblem dispatch(const std::string& name, int cells) {
    if (name == "control_constrained")
        return control_constrained(cells ? cells : 20);
    if (name == "bangbang_1d") {
        if (cells && cells < 8)
            throw config_error("bangbang_1d needs at least 8 cells");
        return bangbang_1d(cells ? cells : 2048);
    }
    if (name == "bangbang_2d_circle") {
        if (cells && cells < 16)
            throw config_error("bangbang_2d_circle needs at least 16 cells per axis");
        return bangbang_2d_circle(cells ? cells : 256);
    }
    if (cells != 0)
        throw config_error("grid.cells is not meaningful for example '" + name + "'");
    if (name == "box_qp")
        return box_qp();
    if (name == "state_constrained_ball")
        return state_constrained_ball();
    if (name == "power_epigraph")
        return power_epigraph(false);
    if (name == "power_epigraph_flipped")
        return power_epigraph(true);
    throw config_error("unknown example '" + name + "'");
}

} // namespace

BuiltinProblem make_builtin(const std::string& name, int cells) {
    if (cells < 0)
        throw config_error("grid.cells must be positive");
    BuiltinProblem p = dispatch(name, cells);
    for (const auto& [n, d] : builtin_listing())
        if (n == p.name)
            p.description = d;
    return p;
}

} // namespace curvlab
