#include "curvlab/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace curvlab {

namespace {

constexpr double kGradRelTol = 1e-5;
constexpr double kHessRelTol = 1e-4;
constexpr double kSymTol = 1e-12;
constexpr int kMaxProbes = 12;

std::vector<int> probe_coords(Eigen::Index n, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= kMaxProbes)
        return idx;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(kMaxProbes);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Vector unit_direction(const Vector& x, int coord) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e[coord] = 1.0;
    return x.like(std::move(e));
}

Vector random_direction(const Vector& x, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd v(x.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = nd(rng);
    double n = v.norm();
    if (n == 0.0)
        v[0] = 1.0, n = 1.0;
    return x.like(v / n);
}

} // namespace

ConsistencyReport check_objective(const Objective& J, std::span<const Vector> points,
                                  std::uint64_t seed) {
    if (!J.complete())
        throw structural_error("objective callbacks incomplete");
    if (points.empty())
        throw structural_error("objective check needs at least one point");

    ConsistencyReport rep;
    rep.ok = true;
    std::ostringstream why;

    std::mt19937_64 rng(seed);
    for (const Vector& x : points) {
        const double fx = J.eval(x);
        if (!std::isfinite(fx))
            throw structural_error("objective value not finite at a check point");
        const Vector g = J.grad(x);
        require_same_space(g, x, "check_objective");

        const double xscale = 1.0 + x.entries().cwiseAbs().maxCoeff();
        const auto coords = probe_coords(x.size(), rng);

        // grad vs central differences of eval, one coordinate at a time
        for (int c : coords) {
            const double eps = 1e-6 * (1.0 + std::abs(x[c]));
            Vector e = unit_direction(x, c);
            const double fp = J.eval(x + e * eps);
            const double fm = J.eval(x - e * eps);
            const double fd = (fp - fm) / (2.0 * eps);
            const double gi = pairing(g, e);
            const double rel = std::abs(gi - fd) / (1.0 + std::max(std::abs(gi), std::abs(fd)));
            rep.worst_grad_rel = std::max(rep.worst_grad_rel, rel);
            if (rel > kGradRelTol && rep.ok) {
                rep.ok = false;
                why << "grad mismatch at coord " << c << ": callback " << gi << " vs fd " << fd;
            }
        }

        // hess_form vs central differences of grad along a couple of
        // directions, tested against the same probe coordinates
        for (int pass = 0; pass < 2; ++pass) {
            Vector d = random_direction(x, rng);
            const double eps = 1e-5 * xscale;
            const Vector gp = J.grad(x + d * eps);
            const Vector gm = J.grad(x - d * eps);
            for (int c : coords) {
                Vector e = unit_direction(x, c);
                const double fd = (pairing(gp, e) - pairing(gm, e)) / (2.0 * eps);
                const double hf = J.hess_form(x, d, e);
                const double rel =
                    std::abs(hf - fd) / (1.0 + std::max(std::abs(hf), std::abs(fd)));
                rep.worst_hess_rel = std::max(rep.worst_hess_rel, rel);
                if (rel > kHessRelTol && rep.ok) {
                    rep.ok = false;
                    why << "hessian mismatch along coord " << c;
                }
            }
        }

        // symmetry of the bilinear form
        for (int pass = 0; pass < 3; ++pass) {
            Vector a = random_direction(x, rng);
            Vector b = random_direction(x, rng);
            const double ab = J.hess_form(x, a, b);
            const double ba = J.hess_form(x, b, a);
            const double gap = std::abs(ab - ba) / (1.0 + std::abs(ab));
            rep.worst_symmetry = std::max(rep.worst_symmetry, gap);
            if (gap > kSymTol && rep.ok) {
                rep.ok = false;
                why << "hessian form not symmetric: " << ab << " vs " << ba;
            }
        }
    }

    rep.detail = why.str();
    return rep;
}

} // namespace curvlab
