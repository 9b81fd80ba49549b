#include "curvlab/grid.hpp"

namespace curvlab {

namespace {

void check_bounds(double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        throw structural_error("grid bounds must be finite with lo < hi");
}

WeightsPtr uniform_volumes(int n, double vol) {
    auto w = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::Constant(n, vol));
    return w;
}

} // namespace

Grid Grid::interval(double a, double b, int cells) {
    check_bounds(a, b);
    if (cells < 1)
        throw structural_error("grid needs at least one cell");
    Grid g;
    g.dim = 1;
    g.lo = {a, 0.0};
    g.hi = {b, 0.0};
    g.cells = cells;
    const double h = (b - a) / cells;
    g.nodes.resize(cells, 1);
    for (int i = 0; i < cells; ++i)
        g.nodes(i, 0) = a + (i + 0.5) * h;
    g.volumes = uniform_volumes(cells, h);
    return g;
}

Grid Grid::box(double a1, double b1, double a2, double b2, int cells) {
    check_bounds(a1, b1);
    check_bounds(a2, b2);
    if (cells < 1)
        throw structural_error("grid needs at least one cell");
    Grid g;
    g.dim = 2;
    g.lo = {a1, a2};
    g.hi = {b1, b2};
    g.cells = cells;
    const double hx = (b1 - a1) / cells;
    const double hy = (b2 - a2) / cells;
    g.nodes.resize(cells * cells, 2);
    for (int iy = 0; iy < cells; ++iy)
        for (int ix = 0; ix < cells; ++ix) {
            const int i = g.flat(ix, iy);
            g.nodes(i, 0) = a1 + (ix + 0.5) * hx;
            g.nodes(i, 1) = a2 + (iy + 0.5) * hy;
        }
    g.volumes = uniform_volumes(cells * cells, hx * hy);
    return g;
}

Vector Grid::vector(Eigen::VectorXd values, NormTag tag) const {
    if (values.size() != count())
        throw structural_error("grid vector length does not match node count");
    return Vector::weighted(std::move(values), tag, volumes);
}

Vector Grid::constant(double value, NormTag tag) const {
    return vector(Eigen::VectorXd::Constant(count(), value), tag);
}

Vector Grid::sample(const std::function<double(const Eigen::VectorXd&)>& f, NormTag tag) const {
    Eigen::VectorXd v(count());
    for (int i = 0; i < count(); ++i)
        v[i] = f(nodes.row(i).transpose());
    return vector(std::move(v), tag);
}

bool Grid::same_layout(const Grid& o) const {
    return dim == o.dim && cells == o.cells && lo == o.lo && hi == o.hi;
}

} // namespace curvlab
