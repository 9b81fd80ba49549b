#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>

#include "curvlab/vec.hpp"

namespace curvlab {

// Uniform cell-centered grid on an interval (d=1) or an axis-aligned box
// (d=2) with the same cell count per axis. Node i sits at the center of cell
// i; in 2d the flat index is iy*cells + ix (x fastest).
struct Grid {
    int dim = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{1.0, 1.0};
    int cells = 1;

    Eigen::MatrixXd nodes; // count() x dim
    WeightsPtr volumes;    // length count(), all equal for a uniform grid

    static Grid interval(double a, double b, int cells);
    static Grid box(double a1, double b1, double a2, double b2, int cells);

    int count() const { return dim == 1 ? cells : cells * cells; }
    double width(int axis) const { return (hi[axis] - lo[axis]) / cells; }
    double cell_volume() const { return dim == 1 ? width(0) : width(0) * width(1); }
    int flat(int ix, int iy) const { return iy * cells + ix; }

    Vector vector(Eigen::VectorXd values, NormTag tag) const;
    Vector constant(double value, NormTag tag) const;
    Vector sample(const std::function<double(const Eigen::VectorXd&)>& f, NormTag tag) const;

    bool same_layout(const Grid& o) const;
};

} // namespace curvlab
