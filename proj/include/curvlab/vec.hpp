#pragma once

#include <Eigen/Core>
#include <memory>

#include "curvlab/errors.hpp"

namespace curvlab {

// Which norm a vector carries. Weighted tags attach cell volumes of the grid
// the vector lives on; the weighted_l1 norm is the total-variation norm of the
// absolutely continuous measure with this density.
enum class NormTag { euclidean, weighted_l1, weighted_l2 };

using WeightsPtr = std::shared_ptr<const Eigen::VectorXd>;

class Vector {
  public:
    Vector() = default;

    static Vector euclidean(Eigen::VectorXd v);
    static Vector weighted(Eigen::VectorXd v, NormTag tag, WeightsPtr w);

    Eigen::Index size() const { return v_.size(); }
    const Eigen::VectorXd& entries() const { return v_; }
    Eigen::VectorXd& entries() { return v_; }
    double operator[](Eigen::Index i) const { return v_[i]; }
    NormTag tag() const { return tag_; }
    const WeightsPtr& weights() const { return w_; }

    double norm() const;

    // Same tag/weights, new entries.
    Vector like(Eigen::VectorXd v) const;

    Vector operator+(const Vector& o) const;
    Vector operator-(const Vector& o) const;
    Vector operator*(double a) const;

  private:
    Eigen::VectorXd v_;
    NormTag tag_ = NormTag::euclidean;
    WeightsPtr w_;
};

// Duality product between a functional and a direction. Euclidean vectors
// pair by the dot product; weighted vectors pair by the L2(weights) integral.
// Tags may differ between the two arguments as long as the weights agree.
double pairing(const Vector& phi, const Vector& h);

void require_same_space(const Vector& a, const Vector& b, const char* where);

// Compensated (Neumaier) summation; the level-set and Taylor residual
// accumulations divide by t^2 and cannot afford naive rounding.
class KahanSum {
  public:
    void add(double x) {
        double t = s_ + x;
        if (std::abs(s_) >= std::abs(x))
            c_ += (s_ - t) + x;
        else
            c_ += (x - t) + s_;
        s_ = t;
    }
    double value() const { return s_ + c_; }

  private:
    double s_ = 0.0, c_ = 0.0;
};

} // namespace curvlab
