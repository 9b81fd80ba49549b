#include "curvlab/vec.hpp"

#include <cmath>

namespace curvlab {

namespace {

void require_finite(const Eigen::VectorXd& v) {
    if (!v.allFinite())
        throw structural_error("vector has non-finite entries");
}

} // namespace

Vector Vector::euclidean(Eigen::VectorXd v) {
    require_finite(v);
    Vector out;
    out.v_ = std::move(v);
    out.tag_ = NormTag::euclidean;
    return out;
}

Vector Vector::weighted(Eigen::VectorXd v, NormTag tag, WeightsPtr w) {
    require_finite(v);
    if (tag == NormTag::euclidean)
        return euclidean(std::move(v));
    if (!w)
        throw structural_error("weighted vector needs cell volumes");
    if (w->size() != v.size())
        throw structural_error("weight count does not match vector length");
    Vector out;
    out.v_ = std::move(v);
    out.tag_ = tag;
    out.w_ = std::move(w);
    return out;
}

double Vector::norm() const {
    switch (tag_) {
    case NormTag::euclidean:
        return v_.norm();
    case NormTag::weighted_l1:
        return w_->dot(v_.cwiseAbs());
    case NormTag::weighted_l2:
        return std::sqrt(w_->dot(v_.cwiseAbs2()));
    }
    return 0.0;
}

Vector Vector::like(Eigen::VectorXd v) const {
    require_finite(v);
    if (v.size() != v_.size())
        throw structural_error("like(): length mismatch");
    Vector out;
    out.v_ = std::move(v);
    out.tag_ = tag_;
    out.w_ = w_;
    return out;
}

Vector Vector::operator+(const Vector& o) const {
    require_same_space(*this, o, "operator+");
    return like(v_ + o.v_);
}

Vector Vector::operator-(const Vector& o) const {
    require_same_space(*this, o, "operator-");
    return like(v_ - o.v_);
}

Vector Vector::operator*(double a) const {
    if (!std::isfinite(a))
        throw structural_error("scaling by non-finite factor");
    return like(v_ * a);
}

void require_same_space(const Vector& a, const Vector& b, const char* where) {
    if (a.size() != b.size())
        throw structural_error(std::string(where) + ": length mismatch");
    const bool aw = a.tag() != NormTag::euclidean;
    const bool bw = b.tag() != NormTag::euclidean;
    if (aw != bw)
        throw structural_error(std::string(where) + ": mixing weighted and euclidean vectors");
    if (aw && a.weights() != b.weights() && *a.weights() != *b.weights())
        throw structural_error(std::string(where) + ": weight vectors differ");
}

double pairing(const Vector& phi, const Vector& h) {
    require_same_space(phi, h, "pairing");
    if (phi.tag() == NormTag::euclidean)
        return phi.entries().dot(h.entries());
    const Eigen::VectorXd& w = *phi.weights();
    return (w.array() * phi.entries().array() * h.entries().array()).sum();
}

} // namespace curvlab
