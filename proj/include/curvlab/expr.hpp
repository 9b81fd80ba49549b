#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>

namespace curvlab {

// Compiled arithmetic expression over variables x1..xn (alias xi1, xi2 for
// the first two, used when the point is a spatial coordinate). Grammar:
// + - * / ^ with ^ binding tightest and associating right, unary minus,
// parentheses, decimal literals, and the functions abs sqrt sin cos exp.
class Expr {
  public:
    double eval(const Eigen::VectorXd& x) const;
    // highest variable index referenced, 1-based; 0 for constants
    int max_var() const { return max_var_; }
    const std::string& source() const { return src_; }

    struct Node;

  private:
    friend Expr parse_expr(const std::string& src);
    std::shared_ptr<const Node> root_;
    std::string src_;
    int max_var_ = 0;
};

// Throws config_error naming the offending position on malformed input.
Expr parse_expr(const std::string& src);

} // namespace curvlab
