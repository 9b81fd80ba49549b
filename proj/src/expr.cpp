#include "curvlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "curvlab/errors.hpp"

namespace curvlab {

struct Expr::Node {
    enum class Op { constant, variable, add, sub, mul, div, pow, neg, call };
    Op op = Op::constant;
    double value = 0.0;
    int var = 0; // 0-based
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr leaf_constant(double v) {
    auto n = std::make_shared<Node>();
    n->op = Node::Op::constant;
    n->value = v;
    return n;
}

NodePtr combine(Node::Op op, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

struct Parser {
    const std::string& src;
    size_t pos = 0;
    int max_var = 0;

    explicit Parser(const std::string& s) : src(s) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw config_error("expression: " + what + " at position " + std::to_string(pos) +
                           " in \"" + src + "\"");
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
            ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    NodePtr parse_sum() {
        NodePtr left = parse_term();
        for (;;) {
            if (eat('+'))
                left = combine(Node::Op::add, left, parse_term());
            else if (eat('-'))
                left = combine(Node::Op::sub, left, parse_term());
            else
                return left;
        }
    }

    NodePtr parse_term() {
        NodePtr left = parse_unary();
        for (;;) {
            if (eat('*'))
                left = combine(Node::Op::mul, left, parse_unary());
            else if (eat('/'))
                left = combine(Node::Op::div, left, parse_unary());
            else
                return left;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) {
            auto n = std::make_shared<Node>();
            n->op = Node::Op::neg;
            n->a = parse_unary();
            return n;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^'))
            return combine(Node::Op::pow, base, parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos >= src.size())
            fail("unexpected end of input");
        const char c = src[pos];
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_sum();
            if (!eat(')'))
                fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)))
            return parse_ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin)
            fail("malformed number");
        pos += static_cast<size_t>(end - begin);
        return leaf_constant(v);
    }

    NodePtr parse_ident() {
        const size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        const std::string name = src.substr(start, pos - start);

        static const struct {
            const char* name;
            double (*fn)(double);
        } funcs[] = {{"abs", [](double v) { return std::fabs(v); }},
                     {"sqrt", [](double v) { return std::sqrt(v); }},
                     {"sin", [](double v) { return std::sin(v); }},
                     {"cos", [](double v) { return std::cos(v); }},
                     {"exp", [](double v) { return std::exp(v); }}};
        for (const auto& f : funcs)
            if (name == f.name) {
                if (!eat('('))
                    fail("expected '(' after " + name);
                NodePtr arg = parse_sum();
                if (!eat(')'))
                    fail("expected ')'");
                auto n = std::make_shared<Node>();
                n->op = Node::Op::call;
                n->fn = f.fn;
                n->a = std::move(arg);
                return n;
            }

        // x<k> or xi<k>
        size_t digits = 0;
        std::string head;
        if (name.size() > 1 && name[0] == 'x' && name[1] == 'i')
            digits = 2;
        else if (!name.empty() && name[0] == 'x')
            digits = 1;
        else
            fail("unknown identifier '" + name + "'");
        head = name.substr(digits);
        if (head.empty())
            fail("variable '" + name + "' needs an index");
        for (char d : head)
            if (!std::isdigit(static_cast<unsigned char>(d)))
                fail("unknown identifier '" + name + "'");
        const int idx = std::atoi(head.c_str());
        if (idx < 1)
            fail("variable index must start at 1 in '" + name + "'");
        max_var = std::max(max_var, idx);
        auto n = std::make_shared<Node>();
        n->op = Node::Op::variable;
        n->var = idx - 1;
        return n;
    }
};

double eval_node(const Node& n, const Eigen::VectorXd& x) {
    switch (n.op) {
    case Node::Op::constant:
        return n.value;
    case Node::Op::variable:
        return x[n.var];
    case Node::Op::add:
        return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Node::Op::sub:
        return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Node::Op::mul:
        return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Node::Op::div:
        return eval_node(*n.a, x) / eval_node(*n.b, x);
    case Node::Op::pow:
        return std::pow(eval_node(*n.a, x), eval_node(*n.b, x));
    case Node::Op::neg:
        return -eval_node(*n.a, x);
    case Node::Op::call:
        return n.fn(eval_node(*n.a, x));
    }
    return 0.0;
}

} // namespace

double Expr::eval(const Eigen::VectorXd& x) const {
    if (!root_)
        throw structural_error("expression: eval on an empty expression");
    if (x.size() < max_var_)
        throw structural_error("expression: point has " + std::to_string(x.size()) +
                               " coordinates, expression uses x" + std::to_string(max_var_));
    return eval_node(*root_, x);
}

Expr parse_expr(const std::string& src) {
    Parser p(src);
    Expr e;
    e.root_ = p.parse_sum();
    p.skip_ws();
    if (p.pos != src.size())
        p.fail("trailing input");
    e.src_ = src;
    e.max_var_ = p.max_var;
    return e;
}

} // namespace curvlab
