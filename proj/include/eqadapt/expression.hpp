#ifndef EQADAPT_EXPRESSION_HPP
#define EQADAPT_EXPRESSION_HPP

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eqadapt/errors.hpp"

namespace eqadapt
{

/// Small arithmetic expression used for inline regressor entries and
/// trajectories in scenario files, e.g. "x2*sin(x1)" or "10*(1-exp(-0.1*t))".
///
/// Supports + - * / ^, unary minus, parentheses, the constant pi and the
/// functions sin cos tan exp log sqrt abs tanh. Variables are bound by
/// position at compile time.
class Expression
{
public:
    Expression() = default;

    Expression(std::string source, const std::vector<std::string> &variables) : source_(std::move(source))
    {
        Parser parser{source_, variables, 0};
        root_ = parser.parse_expr();
        parser.skip_ws();
        if (parser.pos != source_.size()) {
            parser.fail("unexpected trailing input");
        }
    }

    const std::string &source() const noexcept { return source_; }

    double operator()(std::span<const double> vars) const { return root_ ? root_->eval(vars) : 0.0; }

private:
    struct Node {
        enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
        Op op = Op::Const;
        double value = 0.0;
        std::size_t var = 0;
        double (*fn)(double) = nullptr;
        std::shared_ptr<const Node> lhs, rhs;

        double eval(std::span<const double> vars) const
        {
            switch (op) {
            case Op::Const:
                return value;
            case Op::Var:
                return vars[var];
            case Op::Neg:
                return -lhs->eval(vars);
            case Op::Add:
                return lhs->eval(vars) + rhs->eval(vars);
            case Op::Sub:
                return lhs->eval(vars) - rhs->eval(vars);
            case Op::Mul:
                return lhs->eval(vars) * rhs->eval(vars);
            case Op::Div:
                return lhs->eval(vars) / rhs->eval(vars);
            case Op::Pow:
                return std::pow(lhs->eval(vars), rhs->eval(vars));
            case Op::Call:
                return fn(lhs->eval(vars));
            }
            return 0.0;
        }
    };
    using NodePtr = std::shared_ptr<const Node>;

    static std::shared_ptr<Node> make(Node::Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr)
    {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    struct Parser {
        const std::string &src;
        const std::vector<std::string> &vars;
        std::size_t pos;

        [[noreturn]] void fail(const std::string &msg) const
        {
            throw Error(ErrorKind::Parse, "expression '" + src + "' at offset " + std::to_string(pos) + ": " + msg);
        }

        void skip_ws()
        {
            while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) {
                ++pos;
            }
        }

        bool accept(char c)
        {
            skip_ws();
            if (pos < src.size() && src[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        NodePtr parse_expr()
        {
            auto lhs = parse_term();
            for (;;) {
                if (accept('+')) {
                    lhs = make(Node::Op::Add, lhs, parse_term());
                } else if (accept('-')) {
                    lhs = make(Node::Op::Sub, lhs, parse_term());
                } else {
                    return lhs;
                }
            }
        }

        NodePtr parse_term()
        {
            auto lhs = parse_unary();
            for (;;) {
                if (accept('*')) {
                    lhs = make(Node::Op::Mul, lhs, parse_unary());
                } else if (accept('/')) {
                    lhs = make(Node::Op::Div, lhs, parse_unary());
                } else {
                    return lhs;
                }
            }
        }

        NodePtr parse_unary()
        {
            if (accept('-')) {
                return make(Node::Op::Neg, parse_unary());
            }
            if (accept('+')) {
                return parse_unary();
            }
            return parse_power();
        }

        // right associative, binds tighter than unary minus on its left
        NodePtr parse_power()
        {
            auto base = parse_primary();
            if (accept('^')) {
                return make(Node::Op::Pow, base, parse_unary());
            }
            return base;
        }

        NodePtr parse_primary()
        {
            skip_ws();
            if (pos >= src.size()) {
                fail("unexpected end of input");
            }
            const char c = src[pos];
            if (accept('(')) {
                auto inner = parse_expr();
                if (!accept(')')) {
                    fail("expected ')'");
                }
                return inner;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                double v = 0.0;
                auto [end, ec] = std::from_chars(src.data() + pos, src.data() + src.size(), v);
                if (ec != std::errc()) {
                    fail("malformed number");
                }
                pos = static_cast<std::size_t>(end - src.data());
                auto n = std::make_shared<Node>();
                n->value = v;
                return n;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const auto start = pos;
                while (pos < src.size() &&
                       (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
                    ++pos;
                }
                const std::string name = src.substr(start, pos - start);
                if (accept('(')) {
                    auto arg = parse_expr();
                    if (!accept(')')) {
                        fail("expected ')' after argument of " + name);
                    }
                    auto n = make(Node::Op::Call, arg);
                    n->fn = function(name);
                    return n;
                }
                for (std::size_t i = 0; i < vars.size(); ++i) {
                    if (vars[i] == name) {
                        auto n = std::make_shared<Node>();
                        n->op = Node::Op::Var;
                        n->var = i;
                        return n;
                    }
                }
                if (name == "pi") {
                    auto n = std::make_shared<Node>();
                    n->value = std::numbers::pi;
                    return n;
                }
                fail("unknown identifier '" + name + "'");
            }
            fail(std::string("unexpected character '") + c + "'");
        }

        double (*function(const std::string &name) const)(double)
        {
            static const std::map<std::string, double (*)(double)> table = {
                {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
                {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
                {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
                {"abs", [](double v) { return std::fabs(v); }},  {"tanh", [](double v) { return std::tanh(v); }},
            };
            auto it = table.find(name);
            if (it == table.end()) {
                fail("unknown function '" + name + "'");
            }
            return it->second;
        }
    };

    std::string source_;
    NodePtr root_;
};

} // namespace eqadapt

#endif
