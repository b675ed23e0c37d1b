#pragma once

// Arithmetic expressions over x1, x2, z, p1, p2 (x and y alias x1 and x2).
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?          right associative
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
//
// Functions: sin cos tan exp log sqrt abs. Constant: pi.

#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

#include <fmt/format.h>

#include "error.hpp"
#include "gamma_metric.hpp"

namespace holderlab {

/// Values bound to x1, x2, z, p1, p2.
using ExprVars = std::array<double, 5>;

class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text) {
        Parser p{text, 0};
        Expression e;
        e.source_ = std::string(text);
        e.root_ = p.expr();
        p.skip();
        if (p.pos != text.size()) p.fail("unexpected trailing input");
        return e;
    }

    double operator()(const ExprVars& v) const { return eval(*root_, v); }
    double operator()(const Point2& x, double z = 0.0, const Point2& p = {0.0, 0.0}) const {
        return eval(*root_, {x[0], x[1], z, p[0], p[1]});
    }

    const std::string& source() const noexcept { return source_; }

    /// True when the expression reads any of z, p1, p2.
    bool uses_solution() const { return root_ && reads(*root_, 2, 5); }

private:
    enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Exp, Log, Sqrt, Abs };
    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        std::size_t var = 0;
        std::shared_ptr<const Node> a, b;
    };
    using Ptr = std::shared_ptr<const Node>;

    static Ptr make(Op op, Ptr a = {}, Ptr b = {}) {
        auto n = std::make_shared<Node>();
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    struct Parser {
        std::string_view s;
        std::size_t pos;

        [[noreturn]] void fail(const std::string& what) const {
            throw InputError(fmt::format("expression '{}': {} at column {}", s, what, pos + 1));
        }
        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        Ptr expr() {
            Ptr left = term();
            for (;;) {
                if (accept('+')) left = make(Op::Add, left, term());
                else if (accept('-')) left = make(Op::Sub, left, term());
                else return left;
            }
        }
        Ptr term() {
            Ptr left = unary();
            for (;;) {
                if (accept('*')) left = make(Op::Mul, left, unary());
                else if (accept('/')) left = make(Op::Div, left, unary());
                else return left;
            }
        }
        Ptr unary() {
            if (accept('-')) return make(Op::Neg, unary());
            if (accept('+')) return unary();
            return power();
        }
        Ptr power() {
            Ptr base = atom();
            if (accept('^')) return make(Op::Pow, base, unary());
            return base;
        }
        Ptr atom() {
            skip();
            if (pos >= s.size()) fail("unexpected end of input");
            if (accept('(')) {
                Ptr e = expr();
                if (!accept(')')) fail("expected ')'");
                return e;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c))) return name();
            fail(fmt::format("unexpected character '{}'", c));
        }
        Ptr number() {
            const std::size_t start = pos;
            while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
            if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                std::size_t q = pos + 1;
                if (q < s.size() && (s[q] == '+' || s[q] == '-')) ++q;
                if (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q]))) {
                    pos = q;
                    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
                }
            }
            const std::string tok(s.substr(start, pos - start));
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) fail(fmt::format("bad number '{}'", tok));
            auto n = std::make_shared<Node>();
            n->value = v;
            return n;
        }
        Ptr name() {
            const std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
            const std::string_view id = s.substr(start, pos - start);
            static constexpr std::pair<std::string_view, Op> funcs[] = {
                {"sin", Op::Sin}, {"cos", Op::Cos},   {"tan", Op::Tan}, {"exp", Op::Exp},
                {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"abs", Op::Abs}};
            for (auto [fname, op] : funcs)
                if (id == fname) {
                    if (!accept('(')) fail(fmt::format("expected '(' after {}", fname));
                    Ptr arg = expr();
                    if (!accept(')')) fail("expected ')'");
                    return make(op, arg);
                }
            static constexpr std::pair<std::string_view, std::size_t> vars[] = {
                {"x1", 0}, {"x2", 1}, {"x", 0}, {"y", 1}, {"z", 2}, {"p1", 3}, {"p2", 4}};
            for (auto [vname, idx] : vars)
                if (id == vname) {
                    auto n = std::make_shared<Node>();
                    n->op = Op::Var;
                    n->var = idx;
                    return n;
                }
            if (id == "pi") {
                auto n = std::make_shared<Node>();
                n->value = std::numbers::pi;
                return n;
            }
            pos = start;
            fail(fmt::format("unknown name '{}'", id));
        }
    };

    static double eval(const Node& n, const ExprVars& v) {
        switch (n.op) {
            case Op::Const: return n.value;
            case Op::Var: return v[n.var];
            case Op::Neg: return -eval(*n.a, v);
            case Op::Add: return eval(*n.a, v) + eval(*n.b, v);
            case Op::Sub: return eval(*n.a, v) - eval(*n.b, v);
            case Op::Mul: return eval(*n.a, v) * eval(*n.b, v);
            case Op::Div: return eval(*n.a, v) / eval(*n.b, v);
            case Op::Pow: return std::pow(eval(*n.a, v), eval(*n.b, v));
            case Op::Sin: return std::sin(eval(*n.a, v));
            case Op::Cos: return std::cos(eval(*n.a, v));
            case Op::Tan: return std::tan(eval(*n.a, v));
            case Op::Exp: return std::exp(eval(*n.a, v));
            case Op::Log: return std::log(eval(*n.a, v));
            case Op::Sqrt: return std::sqrt(eval(*n.a, v));
            case Op::Abs: return std::abs(eval(*n.a, v));
        }
        return 0.0;
    }

    static bool reads(const Node& n, std::size_t lo, std::size_t hi) {
        if (n.op == Op::Var) return n.var >= lo && n.var < hi;
        return (n.a && reads(*n.a, lo, hi)) || (n.b && reads(*n.b, lo, hi));
    }

    std::string source_;
    Ptr root_;
};

}  // namespace holderlab
