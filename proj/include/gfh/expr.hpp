#pragma once

// Small expression language for closed-form generating families:
// constants, named variables, + - * /, integer powers, sqrt and the
// clamped quintic smoothstep S(t) = 6t^5 - 15t^4 + 10t^3 on [0, 1].
//
// Nodes are immutable and shared. The smart constructors fold constants
// and drop neutral elements, so derivatives stay small.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gfh/error.hpp"

namespace gfh {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sqrt, Smooth };

/// Highest smoothstep derivative that is not identically zero.
inline constexpr int kSmoothMaxOrder = 5;

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;  // Const
    int k = 0;           // Pow exponent, Smooth derivative order
    std::string name;    // Var
    NodePtr a, b;
};

/// k-th derivative of the clamped quintic smoothstep.
inline double smoothstep(double t, int k = 0) {
    if (k == 0) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    }
    if (t <= 0.0 || t >= 1.0) return 0.0;
    switch (k) {
        case 1: return 30.0 * t * t * (1.0 - t) * (1.0 - t);
        case 2: return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
        case 3: return 60.0 * (1.0 - 6.0 * t + 6.0 * t * t);
        case 4: return 60.0 * (12.0 * t - 6.0);
        case 5: return 720.0;
        default: return 0.0;
    }
}

class Expr {
public:
    Expr() : Expr(0.0) {}
    Expr(double c) : node_(make_const(c)) {}
    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    static Expr variable(std::string name) {
        auto n = std::make_shared<Node>();
        n->op = Op::Var;
        n->name = std::move(name);
        return Expr(std::move(n));
    }

    const Node& node() const { return *node_; }
    const NodePtr& ptr() const { return node_; }
    Op op() const { return node_->op; }

    bool is_const() const { return node_->op == Op::Const; }
    bool is_const(double c) const { return is_const() && node_->value == c; }
    double value() const { return node_->value; }

private:
    static NodePtr make_const(double c) {
        auto n = std::make_shared<Node>();
        n->op = Op::Const;
        n->value = c;
        return n;
    }

    NodePtr node_;
};

namespace detail {

inline Expr make(Op op, const Expr& a, const Expr& b = Expr(), int k = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = a.ptr();
    if (op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div) n->b = b.ptr();
    n->k = k;
    return Expr(std::move(n));
}

inline double ipow(double x, int k) {
    if (k < 0) return 1.0 / ipow(x, -k);
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

}  // namespace detail

inline Expr operator-(const Expr& a) {
    if (a.is_const()) return Expr(-a.value());
    if (a.op() == Op::Neg) return Expr(a.node().a);
    return detail::make(Op::Neg, a);
}

inline Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return Expr(a.value() + b.value());
    if (a.is_const(0.0)) return b;
    if (b.is_const(0.0)) return a;
    return detail::make(Op::Add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return Expr(a.value() - b.value());
    if (b.is_const(0.0)) return a;
    if (a.is_const(0.0)) return -b;
    return detail::make(Op::Sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return Expr(a.value() * b.value());
    if (a.is_const(0.0) || b.is_const(0.0)) return Expr(0.0);
    if (a.is_const(1.0)) return b;
    if (b.is_const(1.0)) return a;
    if (a.is_const(-1.0)) return -b;
    if (b.is_const(-1.0)) return -a;
    return detail::make(Op::Mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const() && b.value() != 0.0) return Expr(a.value() / b.value());
    if (a.is_const(0.0)) return Expr(0.0);
    if (b.is_const(1.0)) return a;
    return detail::make(Op::Div, a, b);
}

inline Expr pow(const Expr& a, int k) {
    if (k == 0) return Expr(1.0);
    if (k == 1) return a;
    if (a.is_const() && (k > 0 || a.value() != 0.0)) return Expr(detail::ipow(a.value(), k));
    return detail::make(Op::Pow, a, Expr(), k);
}

inline Expr sqrt(const Expr& a) {
    if (a.is_const() && a.value() >= 0.0) return Expr(std::sqrt(a.value()));
    return detail::make(Op::Sqrt, a);
}

inline Expr smoothstep(const Expr& a, int order = 0) {
    if (order > kSmoothMaxOrder) return Expr(0.0);
    if (a.is_const()) return Expr(smoothstep(a.value(), order));
    return detail::make(Op::Smooth, a, Expr(), order);
}

/// Names of all variables occurring in `e`.
inline std::set<std::string> variables(const Expr& e) {
    std::set<std::string> out;
    std::set<const Node*> seen;
    std::vector<const Node*> stack{&e.node()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        if (n->op == Op::Var) out.insert(n->name);
        if (n->a) stack.push_back(n->a.get());
        if (n->b) stack.push_back(n->b.get());
    }
    return out;
}

/// Exact symbolic derivative; shared subtrees are differentiated once.
inline Expr diff(const Expr& e, const std::string& var) {
    std::unordered_map<const Node*, Expr> memo;
    auto rec = [&](auto&& self, const Expr& x) -> Expr {
        auto it = memo.find(x.ptr().get());
        if (it != memo.end()) return it->second;
        const Node& n = x.node();
        Expr a = n.a ? Expr(n.a) : Expr();
        Expr b = n.b ? Expr(n.b) : Expr();
        Expr r;
        switch (n.op) {
            case Op::Const: r = Expr(0.0); break;
            case Op::Var: r = Expr(n.name == var ? 1.0 : 0.0); break;
            case Op::Add: r = self(self, a) + self(self, b); break;
            case Op::Sub: r = self(self, a) - self(self, b); break;
            case Op::Mul: r = self(self, a) * b + a * self(self, b); break;
            case Op::Div: r = (self(self, a) * b - a * self(self, b)) / pow(b, 2); break;
            case Op::Neg: r = -self(self, a); break;
            case Op::Pow: r = Expr(static_cast<double>(n.k)) * pow(a, n.k - 1) * self(self, a); break;
            case Op::Sqrt: r = self(self, a) / (Expr(2.0) * x); break;
            case Op::Smooth: r = smoothstep(a, n.k + 1) * self(self, a); break;
        }
        memo.emplace(x.ptr().get(), r);
        return r;
    };
    return rec(rec, e);
}

/// Replaces variables by expressions, rebuilding through the smart constructors.
inline Expr substitute(const Expr& e, const std::map<std::string, Expr>& sub) {
    std::unordered_map<const Node*, Expr> memo;
    auto rec = [&](auto&& self, const Expr& x) -> Expr {
        auto it = memo.find(x.ptr().get());
        if (it != memo.end()) return it->second;
        const Node& n = x.node();
        Expr r;
        switch (n.op) {
            case Op::Const: r = x; break;
            case Op::Var: {
                auto s = sub.find(n.name);
                r = s == sub.end() ? x : s->second;
                break;
            }
            case Op::Add: r = self(self, Expr(n.a)) + self(self, Expr(n.b)); break;
            case Op::Sub: r = self(self, Expr(n.a)) - self(self, Expr(n.b)); break;
            case Op::Mul: r = self(self, Expr(n.a)) * self(self, Expr(n.b)); break;
            case Op::Div: r = self(self, Expr(n.a)) / self(self, Expr(n.b)); break;
            case Op::Neg: r = -self(self, Expr(n.a)); break;
            case Op::Pow: r = pow(self(self, Expr(n.a)), n.k); break;
            case Op::Sqrt: r = sqrt(self(self, Expr(n.a))); break;
            case Op::Smooth: r = smoothstep(self(self, Expr(n.a)), n.k); break;
        }
        memo.emplace(x.ptr().get(), r);
        return r;
    };
    return rec(rec, e);
}

/// Tree-walking evaluation. Unknown variables are a validation error.
inline double evaluate(const Expr& e, const std::map<std::string, double>& env) {
    auto rec = [&](auto&& self, const Node& n) -> double {
        switch (n.op) {
            case Op::Const: return n.value;
            case Op::Var: {
                auto it = env.find(n.name);
                if (it == env.end()) throw ValidationError("unbound variable", n.name);
                return it->second;
            }
            case Op::Add: return self(self, *n.a) + self(self, *n.b);
            case Op::Sub: return self(self, *n.a) - self(self, *n.b);
            case Op::Mul: {
                const double x = self(self, *n.a);
                if (x == 0.0) return 0.0;
                const double y = self(self, *n.b);
                return y == 0.0 ? 0.0 : x * y;
            }
            case Op::Div: return self(self, *n.a) / self(self, *n.b);
            case Op::Neg: return -self(self, *n.a);
            case Op::Pow: return detail::ipow(self(self, *n.a), n.k);
            case Op::Sqrt: return std::sqrt(self(self, *n.a));
            case Op::Smooth: return smoothstep(self(self, *n.a), n.k);
        }
        return 0.0;
    };
    return rec(rec, e.node());
}

// ---- printing -----------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    // shortest text that reads back to the same double
    for (int prec = 1; prec < 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) {
            s = buf;
            break;
        }
    }
    return s;
}

inline int precedence(const Node& n) {
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Const: return n.value < 0.0 ? 0 : 5;
        default: return 5;
    }
}

inline std::string smooth_name(int k) { return k == 0 ? "smoothstep" : "smoothstep_d" + std::to_string(k); }

inline std::string print(const Node& n, int min_prec) {
    std::string s;
    switch (n.op) {
        case Op::Const: s = format_number(n.value); break;
        case Op::Var: s = n.name; break;
        case Op::Add: s = print(*n.a, 1) + " + " + print(*n.b, 2); break;
        case Op::Sub: s = print(*n.a, 1) + " - " + print(*n.b, 2); break;
        case Op::Mul: s = print(*n.a, 2) + "*" + print(*n.b, 3); break;
        case Op::Div: s = print(*n.a, 2) + "/" + print(*n.b, 3); break;
        case Op::Neg: s = "-" + print(*n.a, 3); break;
        case Op::Pow: s = print(*n.a, 5) + "^" + std::to_string(n.k); break;
        case Op::Sqrt: s = "sqrt(" + print(*n.a, 0) + ")"; break;
        case Op::Smooth: s = smooth_name(n.k) + "(" + print(*n.a, 0) + ")"; break;
    }
    return precedence(n) < min_prec ? "(" + s + ")" : s;
}

}  // namespace detail

inline std::string to_string(const Expr& e) { return detail::print(e.node(), 0); }

// ---- parsing --------------------------------------------------------------

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view src) : s_(src) {}

    Expr parse() {
        Expr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError("expression: " + msg, "column " + std::to_string(pos_ + 1));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (eat('+')) e = e + term();
            else if (eat('-')) e = e - term();
            else return e;
        }
    }

    Expr term() {
        Expr e = unary();
        for (;;) {
            if (eat('*')) e = e * unary();
            else if (eat('/')) e = e / unary();
            else return e;
        }
    }

    Expr unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (!eat('^')) return base;
        skip();
        bool neg = false;
        if (eat('-')) neg = true;
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("exponent must be an integer literal");
        int k = 0;
        auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, k);
        if (ec != std::errc()) fail("exponent out of range");
        return pow(base, neg ? -k : k);
    }

    Expr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                ++pos_;
            std::string id(s_.substr(start, pos_ - start));
            if (id == "sqrt") return sqrt(argument());
            if (id == "smoothstep") return smoothstep(argument());
            if (id.rfind("smoothstep_d", 0) == 0) {
                int k = 0;
                auto tail = std::string_view(id).substr(12);
                auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
                if (ec != std::errc() || p != tail.data() + tail.size() || k < 1 || k > kSmoothMaxOrder)
                    fail("unknown function " + id);
                return smoothstep(argument(), k);
            }
            return Expr::variable(std::move(id));
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    Expr argument() {
        if (!eat('(')) fail("expected '(' after function name");
        Expr e = expr();
        if (!eat(')')) fail("expected ')'");
        return e;
    }

    Expr number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
            if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
                pos_ = q;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (ec != std::errc() || p != s_.data() + pos_) fail("malformed number");
        return Expr(v);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expr(std::string_view src) { return detail::Parser(src).parse(); }

// ---- compiled evaluation ---------------------------------------------------

/// Flat instruction list evaluating several expressions at once over a fixed
/// variable order. Shared nodes are computed once.
class Tape {
public:
    Tape(const std::vector<Expr>& outputs, const std::vector<std::string>& vars) : n_vars_(vars.size()) {
        std::unordered_map<std::string, int> var_index;
        for (std::size_t i = 0; i < vars.size(); ++i) var_index.emplace(vars[i], static_cast<int>(i));
        std::unordered_map<const Node*, int> slot;
        auto rec = [&](auto&& self, const Node& n) -> int {
            auto it = slot.find(&n);
            if (it != slot.end()) return it->second;
            Instr in{n.op, n.value, n.k, -1, -1};
            if (n.op == Op::Var) {
                auto v = var_index.find(n.name);
                if (v == var_index.end()) throw ValidationError("expression uses an undeclared variable", n.name);
                in.a = v->second;
            } else {
                if (n.a) in.a = self(self, *n.a);
                if (n.b) in.b = self(self, *n.b);
            }
            const int id = static_cast<int>(code_.size());
            code_.push_back(in);
            slot.emplace(&n, id);
            return id;
        };
        for (auto& e : outputs) out_.push_back(rec(rec, e.node()));
    }

    std::size_t n_vars() const { return n_vars_; }
    std::size_t n_outputs() const { return out_.size(); }
    std::size_t size() const { return code_.size(); }

    /// `scratch` is resized as needed, so one buffer per thread suffices.
    void eval(const double* x, double* out, std::vector<double>& scratch) const {
        scratch.resize(code_.size());
        double* r = scratch.data();
        for (std::size_t i = 0; i < code_.size(); ++i) {
            const Instr& in = code_[i];
            switch (in.op) {
                case Op::Const: r[i] = in.value; break;
                case Op::Var: r[i] = x[in.a]; break;
                case Op::Add: r[i] = r[in.a] + r[in.b]; break;
                case Op::Sub: r[i] = r[in.a] - r[in.b]; break;
                case Op::Mul: r[i] = (r[in.a] == 0.0 || r[in.b] == 0.0) ? 0.0 : r[in.a] * r[in.b]; break;
                case Op::Div: r[i] = r[in.a] / r[in.b]; break;
                case Op::Neg: r[i] = -r[in.a]; break;
                case Op::Pow: r[i] = detail::ipow(r[in.a], in.k); break;
                case Op::Sqrt: r[i] = std::sqrt(r[in.a]); break;
                case Op::Smooth: r[i] = smoothstep(r[in.a], in.k); break;
            }
        }
        for (std::size_t o = 0; o < out_.size(); ++o) out[o] = r[out_[o]];
    }

    double eval1(const std::vector<double>& x) const {
        std::vector<double> scratch, out(out_.size());
        eval(x.data(), out.data(), scratch);
        return out.at(0);
    }

private:
    struct Instr {
        Op op;
        double value;
        int k;
        int a, b;
    };

    std::size_t n_vars_;
    std::vector<Instr> code_;
    std::vector<int> out_;
};

}  // namespace gfh
