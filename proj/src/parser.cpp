#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "almostconv/detail/surface.hpp"
#include "almostconv/signal.hpp"

namespace almostconv::detail {

namespace {

enum class Tok {
    Number, Ident, Str, Plus, Minus, Star, Slash,
    LParen, RParen, Comma, Pipe, Equals, End
};

struct Token {
    Tok kind = Tok::End;
    double num = 0.0;
    std::string text;
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) {
        ahead_ = scan();
        advance();
    }

    const Token& cur() const { return cur_; }
    const Token& ahead() const { return ahead_; }

    void advance() {
        cur_ = std::move(ahead_);
        ahead_ = scan();
    }

  private:
    Token scan() {
        while (at_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[at_]))) {
            ++at_;
        }
        Token t;
        t.pos = at_;
        if (at_ >= src_.size()) return t;
        const char c = src_[at_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && at_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[at_ + 1])))) {
            char* end = nullptr;
            t.num = std::strtod(src_.c_str() + at_, &end);
            at_ = static_cast<std::size_t>(end - src_.c_str());
            t.kind = Tok::Number;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t e = at_;
            while (e < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[e])) ||
                    src_[e] == '_')) {
                ++e;
            }
            t.kind = Tok::Ident;
            t.text = src_.substr(at_, e - at_);
            at_ = e;
            return t;
        }
        if (c == '"') {
            std::size_t e = at_ + 1;
            while (e < src_.size() && src_[e] != '"') ++e;
            if (e >= src_.size()) {
                throw SyntaxError("unterminated string", t.pos, "closing '\"'");
            }
            t.kind = Tok::Str;
            t.text = src_.substr(at_ + 1, e - at_ - 1);
            at_ = e + 1;
            return t;
        }
        ++at_;
        switch (c) {
            case '+': t.kind = Tok::Plus; return t;
            case '-': t.kind = Tok::Minus; return t;
            case '*': t.kind = Tok::Star; return t;
            case '/': t.kind = Tok::Slash; return t;
            case '(': t.kind = Tok::LParen; return t;
            case ')': t.kind = Tok::RParen; return t;
            case ',': t.kind = Tok::Comma; return t;
            case '|': t.kind = Tok::Pipe; return t;
            case '=': t.kind = Tok::Equals; return t;
            default:
                throw SyntaxError(std::string("unexpected character '") + c + "'",
                                  t.pos);
        }
    }

    const std::string& src_;
    std::size_t at_ = 0;
    Token cur_, ahead_;
};

SurfacePtr node(SurfaceNode::Kind k, std::size_t pos) {
    auto n = std::make_unique<SurfaceNode>();
    n->kind = k;
    n->pos = pos;
    return n;
}

class Parser {
  public:
    explicit Parser(const std::string& src) : lx_(src) {}

    SurfacePtr parse() {
        SurfacePtr e = expr();
        if (lx_.cur().kind != Tok::End) {
            throw SyntaxError("trailing input", lx_.cur().pos, "end of input");
        }
        return e;
    }

  private:
    SurfacePtr expr() {
        SurfacePtr l = term();
        while (lx_.cur().kind == Tok::Plus || lx_.cur().kind == Tok::Minus) {
            const bool add = lx_.cur().kind == Tok::Plus;
            const std::size_t pos = lx_.cur().pos;
            lx_.advance();
            auto n = node(add ? SurfaceNode::Add : SurfaceNode::Sub, pos);
            n->lhs = std::move(l);
            n->rhs = term();
            l = std::move(n);
        }
        return l;
    }

    SurfacePtr term() {
        SurfacePtr l = factor();
        while (lx_.cur().kind == Tok::Star || lx_.cur().kind == Tok::Slash) {
            const bool mul = lx_.cur().kind == Tok::Star;
            const std::size_t pos = lx_.cur().pos;
            lx_.advance();
            auto n = node(mul ? SurfaceNode::Mul : SurfaceNode::Div, pos);
            n->lhs = std::move(l);
            n->rhs = factor();
            l = std::move(n);
        }
        return l;
    }

    SurfacePtr factor() {
        if (lx_.cur().kind == Tok::Minus) {
            const std::size_t pos = lx_.cur().pos;
            lx_.advance();
            auto n = node(SurfaceNode::Neg, pos);
            n->lhs = factor();
            return n;
        }
        if (lx_.cur().kind == Tok::Plus) {
            lx_.advance();
            return factor();
        }
        return atom();
    }

    SurfacePtr atom() {
        const Token& t = lx_.cur();
        switch (t.kind) {
            case Tok::Number: {
                auto n = node(SurfaceNode::Num, t.pos);
                n->num = t.num;
                lx_.advance();
                return n;
            }
            case Tok::Ident: {
                const std::string name = t.text;
                const std::size_t pos = t.pos;
                lx_.advance();
                if (lx_.cur().kind == Tok::LParen) return call(name, pos);
                if (name == "i") return node(SurfaceNode::Imag, pos);
                if (name == "pi") {
                    auto n = node(SurfaceNode::Num, pos);
                    n->num = std::numbers::pi;
                    return n;
                }
                auto n = node(SurfaceNode::Var, pos);
                n->name = name;
                return n;
            }
            case Tok::LParen: {
                lx_.advance();
                SurfacePtr e = expr();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Str:
                throw SyntaxError("string literal outside a function call", t.pos);
            default:
                throw SyntaxError("expected an expression", t.pos,
                                  "number, name or '('");
        }
    }

    SurfacePtr call(const std::string& name, std::size_t pos) {
        expect(Tok::LParen, "'('");
        auto n = node(SurfaceNode::Call, pos);
        n->name = name;
        if (lx_.cur().kind != Tok::RParen) {
            while (true) {
                n->args.push_back(argument());
                if (lx_.cur().kind == Tok::Comma || lx_.cur().kind == Tok::Pipe) {
                    lx_.advance();
                    continue;
                }
                break;
            }
        }
        expect(Tok::RParen, "',', '|' or ')'");
        return n;
    }

    SurfaceArg argument() {
        SurfaceArg a;
        a.pos = lx_.cur().pos;
        if (lx_.cur().kind == Tok::Str) {
            a.is_string = true;
            a.str = lx_.cur().text;
            lx_.advance();
            return a;
        }
        if (lx_.cur().kind == Tok::Ident && lx_.ahead().kind == Tok::Equals) {
            a.keyword = lx_.cur().text;
            lx_.advance();
            lx_.advance();
        }
        a.value = expr();
        return a;
    }

    void expect(Tok k, const char* what) {
        if (lx_.cur().kind != k) {
            throw SyntaxError("unexpected token", lx_.cur().pos, what);
        }
        lx_.advance();
    }

    Lexer lx_;
};

}  // namespace

SurfacePtr parse_surface(const std::string& text) {
    return Parser(text).parse();
}

std::optional<std::complex<double>> fold_constant(const SurfaceNode& n) {
    using C = std::complex<double>;
    switch (n.kind) {
        case SurfaceNode::Num: return C(n.num, 0.0);
        case SurfaceNode::Imag: return C(0.0, 1.0);
        case SurfaceNode::Var: return std::nullopt;
        case SurfaceNode::Neg: {
            auto v = fold_constant(*n.lhs);
            if (!v) return std::nullopt;
            return -*v;
        }
        case SurfaceNode::Add:
        case SurfaceNode::Sub:
        case SurfaceNode::Mul:
        case SurfaceNode::Div: {
            auto l = fold_constant(*n.lhs);
            auto r = fold_constant(*n.rhs);
            if (!l || !r) return std::nullopt;
            switch (n.kind) {
                case SurfaceNode::Add: return *l + *r;
                case SurfaceNode::Sub: return *l - *r;
                case SurfaceNode::Mul: return *l * *r;
                default: return *l / *r;
            }
        }
        case SurfaceNode::Call: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<Affine> as_affine(const SurfaceNode& n, const std::string& var) {
    using C = std::complex<double>;
    switch (n.kind) {
        case SurfaceNode::Num: return Affine{C(0.0, 0.0), C(n.num, 0.0)};
        case SurfaceNode::Imag: return Affine{C(0.0, 0.0), C(0.0, 1.0)};
        case SurfaceNode::Var:
            if (n.name == var) return Affine{C(1.0, 0.0), C(0.0, 0.0)};
            return std::nullopt;
        case SurfaceNode::Neg: {
            auto v = as_affine(*n.lhs, var);
            if (!v) return std::nullopt;
            return Affine{-v->a, -v->b};
        }
        case SurfaceNode::Add:
        case SurfaceNode::Sub: {
            auto l = as_affine(*n.lhs, var);
            auto r = as_affine(*n.rhs, var);
            if (!l || !r) return std::nullopt;
            if (n.kind == SurfaceNode::Add) {
                return Affine{l->a + r->a, l->b + r->b};
            }
            return Affine{l->a - r->a, l->b - r->b};
        }
        case SurfaceNode::Mul: {
            auto l = as_affine(*n.lhs, var);
            auto r = as_affine(*n.rhs, var);
            if (!l || !r) return std::nullopt;
            if (l->a == C(0.0, 0.0)) return Affine{l->b * r->a, l->b * r->b};
            if (r->a == C(0.0, 0.0)) return Affine{r->b * l->a, r->b * l->b};
            return std::nullopt;  // quadratic
        }
        case SurfaceNode::Div: {
            auto l = as_affine(*n.lhs, var);
            auto r = as_affine(*n.rhs, var);
            if (!l || !r || r->a != C(0.0, 0.0)) return std::nullopt;
            return Affine{l->a / r->b, l->b / r->b};
        }
        case SurfaceNode::Call: return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace almostconv::detail

namespace almostconv {

namespace {

using detail::SurfaceArg;
using detail::SurfaceNode;
const Complex kImag(0.0, 1.0);

void ensure_finite(Complex v, std::size_t pos) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw SyntaxError("non-finite constant", pos);
    }
}

struct Lowered {
    std::optional<Complex> cval;
    ExprPtr expr;
};

ExprPtr materialize(Lowered l) {
    return l.cval ? make_const(*l.cval) : std::move(l.expr);
}

Complex require_const(const SurfaceNode& n, const char* what) {
    auto v = detail::fold_constant(n);
    if (!v) {
        throw SyntaxError(std::string(what) + " must be a constant", n.pos);
    }
    ensure_finite(*v, n.pos);
    return *v;
}

double require_real(const SurfaceNode& n, const char* what) {
    const Complex v = require_const(n, what);
    if (v.imag() != 0.0) {
        throw SyntaxError(std::string(what) + " must be real", n.pos);
    }
    return v.real();
}

const SurfaceNode& positional(const SurfaceNode& call, std::size_t idx,
                              const char* what) {
    if (idx >= call.args.size()) {
        throw SyntaxError(std::string(call.name) + ": missing " + what, call.pos);
    }
    const SurfaceArg& a = call.args[idx];
    if (a.is_string || !a.keyword.empty()) {
        throw SyntaxError(std::string(call.name) + ": " + what +
                              " must be a plain expression argument",
                          a.pos);
    }
    return *a.value;
}

void expect_arity(const SurfaceNode& call, std::size_t lo, std::size_t hi) {
    if (call.args.size() < lo || call.args.size() > hi) {
        std::string want = std::to_string(lo);
        if (hi != lo) want += ".." + std::to_string(hi);
        throw SyntaxError(call.name + ": expected " + want + " argument(s), got " +
                              std::to_string(call.args.size()),
                          call.pos);
    }
}

Lowered lower(const SurfaceNode& n);

// sin/cos/cis/sign arguments must be affine in t with real frequency.
detail::Affine wave_argument(const SurfaceNode& call) {
    const SurfaceNode& arg = positional(call, 0, "argument");
    expect_arity(call, 1, 1);
    auto aff = detail::as_affine(arg, "t");
    if (!aff) {
        throw SyntaxError(call.name + ": argument must be w*t + phase", arg.pos);
    }
    if (aff->a.imag() != 0.0) {
        throw UnboundedConstruct(call.name +
                                 ": complex frequency grows without bound");
    }
    ensure_finite(aff->a, arg.pos);
    ensure_finite(aff->b, arg.pos);
    return *aff;
}

Lowered lower_call(const SurfaceNode& n) {
    if (n.name == "sin" || n.name == "cos") {
        const auto aff = wave_argument(n);
        if (aff.b.imag() != 0.0) {
            throw SyntaxError(n.name + ": phase must be real",
                              n.args[0].pos);
        }
        const double w = aff.a.real(), ph = aff.b.real();
        if (w == 0.0) {
            return {Complex(n.name == "sin" ? std::sin(ph) : std::cos(ph), 0.0),
                    nullptr};
        }
        return {std::nullopt, make_sinusoid(1.0, w, ph, n.name == "sin")};
    }
    if (n.name == "cis") {
        const auto aff = wave_argument(n);
        const Complex coeff = std::exp(kImag * aff.b);
        if (aff.a.real() == 0.0) return {coeff, nullptr};
        if (aff.b.imag() != 0.0) {
            return {std::nullopt,
                    make_scale(coeff, make_complex_exp(aff.a.real(), 0.0))};
        }
        return {std::nullopt, make_complex_exp(aff.a.real(), aff.b.real())};
    }
    if (n.name == "sign") {
        const auto aff = wave_argument(n);
        if (aff.b.imag() != 0.0) {
            throw SyntaxError("sign: argument must be real", n.args[0].pos);
        }
        const double a = aff.a.real(), b = aff.b.real();
        if (a == 0.0) {
            return {Complex(b > 0.0 ? 1.0 : (b < 0.0 ? -1.0 : 0.0), 0.0), nullptr};
        }
        const double root = -b / a;
        const double after = a > 0.0 ? 1.0 : -1.0;
        return {std::nullopt,
                make_piecewise({root}, {make_const(Complex(-after, 0.0)),
                                        make_const(Complex(after, 0.0))})};
    }
    if (n.name == "shift") {
        expect_arity(n, 2, 2);
        Lowered inner = lower(positional(n, 0, "signal"));
        const double s = require_real(positional(n, 1, "offset"), "shift offset");
        if (inner.cval) return inner;  // constants are translation invariant
        return {std::nullopt, make_shift(s, std::move(inner.expr))};
    }
    if (n.name == "blocks") {
        double base = 0.0, width = 1.0;
        bool mirror = false, have_base = false;
        for (const SurfaceArg& a : n.args) {
            if (a.is_string || a.keyword.empty()) {
                throw SyntaxError("blocks: keyword arguments only "
                                  "(base=, width=, mirror=)",
                                  a.pos);
            }
            const double v = require_real(*a.value, ("blocks " + a.keyword).c_str());
            if (a.keyword == "base") {
                base = v;
                have_base = true;
            } else if (a.keyword == "width") {
                width = v;
            } else if (a.keyword == "mirror") {
                mirror = v != 0.0;
            } else {
                throw SyntaxError("blocks: unknown keyword '" + a.keyword + "'",
                                  a.pos, "base, width, mirror");
            }
        }
        if (!have_base) throw SyntaxError("blocks: base= is required", n.pos);
        try {
            return {std::nullopt,
                    make_block(BlockSpec::geometric(base, 1.0 + width, mirror))};
        } catch (const std::invalid_argument& e) {
            throw SyntaxError(std::string("blocks: ") + e.what(), n.pos);
        }
    }
    if (n.name == "interval") {
        expect_arity(n, 2, 2);
        const double lo = require_real(positional(n, 0, "lower edge"), "interval edge");
        const double hi = require_real(positional(n, 1, "upper edge"), "interval edge");
        try {
            return {std::nullopt,
                    make_block(BlockSpec::explicit_intervals({{lo, hi}}))};
        } catch (const std::invalid_argument& e) {
            throw SyntaxError(std::string("interval: ") + e.what(), n.pos);
        }
    }
    if (n.name == "piecewise") {
        if (n.args.empty() || n.args.size() % 2 == 0) {
            throw SyntaxError(
                "piecewise: expected piece | break | piece | ... (odd count)",
                n.pos);
        }
        std::vector<double> breaks;
        std::vector<ExprPtr> pieces;
        for (std::size_t k = 0; k < n.args.size(); ++k) {
            const SurfaceNode& a = positional(n, k, "argument");
            if (k % 2 == 0) {
                pieces.push_back(materialize(lower(a)));
            } else {
                breaks.push_back(require_real(a, "piecewise break"));
            }
        }
        try {
            return {std::nullopt, make_piecewise(std::move(breaks), std::move(pieces))};
        } catch (const std::invalid_argument& e) {
            throw SyntaxError(std::string("piecewise: ") + e.what(), n.pos);
        }
    }
    if (n.name == "mobius") {
        expect_arity(n, 1, 2);
        const double re = require_real(positional(n, 0, "pole real part"), "mobius pole");
        double im = 0.0;
        if (n.args.size() == 2) {
            im = require_real(positional(n, 1, "pole imaginary part"), "mobius pole");
        }
        return {std::nullopt, make_rational_trace(Complex(re, im))};
    }
    if (n.name == "samples") {
        if (n.args.size() < 3) {
            throw SyntaxError("samples: expected t0, step, v0 [, v1 ...]", n.pos);
        }
        const double t0 = require_real(positional(n, 0, "t0"), "samples t0");
        const double h = require_real(positional(n, 1, "step"), "samples step");
        std::vector<Complex> vs;
        for (std::size_t k = 2; k < n.args.size(); ++k) {
            vs.push_back(require_const(positional(n, k, "value"), "samples value"));
        }
        try {
            return {std::nullopt, make_samples(t0, h, std::move(vs))};
        } catch (const std::invalid_argument& e) {
            throw SyntaxError(std::string("samples: ") + e.what(), n.pos);
        }
    }
    if (n.name == "csv") {
        expect_arity(n, 1, 1);
        if (!n.args[0].is_string) {
            throw SyntaxError("csv: expected a quoted file path", n.pos);
        }
        return {std::nullopt, load_csv_signal(n.args[0].str)};
    }
    throw SyntaxError("unknown function '" + n.name + "'", n.pos,
                      "sin, cos, cis, sign, shift, blocks, interval, piecewise, "
                      "mobius, samples, csv");
}

Lowered lower(const SurfaceNode& n) {
    switch (n.kind) {
        case SurfaceNode::Num:
            return {Complex(n.num, 0.0), nullptr};
        case SurfaceNode::Imag:
            return {kImag, nullptr};
        case SurfaceNode::Var:
            if (n.name == "t") {
                throw UnboundedConstruct(
                    "bare t is unbounded; use it inside sin/cos/cis/sign");
            }
            throw SyntaxError("unknown name '" + n.name + "'", n.pos);
        case SurfaceNode::Neg: {
            Lowered l = lower(*n.lhs);
            if (l.cval) return {-*l.cval, nullptr};
            return {std::nullopt, make_scale(Complex(-1.0, 0.0), std::move(l.expr))};
        }
        case SurfaceNode::Add:
        case SurfaceNode::Sub: {
            Lowered l = lower(*n.lhs);
            Lowered r = lower(*n.rhs);
            const bool sub = n.kind == SurfaceNode::Sub;
            if (l.cval && r.cval) {
                const Complex v = sub ? *l.cval - *r.cval : *l.cval + *r.cval;
                ensure_finite(v, n.pos);
                return {v, nullptr};
            }
            ExprPtr rhs = materialize(std::move(r));
            if (sub) rhs = make_scale(Complex(-1.0, 0.0), std::move(rhs));
            return {std::nullopt,
                    make_sum({materialize(std::move(l)), std::move(rhs)})};
        }
        case SurfaceNode::Mul: {
            Lowered l = lower(*n.lhs);
            Lowered r = lower(*n.rhs);
            if (l.cval && r.cval) {
                const Complex v = *l.cval * *r.cval;
                ensure_finite(v, n.pos);
                return {v, nullptr};
            }
            if (l.cval) {
                return {std::nullopt, make_scale(*l.cval, std::move(r.expr))};
            }
            if (r.cval) {
                return {std::nullopt, make_scale(*r.cval, std::move(l.expr))};
            }
            return {std::nullopt,
                    make_product({std::move(l.expr), std::move(r.expr)})};
        }
        case SurfaceNode::Div: {
            Lowered l = lower(*n.lhs);
            auto d = detail::fold_constant(*n.rhs);
            if (!d) {
                throw UnboundedConstruct(
                    "division by a non-constant expression");
            }
            if (*d == Complex(0.0, 0.0)) {
                throw SyntaxError("division by zero", n.rhs->pos);
            }
            if (l.cval) {
                const Complex v = *l.cval / *d;
                ensure_finite(v, n.pos);
                return {v, nullptr};
            }
            return {std::nullopt, make_scale(1.0 / *d, std::move(l.expr))};
        }
        case SurfaceNode::Call:
            return lower_call(n);
    }
    throw SyntaxError("internal: unhandled node", n.pos);
}

}  // namespace

BoundedSignal parse_signal(const std::string& text) {
    const detail::SurfacePtr tree = detail::parse_surface(text);
    Lowered l = lower(*tree);
    return analyze(materialize(std::move(l)));
}

ExprPtr load_csv_signal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("csv: '" + path + "' is empty");
    }
    auto strip = [](std::string s) {
        std::string out;
        for (char c : s) {
            if (c != ' ' && c != '\t' && c != '\r') out += c;
        }
        return out;
    };
    const std::string header = strip(line);
    bool has_im = false;
    if (header == "t,re,im") {
        has_im = true;
    } else if (header != "t,re") {
        throw std::runtime_error("csv: '" + path +
                                 "' header must be t,re or t,re,im");
    }
    std::vector<double> ts;
    std::vector<Complex> vs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string row = strip(line);
        if (row.empty()) continue;
        std::istringstream ss(row);
        std::string cell;
        std::vector<double> cols;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw std::runtime_error("csv: '" + path + "' line " +
                                         std::to_string(lineno) +
                                         ": bad number '" + cell + "'");
            }
            cols.push_back(v);
        }
        if (cols.size() != (has_im ? 3u : 2u)) {
            throw std::runtime_error("csv: '" + path + "' line " +
                                     std::to_string(lineno) +
                                     ": wrong column count");
        }
        ts.push_back(cols[0]);
        vs.emplace_back(cols[1], has_im ? cols[2] : 0.0);
    }
    if (ts.empty()) {
        throw std::runtime_error("csv: '" + path + "' has no data rows");
    }
    double h = 1.0;
    if (ts.size() > 1) {
        h = ts[1] - ts[0];
        if (!(h > 0.0)) {
            throw std::runtime_error("csv: '" + path + "' t must be increasing");
        }
        for (std::size_t k = 1; k < ts.size(); ++k) {
            if (std::abs((ts[k] - ts[k - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) {
                throw std::runtime_error("csv: '" + path +
                                         "' t must be uniformly spaced");
            }
        }
    }
    return make_samples(ts[0], h, std::move(vs), path);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_complex(Complex c) {
    if (c.imag() == 0.0) return fmt(c.real());
    std::string s = "(" + fmt(c.real());
    s += c.imag() >= 0.0 ? "+" : "-";
    s += fmt(std::abs(c.imag()));
    s += "*i)";
    return s;
}

// w*t + phase inside the wave builtins.
std::string fmt_wave_arg(double w, double ph) {
    std::string s;
    if (w == 1.0) {
        s = "t";
    } else {
        s = fmt(w) + "*t";
    }
    if (ph > 0.0) s += "+" + fmt(ph);
    if (ph < 0.0) s += "-" + fmt(-ph);
    return s;
}

int precedence(const SignalExpr& e) {
    if (std::holds_alternative<SumNode>(e.node)) return 1;
    if (std::holds_alternative<ProductNode>(e.node) ||
        std::holds_alternative<ScaleNode>(e.node)) {
        return 2;
    }
    return 3;
}

std::string print_expr(const SignalExpr& e);

std::string print_child(const SignalExpr& e, int min_prec) {
    std::string s = print_expr(e);
    if (precedence(e) < min_prec) return "(" + s + ")";
    return s;
}

std::string print_expr(const SignalExpr& e) {
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ConstNode>) {
                return fmt_complex(n.value);
            } else if constexpr (std::is_same_v<T, SinusoidNode>) {
                std::string s;
                if (n.amplitude != 1.0) s = fmt(n.amplitude) + "*";
                s += n.is_sin ? "sin(" : "cos(";
                s += fmt_wave_arg(n.omega, n.phase) + ")";
                return s;
            } else if constexpr (std::is_same_v<T, ComplexExpNode>) {
                return "cis(" + fmt_wave_arg(n.omega, n.phase) + ")";
            } else if constexpr (std::is_same_v<T, BlockNode>) {
                if (n.spec.generated()) {
                    std::string s = "blocks(base=" + fmt(n.spec.base()) +
                                    ", width=" + fmt(n.spec.ratio() - 1.0);
                    if (n.spec.mirrored()) s += ", mirror=1";
                    return s + ")";
                }
                std::string s;
                for (const Interval& iv : n.spec.intervals()) {
                    if (!s.empty()) s += " + ";
                    s += "interval(" + fmt(iv.lo) + ", " + fmt(iv.hi) + ")";
                }
                return s.empty() ? "0" : s;
            } else if constexpr (std::is_same_v<T, PiecewiseNode>) {
                std::string s = "piecewise(";
                for (std::size_t k = 0; k < n.pieces.size(); ++k) {
                    if (k > 0) s += " | " + fmt(n.breaks[k - 1]) + " | ";
                    s += print_expr(*n.pieces[k]);
                }
                return s + ")";
            } else if constexpr (std::is_same_v<T, SumNode>) {
                std::string s;
                for (const auto& t : n.terms) {
                    if (!s.empty()) s += " + ";
                    s += print_child(*t, 2);
                }
                return s.empty() ? "0" : s;
            } else if constexpr (std::is_same_v<T, ProductNode>) {
                std::string s;
                for (const auto& f : n.factors) {
                    if (!s.empty()) s += "*";
                    s += print_child(*f, 3);
                }
                return s.empty() ? "1" : s;
            } else if constexpr (std::is_same_v<T, ScaleNode>) {
                return fmt_complex(n.factor) + "*" + print_child(*n.inner, 3);
            } else if constexpr (std::is_same_v<T, ShiftNode>) {
                return "shift(" + print_expr(*n.inner) + ", " + fmt(n.offset) + ")";
            } else if constexpr (std::is_same_v<T, RationalTraceNode>) {
                if (n.pole.imag() == 0.0) {
                    return "mobius(" + fmt(n.pole.real()) + ")";
                }
                return "mobius(" + fmt(n.pole.real()) + ", " + fmt(n.pole.imag()) +
                       ")";
            } else {
                static_assert(std::is_same_v<T, SamplesNode>);
                if (!n.origin.empty()) return "csv(\"" + n.origin + "\")";
                std::string s = "samples(" + fmt(n.t0) + ", " + fmt(n.step);
                for (const Complex& v : n.values) s += ", " + fmt_complex(v);
                return s + ")";
            }
        },
        e.node);
}

}  // namespace

std::string to_string(const SignalExpr& expr) { return print_expr(expr); }

}  // namespace almostconv
