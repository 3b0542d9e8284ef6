#pragma once

// Surface expression trees shared by the signal language and the half-plane
// function whitelist.  Parsing stops at arithmetic shape; each consumer lowers
// the tree into its own node family and applies its own semantic checks.

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace almostconv::detail {

struct SurfaceNode;
using SurfacePtr = std::unique_ptr<SurfaceNode>;

struct SurfaceArg {
    std::string keyword;  // empty for positional
    SurfacePtr value;     // null when is_string
    std::string str;
    bool is_string = false;
    std::size_t pos = 0;
};

struct SurfaceNode {
    enum Kind { Num, Imag, Var, Neg, Add, Sub, Mul, Div, Call } kind;
    double num = 0.0;
    std::string name;  // Var / Call
    SurfacePtr lhs, rhs;
    std::vector<SurfaceArg> args;
    std::size_t pos = 0;
};

// Full-input parse; throws SyntaxError on malformed text.  `pi` folds to a
// Num; `i` becomes Imag; every other identifier not followed by `(` is a Var.
SurfacePtr parse_surface(const std::string& text);

// Value of a closed (variable-free) subtree, or nullopt if a Var occurs.
std::optional<std::complex<double>> fold_constant(const SurfaceNode& n);

// a*var + b when the subtree is affine in the single variable `var` (with
// complex constant arithmetic), else nullopt.  Trees mentioning any other
// variable or any call are not affine.
struct Affine {
    std::complex<double> a{0.0, 0.0};
    std::complex<double> b{0.0, 0.0};
};
std::optional<Affine> as_affine(const SurfaceNode& n, const std::string& var);

}  // namespace almostconv::detail
