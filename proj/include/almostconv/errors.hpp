#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace almostconv {

// Parse failure with the offset into the input and what would have been
// accepted there.
struct SyntaxError : std::runtime_error {
    std::size_t position;
    std::string expected;
    SyntaxError(const std::string& message, std::size_t pos,
                std::string expected_tokens = "")
        : std::runtime_error(message + " (at offset " + std::to_string(pos) +
                             (expected_tokens.empty()
                                  ? ")"
                                  : "; expected " + expected_tokens + ")")),
          position(pos),
          expected(std::move(expected_tokens)) {}
};

// The expression parsed but denotes something without a finite sup bound
// (bare t, polynomial growth, complex frequency, ...).
struct UnboundedConstruct : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotADensity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonpositiveDilation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a sup/inf scan has no usable horizon: the signal has no
// recognized translation structure and the caller supplied no explicit range.
struct HorizonUnsupported : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InadmissibleKernel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An adaptive integral ran out of its evaluation budget where the caller
// cannot degrade gracefully (e.g. a Mellin value feeding an admissibility
// decision).
struct QuadratureBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionUnmet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace almostconv
