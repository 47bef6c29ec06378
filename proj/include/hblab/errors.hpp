#pragma once

#include <stdexcept>
#include <string>

namespace hblab {

// Error taxonomy shared by all evaluators. Each names the condition that
// makes a result unrepresentable rather than merely inaccurate.

// Evaluation point coincides with a pole (a zero of E in the lower half-plane).
struct PoleHit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Declared tail exponents do not certify convergence of the product/sum,
// or the requested point exceeds the truncation budget.
struct TailNotConvergent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No sublevel point found inside the theorem-backed search window.
struct WindowExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dyadic bisection passed its depth cap (a zero of Theta essentially on R).
struct ResolutionExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Query outside the finite working range of a cover / node table.
struct OutOfCoveredRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Root bracketing for spectral nodes failed to isolate a crossing.
struct RootBracketFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Test-function index/point invalid for the model.
struct InvalidIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integrand failed the decay monitor; the quadrature cannot certify a value.
struct NonConvergent : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hblab
