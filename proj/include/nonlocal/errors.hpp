#pragma once

#include <stdexcept>
#include <string>

namespace nonlocal {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad user-supplied configuration (unknown rule, n < 2, p < 1, ...).
class config_error : public error {
public:
    using error::error;
};

/// Kernel fails a structural requirement (asymmetry, negativity, excess row mass).
class kernel_error : public error {
public:
    using error::error;
};

/// Operands live on different grids or have mismatched sizes.
class dimension_error : public error {
public:
    using error::error;
};

/// Input outside the mathematical domain of the operation.
class domain_error : public error {
public:
    using error::error;
};

/// A claimed dissipativity bound failed at a sample point.
class certification_error : public error {
public:
    using error::error;
};

/// Argument outside the invertible range of a nonlinearity.
class range_error : public error {
public:
    using error::error;
};

/// The nonlinearity lacks a capability the operation needs (e.g. an inverse).
class capability_error : public error {
public:
    using error::error;
};

/// Fixed-point iteration failed to contract or exhausted its budget.
class convergence_error : public error {
public:
    using error::error;
};

/// Trajectory left the finite range (norm above the blow-up threshold).
class blowup_error : public error {
public:
    using error::error;
};

/// A stated precondition of the operation does not hold for the inputs.
class precondition_error : public error {
public:
    using error::error;
};

}  // namespace nonlocal
