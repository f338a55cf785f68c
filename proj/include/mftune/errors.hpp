#ifndef MFTUNE_ERRORS_HPP
#define MFTUNE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mftune {

/// Raised when arguments violate a documented precondition (dimension
/// mismatch, out-of-range parameter, non-finite observation, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a symmetric matrix cannot be Cholesky-factored even after the
/// full jitter escalation.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, double min_eigenvalue)
        : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}

    double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

/// A mathematical precondition of a bound (e.g. sigma^2 < lambda_min(Q)) is
/// not met.
class PreconditionError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Internal consistency failure, e.g. a supplied optimum that is not the max.
class InconsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace mftune

#endif // MFTUNE_ERRORS_HPP
