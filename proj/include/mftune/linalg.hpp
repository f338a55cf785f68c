#ifndef MFTUNE_LINALG_HPP
#define MFTUNE_LINALG_HPP

#include <Eigen/Dense>

namespace mftune {

/// Diagonal regularisation applied when a plain Cholesky factorization fails:
/// add `relative * mean(diag)`, then multiply the added amount by `growth`, at
/// most `max_escalations` times.
struct JitterPolicy {
    double relative = 1e-10;
    double growth = 10.0;
    int max_escalations = 6;
};

/// Lower Cholesky factor of a symmetric positive definite matrix, together
/// with the diagonal jitter that was needed to obtain it.
class Cholesky {
public:
    Cholesky() = default;

    /// Throws FactorizationError (carrying a minimum-eigenvalue estimate) if
    /// the matrix is not positive definite after the jitter escalation.
    static Cholesky factor(const Eigen::MatrixXd& A, const JitterPolicy& policy = {});

    Eigen::Index size() const { return L_.rows(); }
    const Eigen::MatrixXd& lower() const { return L_; }
    double jitter() const { return jitter_; }

    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    /// L^{-1} B
    Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& B) const;
    double log_determinant() const;

    /// Factor of [[A, c], [c^T, d]] where A is the matrix this object factors.
    /// The stored jitter is applied to the new diagonal entry. Falls back to a
    /// full refactorization if the rank-one extension loses definiteness.
    Cholesky extended(const Eigen::VectorXd& cross, double diagonal, const JitterPolicy& policy = {}) const;

private:
    Cholesky(Eigen::MatrixXd L, double jitter) : L_(std::move(L)), jitter_(jitter) {}

    Eigen::MatrixXd reconstruct_without_jitter() const;

    Eigen::MatrixXd L_;
    double jitter_ = 0.0;
};

/// Dense symmetric matrix. Construction checks symmetry to 1e-12 relative and
/// stores the exactly symmetrised value.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Eigen::MatrixXd& A);

    static bool is_symmetric(const Eigen::MatrixXd& A, double relative_tolerance = 1e-12);

    const Eigen::MatrixXd& matrix() const { return A_; }
    Eigen::Index size() const { return A_.rows(); }

    Cholesky factor(const JitterPolicy& policy = {}) const { return Cholesky::factor(A_, policy); }

    /// Eigenvalues sorted in descending order.
    Eigen::VectorXd eigenvalues_descending() const;
    double min_eigenvalue() const;
    double max_eigenvalue() const;

private:
    Eigen::MatrixXd A_;
};

/// Solves A X = B for symmetric positive definite A, jittering on failure.
Eigen::MatrixXd factor_solve(const SymMatrix& A, const Eigen::MatrixXd& B, const JitterPolicy& policy = {});

/// Minimum eigenvalue of the symmetric part of A.
double min_symmetric_eigenvalue(const Eigen::MatrixXd& A);

} // namespace mftune

#endif // MFTUNE_LINALG_HPP
