#include "mftune/linalg.hpp"

#include <cmath>
#include <sstream>

#include "mftune/errors.hpp"

namespace mftune {

namespace {

bool try_llt(const Eigen::MatrixXd& A, double jitter, Eigen::MatrixXd& L)
{
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (jitter == 0.0) {
        llt.compute(A);
    } else {
        Eigen::MatrixXd B = A;
        B.diagonal().array() += jitter;
        llt.compute(B);
    }
    if (llt.info() != Eigen::Success)
        return false;
    L = llt.matrixL();
    // Eigen's LLT reports success on some matrices with tiny negative pivots
    // that produce NaNs; treat those as failures too.
    return L.allFinite() && (L.diagonal().array() > 0.0).all();
}

} // namespace

Cholesky Cholesky::factor(const Eigen::MatrixXd& A, const JitterPolicy& policy)
{
    if (A.rows() != A.cols())
        throw InvalidInput("cannot factor a non-square matrix");
    if (A.rows() == 0)
        return Cholesky(Eigen::MatrixXd(0, 0), 0.0);
    if (!A.allFinite())
        throw InvalidInput("cannot factor a matrix with non-finite entries");

    Eigen::MatrixXd L;
    if (try_llt(A, 0.0, L))
        return Cholesky(std::move(L), 0.0);

    const double mean_diag = std::abs(A.diagonal().mean());
    double jitter = policy.relative * (mean_diag > 0.0 ? mean_diag : 1.0);
    for (int attempt = 0; attempt <= policy.max_escalations; ++attempt) {
        if (try_llt(A, jitter, L))
            return Cholesky(std::move(L), jitter);
        jitter *= policy.growth;
    }

    const double min_eig = min_symmetric_eigenvalue(A);
    std::ostringstream msg;
    msg << "matrix of size " << A.rows() << " is not positive definite after jitter escalation "
        << "(minimum eigenvalue estimate " << min_eig << ")";
    throw FactorizationError(msg.str(), min_eig);
}

Eigen::MatrixXd Cholesky::solve(const Eigen::MatrixXd& B) const
{
    if (B.rows() != size())
        throw InvalidInput("right-hand side row count does not match the factored matrix");
    Eigen::MatrixXd X = L_.triangularView<Eigen::Lower>().solve(B);
    L_.triangularView<Eigen::Lower>().transpose().solveInPlace(X);
    return X;
}

Eigen::VectorXd Cholesky::solve(const Eigen::VectorXd& b) const
{
    return solve(Eigen::MatrixXd(b));
}

Eigen::MatrixXd Cholesky::solve_lower(const Eigen::MatrixXd& B) const
{
    if (B.rows() != size())
        throw InvalidInput("right-hand side row count does not match the factored matrix");
    return L_.triangularView<Eigen::Lower>().solve(B);
}

double Cholesky::log_determinant() const
{
    return 2.0 * L_.diagonal().array().log().sum();
}

Eigen::MatrixXd Cholesky::reconstruct_without_jitter() const
{
    Eigen::MatrixXd A = L_ * L_.transpose();
    A.diagonal().array() -= jitter_;
    return A;
}

Cholesky Cholesky::extended(const Eigen::VectorXd& cross, double diagonal, const JitterPolicy& policy) const
{
    const Eigen::Index n = size();
    if (cross.size() != n)
        throw InvalidInput("cross-covariance length does not match the factored matrix");

    const Eigen::VectorXd l = n > 0 ? Eigen::VectorXd(solve_lower(cross)) : Eigen::VectorXd(0);
    const double pivot = diagonal + jitter_ - l.squaredNorm();
    if (pivot > 0.0 && std::isfinite(pivot)) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 1, n + 1);
        L.topLeftCorner(n, n) = L_;
        L.block(n, 0, 1, n) = l.transpose();
        L(n, n) = std::sqrt(pivot);
        return Cholesky(std::move(L), jitter_);
    }

    Eigen::MatrixXd A(n + 1, n + 1);
    A.topLeftCorner(n, n) = reconstruct_without_jitter();
    A.block(0, n, n, 1) = cross;
    A.block(n, 0, 1, n) = cross.transpose();
    A(n, n) = diagonal;
    return factor(0.5 * (A + A.transpose()), policy);
}

SymMatrix::SymMatrix(const Eigen::MatrixXd& A)
{
    if (A.rows() != A.cols())
        throw InvalidInput("symmetric matrix must be square");
    if (!is_symmetric(A))
        throw InvalidInput("matrix is not symmetric to within 1e-12 relative");
    A_ = 0.5 * (A + A.transpose());
}

bool SymMatrix::is_symmetric(const Eigen::MatrixXd& A, double relative_tolerance)
{
    if (A.rows() != A.cols())
        return false;
    if (A.size() == 0)
        return true;
    const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
    return (A - A.transpose()).cwiseAbs().maxCoeff() <= relative_tolerance * scale;
}

Eigen::VectorXd SymMatrix::eigenvalues_descending() const
{
    if (size() == 0)
        return Eigen::VectorXd(0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().reverse();
}

double SymMatrix::min_eigenvalue() const
{
    return min_symmetric_eigenvalue(A_);
}

double SymMatrix::max_eigenvalue() const
{
    if (size() == 0)
        return 0.0;
    return eigenvalues_descending()[0];
}

Eigen::MatrixXd factor_solve(const SymMatrix& A, const Eigen::MatrixXd& B, const JitterPolicy& policy)
{
    return A.factor(policy).solve(B);
}

double min_symmetric_eigenvalue(const Eigen::MatrixXd& A)
{
    if (A.rows() == 0)
        return 0.0;
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

} // namespace mftune
