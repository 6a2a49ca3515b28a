#pragma once

// Dense complex matrices and the structural checks used everywhere else:
// Hermiticity, density-matrix validity, spectra and the PSD factorization
// behind correlated noise sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <utility>

#include "stochlind/errors.hpp"

namespace stochlind {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

namespace tol {
inline constexpr double hermiticity = 1e-10;  // relative Frobenius
inline constexpr double symmetry = 1e-10;     // relative Frobenius
inline constexpr double trace = 1e-8;
inline constexpr double psd = 1e-8;
inline constexpr double clip = 1e-10;
inline constexpr double factor = 1e-10;
}  // namespace tol

namespace detail {

template <class Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* what)
{
    if (m.rows() < 1 || m.rows() != m.cols()) {
        throw DimensionError(std::string(what) + ": expected a nonempty square matrix, got " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

template <class A, class B>
void require_same_dim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, const char* what)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.rows()) +
                             "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what)
{
    if (!m.allFinite()) {
        throw NumericalError(std::string(what) + ": non-finite entry");
    }
}

}  // namespace detail

inline ComplexMatrix adjoint(const ComplexMatrix& m) { return m.adjoint(); }

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b)
{
    detail::require_same_dim(a, b, "commutator");
    return a * b - b * a;
}

inline ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b)
{
    detail::require_same_dim(a, b, "anticommutator");
    return a * b + b * a;
}

/// ||M - M^dagger||_F / ||M||_F, or 0 for the zero matrix.
inline double hermiticity_residual(const ComplexMatrix& m)
{
    const double scale = m.norm();
    if (scale == 0.0) {
        return 0.0;
    }
    return (m - m.adjoint()).norm() / scale;
}

inline double symmetry_residual(const RealMatrix& m)
{
    const double scale = m.norm();
    if (scale == 0.0) {
        return 0.0;
    }
    return (m - m.transpose()).norm() / scale;
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

/// Largest singular value.
inline double spectral_norm(const ComplexMatrix& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    return svd.singularValues()(0);
}

//---------------------------------------------------------------------------//
// Strong types
//---------------------------------------------------------------------------//

class HermitianOperator {
  public:
    /// Stores the Hermitian part of `m` after checking it is Hermitian
    /// within tol::hermiticity.
    explicit HermitianOperator(const ComplexMatrix& m)
    {
        detail::require_square(m, "HermitianOperator");
        detail::require_finite(m, "HermitianOperator");
        const double res = hermiticity_residual(m);
        if (res > tol::hermiticity) {
            throw ModelError("HermitianOperator: relative hermiticity residual " + std::to_string(res) +
                             " exceeds " + std::to_string(tol::hermiticity));
        }
        matrix_ = hermitian_part(m);
    }

    const ComplexMatrix& matrix() const noexcept { return matrix_; }
    Index dim() const noexcept { return matrix_.rows(); }

  private:
    ComplexMatrix matrix_;
};

class RealSymmetricMatrix {
  public:
    explicit RealSymmetricMatrix(const RealMatrix& m)
    {
        detail::require_square(m, "RealSymmetricMatrix");
        detail::require_finite(m, "RealSymmetricMatrix");
        const double res = symmetry_residual(m);
        if (res > tol::symmetry) {
            throw ModelError("RealSymmetricMatrix: relative symmetry residual " + std::to_string(res) +
                             " exceeds " + std::to_string(tol::symmetry));
        }
        matrix_ = 0.5 * (m + m.transpose());
    }

    static RealSymmetricMatrix identity(Index n) { return RealSymmetricMatrix(RealMatrix::Identity(n, n)); }

    const RealMatrix& matrix() const noexcept { return matrix_; }
    Index size() const noexcept { return matrix_.rows(); }
    double operator()(Index i, Index j) const { return matrix_(i, j); }

  private:
    RealMatrix matrix_;
};

//---------------------------------------------------------------------------//
// Spectra
//---------------------------------------------------------------------------//

struct HermitianEigen {
    RealVector eigenvalues;      // ascending
    ComplexMatrix eigenvectors;  // columns
};

inline HermitianEigen eig_hermitian(const HermitianOperator& m)
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m.matrix());
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eig_hermitian: eigensolver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Rejects inputs that are not Hermitian within tol::hermiticity.
inline HermitianEigen eig_hermitian(const ComplexMatrix& m) { return eig_hermitian(HermitianOperator(m)); }

/// Spectrum of the Hermitian part; no tolerance check. Used for diagnostics
/// on states that are monitored rather than validated.
inline RealVector hermitian_eigenvalues(const ComplexMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

inline double min_eigenvalue(const ComplexMatrix& m) { return hermitian_eigenvalues(m)(0); }

inline double purity(const ComplexMatrix& rho) { return (rho * rho).trace().real(); }

struct SymmetricEigen {
    RealVector eigenvalues;  // ascending
    RealMatrix eigenvectors; // orthogonal, columns
};

inline SymmetricEigen eig_symmetric(const RealSymmetricMatrix& c)
{
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(c.matrix());
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eig_symmetric: eigensolver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

struct PsdFactor {
    RealMatrix factor;  // N x rank, factor * factor^T = c
    Index rank = 0;
};

/// F = O_active * diag(sqrt(c_r)) over eigenpairs with c_r > clip_tol.
/// Works for singular c (e.g. the all-ones matrix) where Cholesky does not.
inline PsdFactor psd_factor(const RealSymmetricMatrix& c, double clip_tol = tol::clip)
{
    const SymmetricEigen eig = eig_symmetric(c);
    if (eig.eigenvalues(0) < -clip_tol) {
        throw ModelError("psd_factor: covariance has eigenvalue " + std::to_string(eig.eigenvalues(0)) +
                         " below -" + std::to_string(clip_tol));
    }
    const Index n = c.size();
    PsdFactor out;
    out.rank = static_cast<Index>((eig.eigenvalues.array() > clip_tol).count());
    out.factor.resize(n, out.rank);
    Index col = 0;
    for (Index r = 0; r < n; ++r) {
        if (eig.eigenvalues(r) > clip_tol) {
            out.factor.col(col++) = eig.eigenvectors.col(r) * std::sqrt(eig.eigenvalues(r));
        }
    }
    return out;
}

//---------------------------------------------------------------------------//
// Density matrices
//---------------------------------------------------------------------------//

class DensityMatrix {
  public:
    explicit DensityMatrix(const ComplexMatrix& m) : op_(m)
    {
        const double tr_err = std::abs(op_.matrix().trace() - Complex{1.0, 0.0});
        if (tr_err > tol::trace) {
            throw ModelError("DensityMatrix: |Tr rho - 1| = " + std::to_string(tr_err) + " exceeds " +
                             std::to_string(tol::trace));
        }
        const double lo = min_eigenvalue(op_.matrix());
        if (lo < -tol::psd) {
            throw ModelError("DensityMatrix: smallest eigenvalue " + std::to_string(lo) + " below -" +
                             std::to_string(tol::psd));
        }
    }

    /// |psi><psi| for the normalized `psi`.
    static DensityMatrix pure(const ComplexVector& psi)
    {
        const double n = psi.norm();
        if (psi.size() < 1 || n == 0.0) {
            throw DimensionError("DensityMatrix::pure: empty or zero state vector");
        }
        const ComplexVector u = psi / n;
        return DensityMatrix(u * u.adjoint());
    }

    static DensityMatrix maximally_mixed(Index dim)
    {
        return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
    }

    const ComplexMatrix& matrix() const noexcept { return op_.matrix(); }
    Index dim() const noexcept { return op_.dim(); }

  private:
    HermitianOperator op_;
};

//---------------------------------------------------------------------------//
// Common qubit operators. Basis order is (|0>, |1>); sigma_minus = |0><1|.
//---------------------------------------------------------------------------//

namespace qubit {

inline ComplexMatrix sigma_x()
{
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline ComplexMatrix sigma_y()
{
    ComplexMatrix m(2, 2);
    m << 0.0, -kI, kI, 0.0;
    return m;
}

inline ComplexMatrix sigma_z()
{
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

inline ComplexMatrix sigma_minus()
{
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = 1.0;
    return m;
}

inline ComplexMatrix sigma_plus() { return sigma_minus().adjoint(); }

inline ComplexVector ket(Index k)
{
    ComplexVector v = ComplexVector::Zero(2);
    v(k) = 1.0;
    return v;
}

inline ComplexVector plus_state()
{
    ComplexVector v(2);
    v << 1.0, 1.0;
    return v / std::sqrt(2.0);
}

}  // namespace qubit

}  // namespace stochlind
