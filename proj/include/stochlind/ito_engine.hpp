#pragma once

// First-order Ito differential algebra with operator-valued coefficients.
//
// An ItoPolynomial is  C + D dt + sum_n W_n dW^n  with matrix coefficients.
// Products follow dW^m dW^n = c^{mn} dt and dW dt = dt dt = 0; anything of
// higher order is discarded. Coefficient order is preserved since the
// operators do not commute.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/operator_algebra.hpp"

namespace stochlind {

class ItoContext {
  public:
    /// Requires unit diagonal and PSD within tol::clip.
    explicit ItoContext(RealSymmetricMatrix covariance) : c_(std::move(covariance))
    {
        for (Index n = 0; n < c_.size(); ++n) {
            if (std::abs(c_(n, n) - 1.0) > tol::symmetry) {
                throw ModelError("ItoContext: covariance diagonal entry " + std::to_string(n) + " is " +
                                 std::to_string(c_(n, n)) + ", expected 1");
            }
        }
        const double lo = eig_symmetric(c_).eigenvalues(0);
        if (lo < -tol::clip) {
            throw ModelError("ItoContext: covariance min eigenvalue " + std::to_string(lo) + " is negative");
        }
    }

    static ItoContext independent(Index noise_count)
    {
        return ItoContext(RealSymmetricMatrix::identity(noise_count));
    }

    const RealSymmetricMatrix& covariance() const noexcept { return c_; }
    Index noise_count() const noexcept { return c_.size(); }

  private:
    RealSymmetricMatrix c_;
};

class ItoPolynomial {
  public:
    ItoPolynomial(Index dim, Index noise_count)
        : const_(ComplexMatrix::Zero(dim, dim)),
          dt_(ComplexMatrix::Zero(dim, dim)),
          dw_(static_cast<std::size_t>(noise_count), ComplexMatrix::Zero(dim, dim))
    {
        if (dim < 1 || noise_count < 0) {
            throw DimensionError("ItoPolynomial: dim must be >= 1 and noise_count >= 0");
        }
    }

    static ItoPolynomial constant(const ComplexMatrix& x, Index noise_count)
    {
        detail::require_square(x, "ItoPolynomial::constant");
        ItoPolynomial p(x.rows(), noise_count);
        p.const_ = x;
        return p;
    }

    static ItoPolynomial drift(const ComplexMatrix& y, Index noise_count)
    {
        detail::require_square(y, "ItoPolynomial::drift");
        ItoPolynomial p(y.rows(), noise_count);
        p.dt_ = y;
        return p;
    }

    /// v dW^n
    static ItoPolynomial noise(Index n, const ComplexMatrix& v, Index noise_count)
    {
        detail::require_square(v, "ItoPolynomial::noise");
        if (n < 0 || n >= noise_count) {
            throw DimensionError("ItoPolynomial::noise: index " + std::to_string(n) + " out of range");
        }
        ItoPolynomial p(v.rows(), noise_count);
        p.dw_[static_cast<std::size_t>(n)] = v;
        return p;
    }

    Index dim() const noexcept { return const_.rows(); }
    Index noise_count() const noexcept { return static_cast<Index>(dw_.size()); }

    const ComplexMatrix& const_term() const noexcept { return const_; }
    const ComplexMatrix& dt_term() const noexcept { return dt_; }
    const ComplexMatrix& dw_term(Index n) const { return dw_.at(static_cast<std::size_t>(n)); }
    const std::vector<ComplexMatrix>& dw_terms() const noexcept { return dw_; }

    ComplexMatrix& const_term() noexcept { return const_; }
    ComplexMatrix& dt_term() noexcept { return dt_; }
    ComplexMatrix& dw_term(Index n) { return dw_.at(static_cast<std::size_t>(n)); }

    ItoPolynomial& operator+=(const ItoPolynomial& o)
    {
        require_compatible(o, "ItoPolynomial::operator+=");
        const_ += o.const_;
        dt_ += o.dt_;
        for (std::size_t n = 0; n < dw_.size(); ++n) {
            dw_[n] += o.dw_[n];
        }
        return *this;
    }

    ItoPolynomial& operator-=(const ItoPolynomial& o)
    {
        require_compatible(o, "ItoPolynomial::operator-=");
        const_ -= o.const_;
        dt_ -= o.dt_;
        for (std::size_t n = 0; n < dw_.size(); ++n) {
            dw_[n] -= o.dw_[n];
        }
        return *this;
    }

    ItoPolynomial& operator*=(Complex s)
    {
        const_ *= s;
        dt_ *= s;
        for (auto& w : dw_) {
            w *= s;
        }
        return *this;
    }

    friend ItoPolynomial operator+(ItoPolynomial a, const ItoPolynomial& b) { return a += b; }
    friend ItoPolynomial operator-(ItoPolynomial a, const ItoPolynomial& b) { return a -= b; }
    friend ItoPolynomial operator*(Complex s, ItoPolynomial a) { return a *= s; }

    /// Largest Frobenius norm over all coefficients.
    double max_coefficient_norm() const
    {
        double m = std::max(const_.norm(), dt_.norm());
        for (const auto& w : dw_) {
            m = std::max(m, w.norm());
        }
        return m;
    }

    void require_compatible(const ItoPolynomial& o, const char* what) const
    {
        if (o.dim() != dim() || o.noise_count() != noise_count()) {
            throw DimensionError(std::string(what) + ": operands differ in dim or noise count");
        }
    }

  private:
    ComplexMatrix const_;
    ComplexMatrix dt_;
    std::vector<ComplexMatrix> dw_;
};

/// Coefficient-wise adjoint; the differentials themselves are real.
inline ItoPolynomial adjoint(const ItoPolynomial& p)
{
    ItoPolynomial out(p.dim(), p.noise_count());
    out.const_term() = p.const_term().adjoint();
    out.dt_term() = p.dt_term().adjoint();
    for (Index n = 0; n < p.noise_count(); ++n) {
        out.dw_term(n) = p.dw_term(n).adjoint();
    }
    return out;
}

inline ItoPolynomial ito_mul(const ItoContext& ctx, const ItoPolynomial& p, const ItoPolynomial& q)
{
    p.require_compatible(q, "ito_mul");
    if (p.noise_count() != ctx.noise_count()) {
        throw DimensionError("ito_mul: polynomial has " + std::to_string(p.noise_count()) +
                             " noises, context has " + std::to_string(ctx.noise_count()));
    }
    const Index noises = p.noise_count();
    const RealMatrix& c = ctx.covariance().matrix();

    ItoPolynomial out(p.dim(), noises);
    out.const_term().noalias() = p.const_term() * q.const_term();
    out.dt_term().noalias() = p.const_term() * q.dt_term();
    out.dt_term().noalias() += p.dt_term() * q.const_term();
    for (Index n = 0; n < noises; ++n) {
        out.dw_term(n).noalias() = p.const_term() * q.dw_term(n);
        out.dw_term(n).noalias() += p.dw_term(n) * q.const_term();
    }
    for (Index m = 0; m < noises; ++m) {
        for (Index n = 0; n < noises; ++n) {
            if (c(m, n) != 0.0) {
                out.dt_term().noalias() += c(m, n) * (p.dw_term(m) * q.dw_term(n));
            }
        }
    }
    return out;
}

struct ItoExpectation {
    ComplexMatrix constant;
    ComplexMatrix dt;
};

/// E[X dW^n] = 0 for non-anticipating X: only the 1 and dt parts survive.
inline ItoExpectation ito_expectation(const ItoPolynomial& p) { return {p.const_term(), p.dt_term()}; }

/// A_n = d_n + d_n U dt + v_n dW^n, using the symmetric split u_n = d_n U.
inline ItoPolynomial infinitesimal_kraus_operator(const LindbladModel& model, Index n, const ComplexMatrix& drift)
{
    const Index dim = model.dim();
    const Index noises = model.noise_count();
    const double d = model.weight(n);
    ItoPolynomial a(dim, noises);
    a.const_term() = d * ComplexMatrix::Identity(dim, dim);
    a.dt_term() = d * drift;
    a.dw_term(n) = model.lindblad_op(n);
    return a;
}

struct StochasticEvolution {
    ComplexMatrix constant_residual;          // sum_n d_n^2 rho - rho
    std::vector<ComplexMatrix> noise_coeffs;  // dW^n coefficient of d rho
    ComplexMatrix drift_coeff;                // dt coefficient of d rho
    double trace_residual = 0.0;              // |Tr drift_coeff|
};

/// Expands sum_n A_n rho A_n^dagger - rho symbolically in the Ito algebra
/// and returns its coefficients for the given test state.
inline StochasticEvolution derive_stochastic_evolution(const LindbladModel& model, const ComplexMatrix& rho)
{
    if (rho.rows() != model.dim() || rho.cols() != model.dim()) {
        throw DimensionError("derive_stochastic_evolution: state dimension mismatch");
    }
    const ValidationReport rep = validate_model(model);
    if (!rep.weights_ok()) {
        throw ModelError("derive_stochastic_evolution: " + rep.first_violation());
    }
    const ItoContext ctx(model.covariance());
    const Index noises = model.noise_count();
    const ComplexMatrix drift = drift_operator(model);
    const ItoPolynomial state = ItoPolynomial::constant(rho, noises);

    ItoPolynomial total(model.dim(), noises);
    for (Index n = 0; n < noises; ++n) {
        const ItoPolynomial a = infinitesimal_kraus_operator(model, n, drift);
        total += ito_mul(ctx, ito_mul(ctx, a, state), adjoint(a));
    }
    total -= state;

    StochasticEvolution out;
    out.constant_residual = total.const_term();
    out.noise_coeffs = total.dw_terms();
    out.drift_coeff = total.dt_term();
    out.trace_residual = std::abs(out.drift_coeff.trace());
    return out;
}

}  // namespace stochlind
