#pragma once

// Kraus-form completely positive maps, their Choi matrices, and the
// infinitesimal channel A_n = d_n + d_n U dt + v_n dW^n evaluated at
// concrete increments.

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/operator_algebra.hpp"

namespace stochlind {

class KrausChannel {
  public:
    explicit KrausChannel(std::vector<ComplexMatrix> operators) : ops_(std::move(operators))
    {
        if (ops_.empty()) {
            throw DimensionError("KrausChannel: at least one operator is required");
        }
        detail::require_square(ops_.front(), "KrausChannel");
        for (const auto& a : ops_) {
            detail::require_same_dim(a, ops_.front(), "KrausChannel");
        }
    }

    Index dim() const noexcept { return ops_.front().rows(); }
    const std::vector<ComplexMatrix>& operators() const noexcept { return ops_; }

  private:
    std::vector<ComplexMatrix> ops_;
};

inline ComplexMatrix apply_kraus(const KrausChannel& ch, const ComplexMatrix& x)
{
    if (x.rows() != ch.dim() || x.cols() != ch.dim()) {
        throw DimensionError("apply_kraus: operand is " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + ", channel dimension " + std::to_string(ch.dim()));
    }
    ComplexMatrix out = ComplexMatrix::Zero(ch.dim(), ch.dim());
    for (const auto& a : ch.operators()) {
        out.noalias() += a * x * a.adjoint();
    }
    return out;
}

struct TraceCheck {
    bool preserving = false;
    double residual = 0.0;  // || sum A^dagger A - I ||_F
};

inline TraceCheck is_trace_preserving(const KrausChannel& ch, double tol)
{
    ComplexMatrix s = -ComplexMatrix::Identity(ch.dim(), ch.dim());
    for (const auto& a : ch.operators()) {
        s.noalias() += a.adjoint() * a;
    }
    const double r = s.norm();
    return {r <= tol, r};
}

class ChoiMatrix {
  public:
    explicit ChoiMatrix(const ComplexMatrix& m) : op_(m) {}
    const ComplexMatrix& matrix() const noexcept { return op_.matrix(); }
    Index dim() const noexcept { return op_.dim(); }

  private:
    HermitianOperator op_;
};

/// (I (x) T)(|Omega><Omega|) with |Omega> = sum_i |i>|i>, i.e.
/// C[(i,k),(j,l)] = T(|i><j|)[k,l] = sum_n vec(A_n) vec(A_n)^dagger with
/// column-stacking vec.
inline ChoiMatrix choi_of(const KrausChannel& ch)
{
    const Index d = ch.dim();
    ComplexMatrix choi = ComplexMatrix::Zero(d * d, d * d);
    for (const auto& a : ch.operators()) {
        const Eigen::Map<const ComplexVector> vec(a.data(), d * d);  // Eigen storage is column-major
        choi.noalias() += vec * vec.adjoint();
    }
    return ChoiMatrix(choi);
}

/// {d_n I + d_n U dt + v_n dW^n} for sampled increments dW.
inline KrausChannel build_infinitesimal_kraus(const LindbladModel& model, double dt, std::span<const double> dw)
{
    if (!(dt > 0.0)) {
        throw ConfigError("build_infinitesimal_kraus: dt must be positive");
    }
    if (static_cast<Index>(dw.size()) != model.noise_count()) {
        throw DimensionError("build_infinitesimal_kraus: " + std::to_string(dw.size()) + " increments for " +
                             std::to_string(model.noise_count()) + " noises");
    }
    require_valid(model);
    const Index dim = model.dim();
    const ComplexMatrix drift = drift_operator(model);
    const ComplexMatrix id = ComplexMatrix::Identity(dim, dim);
    std::vector<ComplexMatrix> ops;
    ops.reserve(dw.size());
    for (Index n = 0; n < model.noise_count(); ++n) {
        const double d = model.weight(n);
        ops.push_back(d * id + (d * dt) * drift + dw[static_cast<std::size_t>(n)] * model.lindblad_op(n));
    }
    return KrausChannel(std::move(ops));
}

}  // namespace stochlind
