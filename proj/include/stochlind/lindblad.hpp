#pragma once

// Lindblad models: the tuple (H, {v_n}, {d_n}, c), their validation, the
// drift operator U = -iH - 1/2 sum v_n^dagger v_n, and the Lindblad
// right-hand side.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/operator_algebra.hpp"

namespace stochlind {

inline constexpr double kWeightTol = 1e-10;
inline constexpr double kDriftConstraintTol = 1e-8;

class LindbladModel {
  public:
    /// Checks shapes only. Hard invariants are reported by validate_model
    /// and enforced by require_valid.
    LindbladModel(HermitianOperator hamiltonian, std::vector<ComplexMatrix> lindblad_ops,
                  std::vector<double> weights, RealSymmetricMatrix covariance)
        : hamiltonian_(std::move(hamiltonian)),
          ops_(std::move(lindblad_ops)),
          weights_(std::move(weights)),
          covariance_(std::move(covariance))
    {
        const Index d = hamiltonian_.dim();
        if (ops_.empty()) {
            throw DimensionError("LindbladModel: at least one Lindblad operator is required");
        }
        for (std::size_t n = 0; n < ops_.size(); ++n) {
            if (ops_[n].rows() != d || ops_[n].cols() != d) {
                throw DimensionError("LindbladModel: Lindblad operator " + std::to_string(n) +
                                     " is not " + std::to_string(d) + "x" + std::to_string(d));
            }
            detail::require_finite(ops_[n], "LindbladModel");
        }
        if (weights_.size() != ops_.size()) {
            throw DimensionError("LindbladModel: " + std::to_string(weights_.size()) + " weights for " +
                                 std::to_string(ops_.size()) + " Lindblad operators");
        }
        if (covariance_.size() != static_cast<Index>(ops_.size())) {
            throw DimensionError("LindbladModel: covariance is " + std::to_string(covariance_.size()) +
                                 "x" + std::to_string(covariance_.size()) + " for " +
                                 std::to_string(ops_.size()) + " noises");
        }
    }

    /// One noise with d = 1 and c = [[1]].
    static LindbladModel single_noise(const ComplexMatrix& hamiltonian, const ComplexMatrix& v)
    {
        return LindbladModel(HermitianOperator(hamiltonian), {v}, {1.0}, RealSymmetricMatrix::identity(1));
    }

    Index dim() const noexcept { return hamiltonian_.dim(); }
    Index noise_count() const noexcept { return static_cast<Index>(ops_.size()); }

    const HermitianOperator& hamiltonian() const noexcept { return hamiltonian_; }
    const std::vector<ComplexMatrix>& lindblad_ops() const noexcept { return ops_; }
    const ComplexMatrix& lindblad_op(Index n) const { return ops_.at(static_cast<std::size_t>(n)); }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double weight(Index n) const { return weights_.at(static_cast<std::size_t>(n)); }
    const RealSymmetricMatrix& covariance() const noexcept { return covariance_; }

  private:
    HermitianOperator hamiltonian_;
    std::vector<ComplexMatrix> ops_;
    std::vector<double> weights_;
    RealSymmetricMatrix covariance_;
};

struct DriftConstraint {
    Index direction = 0;      // eigen-direction r of c
    double eigenvalue = 0.0;  // c^r
    double residual = 0.0;    // || sum_n d_n (v_n + v_n^dagger) O^{nr} ||_F
};

struct ValidationReport {
    double weight_residual = 0.0;  // |sum d_n^2 - 1|
    bool weights_positive = true;
    double covariance_diagonal_residual = 0.0;  // max |c^{nn} - 1|
    double covariance_min_eigenvalue = 0.0;
    std::vector<DriftConstraint> drift_constraints;  // active directions only
    bool trajectory_trace_preserving = false;

    bool weights_ok() const { return weights_positive && weight_residual <= kWeightTol; }
    bool covariance_ok() const
    {
        return covariance_diagonal_residual <= tol::symmetry && covariance_min_eigenvalue >= -tol::clip;
    }
    bool valid() const { return weights_ok() && covariance_ok(); }

    /// First hard violation as a one-line message, empty when valid.
    std::string first_violation() const
    {
        std::ostringstream os;
        os.precision(17);
        if (!weights_positive) {
            os << "weights must be positive";
        } else if (weight_residual > kWeightTol) {
            os << "sum of squared weights differs from 1 by " << weight_residual;
        } else if (covariance_diagonal_residual > tol::symmetry) {
            os << "covariance diagonal differs from 1 by " << covariance_diagonal_residual;
        } else if (covariance_min_eigenvalue < -tol::clip) {
            os << "covariance is not positive semidefinite (min eigenvalue " << covariance_min_eigenvalue
               << ")";
        }
        return os.str();
    }

    std::string describe() const
    {
        std::ostringstream os;
        os.precision(6);
        os << "weight normalization residual: " << weight_residual << (weights_ok() ? "" : "  [VIOLATED]")
           << "\n";
        os << "weights positive: " << (weights_positive ? "yes" : "no") << "\n";
        os << "covariance diagonal residual: " << covariance_diagonal_residual << "\n";
        os << "covariance min eigenvalue: " << covariance_min_eigenvalue << (covariance_ok() ? "" : "  [VIOLATED]")
           << "\n";
        for (const auto& dc : drift_constraints) {
            os << "drift constraint r=" << dc.direction << " (c^r=" << dc.eigenvalue << "): residual "
               << dc.residual << "\n";
        }
        os << "trajectory trace preserving: " << (trajectory_trace_preserving ? "yes" : "no") << "\n";
        return os.str();
    }
};

inline ValidationReport validate_model(const LindbladModel& model)
{
    ValidationReport rep;
    double sum_sq = 0.0;
    for (double d : model.weights()) {
        sum_sq += d * d;
        if (!(d > 0.0)) {
            rep.weights_positive = false;
        }
    }
    rep.weight_residual = std::abs(sum_sq - 1.0);

    const RealMatrix& c = model.covariance().matrix();
    for (Index n = 0; n < c.rows(); ++n) {
        rep.covariance_diagonal_residual = std::max(rep.covariance_diagonal_residual, std::abs(c(n, n) - 1.0));
    }

    const SymmetricEigen eig = eig_symmetric(model.covariance());
    rep.covariance_min_eigenvalue = eig.eigenvalues(0);

    bool preserving = true;
    const Index dim = model.dim();
    for (Index r = 0; r < c.rows(); ++r) {
        if (eig.eigenvalues(r) <= tol::clip) {
            continue;
        }
        ComplexMatrix acc = ComplexMatrix::Zero(dim, dim);
        for (Index n = 0; n < model.noise_count(); ++n) {
            const ComplexMatrix& v = model.lindblad_op(n);
            acc += (model.weight(n) * eig.eigenvectors(n, r)) * (v + v.adjoint());
        }
        DriftConstraint dc{r, eig.eigenvalues(r), acc.norm()};
        preserving = preserving && dc.residual <= kDriftConstraintTol;
        rep.drift_constraints.push_back(dc);
    }
    rep.trajectory_trace_preserving = preserving;
    return rep;
}

/// Throws ModelError carrying the offending residual.
inline void require_valid(const LindbladModel& model)
{
    const ValidationReport rep = validate_model(model);
    if (!rep.valid()) {
        throw ModelError("invalid model: " + rep.first_violation());
    }
}

/// sum_n v_n^dagger v_n
inline ComplexMatrix dissipation_operator(const LindbladModel& model)
{
    ComplexMatrix s = ComplexMatrix::Zero(model.dim(), model.dim());
    for (const auto& v : model.lindblad_ops()) {
        s.noalias() += v.adjoint() * v;
    }
    return s;
}

/// U = -iH - 1/2 sum_n v_n^dagger v_n, the unique drift that keeps the
/// mean evolution trace preserving given H.
inline ComplexMatrix drift_operator(const LindbladModel& model)
{
    return -kI * model.hamiltonian().matrix() - 0.5 * dissipation_operator(model);
}

inline ComplexMatrix lindblad_rhs(const LindbladModel& model, const ComplexMatrix& rho)
{
    if (rho.rows() != model.dim() || rho.cols() != model.dim()) {
        throw DimensionError("lindblad_rhs: state is " + std::to_string(rho.rows()) + "x" +
                             std::to_string(rho.cols()) + ", model dimension " + std::to_string(model.dim()));
    }
    ComplexMatrix out = -kI * commutator(model.hamiltonian().matrix(), rho);
    for (const auto& v : model.lindblad_ops()) {
        const ComplexMatrix vdv = v.adjoint() * v;
        out.noalias() += v * rho * v.adjoint();
        out.noalias() -= 0.5 * (vdv * rho);
        out.noalias() -= 0.5 * (rho * vdv);
    }
    return out;
}

inline ComplexMatrix lindblad_rhs(const LindbladModel& model, const DensityMatrix& rho)
{
    return lindblad_rhs(model, rho.matrix());
}

/// ||H||_2 + sum_n ||v_n||_2^2; dt times this must stay small for the
/// Euler unraveling to be in its intended regime.
inline double step_stiffness(const LindbladModel& model)
{
    double s = spectral_norm(model.hamiltonian().matrix());
    for (const auto& v : model.lindblad_ops()) {
        const double nv = spectral_norm(v);
        s += nv * nv;
    }
    return s;
}

/// K with v = -iK when the model has one noise and v + v^dagger = 0;
/// otherwise nullopt.
inline std::optional<HermitianOperator> stochastic_unitary_generator(const LindbladModel& model)
{
    if (model.noise_count() != 1) {
        return std::nullopt;
    }
    const ComplexMatrix& v = model.lindblad_op(0);
    const double scale = std::max(v.norm(), 1.0);
    if ((v + v.adjoint()).norm() > kDriftConstraintTol * scale) {
        return std::nullopt;
    }
    return HermitianOperator(hermitian_part(kI * v));
}

}  // namespace stochlind
