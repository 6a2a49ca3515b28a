#pragma once

// Correlated Wiener increments. The covariance c is diagonalized as
// c O = O diag(c^r); independent increments dZ^r with variance c^r dt are
// drawn and rotated back, dW = O dZ. Directions with c^r = 0 get no draw,
// so dW always lies in the range of c.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/operator_algebra.hpp"
#include "stochlind/random.hpp"

namespace stochlind {

struct NoiseBasis {
    RealMatrix orthogonal;  // O, columns are eigen-directions
    RealVector eigenvalues; // c^r >= 0, ascending, clipped
    Index active_count = 0;

    Index noise_count() const noexcept { return orthogonal.rows(); }
    bool active(Index r) const { return eigenvalues(r) > 0.0; }
};

inline NoiseBasis diagonalize_covariance(const RealSymmetricMatrix& c)
{
    const SymmetricEigen eig = eig_symmetric(c);
    if (eig.eigenvalues(0) < -tol::clip) {
        throw ModelError("diagonalize_covariance: eigenvalue " + std::to_string(eig.eigenvalues(0)) +
                         " is below -" + std::to_string(tol::clip));
    }
    NoiseBasis basis;
    basis.orthogonal = eig.eigenvectors;
    basis.eigenvalues = eig.eigenvalues;
    for (Index r = 0; r < basis.eigenvalues.size(); ++r) {
        if (std::abs(basis.eigenvalues(r)) <= tol::clip) {
            basis.eigenvalues(r) = 0.0;
        } else {
            ++basis.active_count;
        }
    }
    return basis;
}

/// Increment sampler bound to one basis and step size; holds scratch space
/// so per-step sampling does not allocate.
class IncrementSampler {
  public:
    IncrementSampler(const NoiseBasis& basis, double dt) : orthogonal_(basis.orthogonal)
    {
        if (!(dt > 0.0)) {
            throw ConfigError("IncrementSampler: dt must be positive");
        }
        for (Index r = 0; r < basis.eigenvalues.size(); ++r) {
            if (basis.active(r)) {
                active_.push_back(r);
                scale_.push_back(std::sqrt(basis.eigenvalues(r) * dt));
            }
        }
        xi_.resize(active_.size());
    }

    Index noise_count() const noexcept { return orthogonal_.rows(); }

    void sample(const CounterStream& rng, std::uint64_t step, std::span<double> dw)
    {
        if (static_cast<Index>(dw.size()) != noise_count()) {
            throw DimensionError("IncrementSampler: output has " + std::to_string(dw.size()) + " slots for " +
                                 std::to_string(noise_count()) + " noises");
        }
        rng.normals(step, xi_);
        for (auto& x : dw) {
            x = 0.0;
        }
        for (std::size_t a = 0; a < active_.size(); ++a) {
            const double dz = scale_[a] * xi_[a];
            const Index r = active_[a];
            for (Index n = 0; n < noise_count(); ++n) {
                dw[static_cast<std::size_t>(n)] += orthogonal_(n, r) * dz;
            }
        }
    }

  private:
    RealMatrix orthogonal_;
    std::vector<Index> active_;
    std::vector<double> scale_;
    std::vector<double> xi_;
};

/// dW for one step: dZ^r = sqrt(c^r dt) xi^r on active directions, dW = O dZ.
inline std::vector<double> sample_increments(const NoiseBasis& basis, double dt, const CounterStream& rng,
                                             std::uint64_t step)
{
    IncrementSampler sampler(basis, dt);
    std::vector<double> dw(static_cast<std::size_t>(basis.noise_count()));
    sampler.sample(rng, step, dw);
    return dw;
}

}  // namespace stochlind
