#pragma once

// Stochastic unraveling of the Lindblad equation:
//
//   d rho = sum_n d_n (v_n rho + rho v_n^dagger) dW^n + L(rho) dt
//
// integrated by Euler-Maruyama, plus the exact exponential step for the
// single-noise unitary case v = -iK, and a Monte Carlo ensemble runner.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/noise.hpp"
#include "stochlind/ode.hpp"
#include "stochlind/operator_algebra.hpp"
#include "stochlind/random.hpp"

namespace stochlind {

//---------------------------------------------------------------------------//
// Single steps
//---------------------------------------------------------------------------//

/// Euler-Maruyama step with model data precomputed and scratch matrices
/// reused across calls. Not thread-safe; use one per worker.
class EulerStepper {
  public:
    explicit EulerStepper(const LindbladModel& model)
        : h_(model.hamiltonian().matrix()),
          s_half_(0.5 * dissipation_operator(model)),
          weights_(model.weights())
    {
        require_valid(model);
        for (const auto& v : model.lindblad_ops()) {
            v_.push_back(v);
            vdag_.push_back(v.adjoint());
        }
        next_.resize(model.dim(), model.dim());
        tmp_.resize(model.dim(), model.dim());
    }

    Index dim() const noexcept { return h_.rows(); }
    Index noise_count() const noexcept { return static_cast<Index>(v_.size()); }

    /// rho <- Herm(rho + noise + L(rho) dt). Returns the relative
    /// hermiticity residual of the update before symmetrization.
    double step(ComplexMatrix& rho, double dt, std::span<const double> dw)
    {
        next_ = rho;
        tmp_.noalias() = h_ * rho;
        next_ += Complex(0.0, -dt) * tmp_;
        tmp_.noalias() = rho * h_;
        next_ += Complex(0.0, dt) * tmp_;
        tmp_.noalias() = s_half_ * rho;
        next_ -= dt * tmp_;
        tmp_.noalias() = rho * s_half_;
        next_ -= dt * tmp_;
        for (std::size_t n = 0; n < v_.size(); ++n) {
            const double g = weights_[n] * dw[n];
            tmp_.noalias() = v_[n] * rho;
            next_ += g * tmp_;
            next_.noalias() += dt * (tmp_ * vdag_[n]);
            tmp_.noalias() = rho * vdag_[n];
            next_ += g * tmp_;
        }
        const double herm = hermiticity_residual(next_);
        rho = 0.5 * (next_ + next_.adjoint());
        return herm;
    }

  private:
    ComplexMatrix h_;
    ComplexMatrix s_half_;
    std::vector<double> weights_;
    std::vector<ComplexMatrix> v_;
    std::vector<ComplexMatrix> vdag_;
    ComplexMatrix next_;
    ComplexMatrix tmp_;
};

/// rho + sum_n d_n (v_n rho + rho v_n^dagger) dW^n + L(rho) dt, re-Hermitized.
inline ComplexMatrix sde_step(const LindbladModel& model, const ComplexMatrix& rho, double dt,
                              std::span<const double> dw)
{
    if (rho.rows() != model.dim() || rho.cols() != model.dim()) {
        throw DimensionError("sde_step: state dimension mismatch");
    }
    if (static_cast<Index>(dw.size()) != model.noise_count()) {
        throw DimensionError("sde_step: " + std::to_string(dw.size()) + " increments for " +
                             std::to_string(model.noise_count()) + " noises");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("sde_step: dt must be positive");
    }
    EulerStepper stepper(model);
    ComplexMatrix out = rho;
    stepper.step(out, dt, dw);
    if (!out.allFinite()) {
        throw NumericalError("sde_step: non-finite output");
    }
    return out;
}

/// exp(-i(H dt + K dW)) through the eigendecomposition of H dt + K dW.
inline ComplexMatrix stochastic_unitary(const HermitianOperator& h, const HermitianOperator& k, double dt, double dw)
{
    detail::require_same_dim(h.matrix(), k.matrix(), "stochastic_unitary");
    const ComplexMatrix gen = dt * h.matrix() + dw * k.matrix();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(gen));
    const RealVector& lam = solver.eigenvalues();
    const ComplexMatrix& q = solver.eigenvectors();
    ComplexVector phases(lam.size());
    for (Index i = 0; i < lam.size(); ++i) {
        phases(i) = std::polar(1.0, -lam(i));
    }
    return q * phases.asDiagonal() * q.adjoint();
}

inline ComplexMatrix stochastic_unitary_step(const HermitianOperator& h, const HermitianOperator& k,
                                             const ComplexMatrix& rho, double dt, double dw)
{
    detail::require_same_dim(h.matrix(), rho, "stochastic_unitary_step");
    const ComplexMatrix v = stochastic_unitary(h, k, dt, dw);
    return hermitian_part(v * rho * v.adjoint());
}

inline DensityMatrix stochastic_unitary_step(const HermitianOperator& h, const HermitianOperator& k,
                                             const DensityMatrix& rho, double dt, double dw)
{
    return DensityMatrix(stochastic_unitary_step(h, k, rho.matrix(), dt, dw));
}

//---------------------------------------------------------------------------//
// Trajectories and ensembles
//---------------------------------------------------------------------------//

enum class StepperKind { euler, exact_unitary };

inline constexpr double kStiffnessWarn = 0.1;
inline constexpr double kStiffnessFail = 1.0;

struct EnsembleConfig {
    double t_final = 1.0;
    double dt = 1e-3;
    std::uint64_t trajectories = 1000;
    std::uint64_t seed = 0;
    std::size_t record_every = 1;
    StepperKind stepper = StepperKind::euler;
    unsigned workers = 0;  // 0: hardware concurrency
};

struct Trajectory {
    std::vector<double> times;
    std::vector<ComplexMatrix> states;
    std::vector<double> purity_series;
    double trace_min = std::numeric_limits<double>::infinity();  // over every step
    double trace_max = -std::numeric_limits<double>::infinity();
    double min_eigenvalue_seen = std::numeric_limits<double>::infinity();  // over recorded states
    double max_hermiticity_residual = 0.0;  // before re-Hermitization, Euler only
};

struct EnsembleStats {
    std::vector<double> times;
    std::vector<ComplexMatrix> mean_state;
    std::vector<double> standard_error;  // Frobenius norm of the per-entry standard error
    std::uint64_t trajectory_count = 0;
    std::uint64_t seed = 0;
};

struct EnsembleDiagnostics {
    double trace_min = std::numeric_limits<double>::infinity();
    double trace_max = -std::numeric_limits<double>::infinity();
    double min_eigenvalue = std::numeric_limits<double>::infinity();
    double max_hermiticity_residual = 0.0;
    std::vector<double> min_eigenvalue_by_time;  // worst trajectory at each recorded time
    std::vector<std::string> warnings;
};

struct EnsembleResult {
    EnsembleStats stats;
    EnsembleDiagnostics diagnostics;
};

namespace detail {

/// Recorded sample indices shared by ODE, trajectory and ensemble output:
/// t = 0, every record_every steps, and the final step.
inline std::vector<std::uint64_t> record_steps(std::uint64_t steps, std::size_t record_every)
{
    std::vector<std::uint64_t> out{0};
    for (std::uint64_t k = 1; k <= steps; ++k) {
        if (k % record_every == 0 || k == steps) {
            out.push_back(k);
        }
    }
    return out;
}

/// Per-worker trajectory engine: owns the stepper and sampler scratch.
class TrajectoryEngine {
  public:
    TrajectoryEngine(const LindbladModel& model, const EnsembleConfig& cfg)
        : cfg_(cfg),
          steps_(step_count(cfg.t_final, cfg.dt)),
          sampler_(diagonalize_covariance(model.covariance()), cfg.dt),
          dw_(static_cast<std::size_t>(model.noise_count()))
    {
        if (cfg.record_every < 1) {
            throw ConfigError("record_every must be >= 1");
        }
        if (cfg.stepper == StepperKind::euler) {
            euler_.emplace(model);
        } else {
            const auto k = stochastic_unitary_generator(model);
            if (!k) {
                throw ModelError("exact_unitary stepper needs a single-noise model with v = -iK (v + v^dagger = 0)");
            }
            require_valid(model);
            h_.emplace(model.hamiltonian());
            k_.emplace(*k);
        }
    }

    std::uint64_t steps() const noexcept { return steps_; }

    /// Runs trajectory `index`; `record(sample, time, rho)` is called at
    /// every recorded step. Throws TrajectoryError on non-finite states.
    template <class Record>
    void run(const ComplexMatrix& rho0, std::uint64_t index, Trajectory& diag, Record&& record)
    {
        const CounterStream rng(cfg_.seed, index);
        ComplexMatrix rho = rho0;
        std::size_t sample = 0;
        observe(diag, rho);
        record(sample++, 0.0, rho);
        for (std::uint64_t k = 1; k <= steps_; ++k) {
            sampler_.sample(rng, k - 1, dw_);
            if (euler_) {
                const double herm = euler_->step(rho, cfg_.dt, dw_);
                diag.max_hermiticity_residual = std::max(diag.max_hermiticity_residual, herm);
            } else {
                rho = stochastic_unitary_step(*h_, *k_, rho, cfg_.dt, dw_[0]);
            }
            const double t = static_cast<double>(k) * cfg_.dt;
            if (!rho.allFinite()) {
                throw TrajectoryError(index, t, "non-finite state");
            }
            observe(diag, rho);
            if (k % cfg_.record_every == 0 || k == steps_) {
                record(sample++, t, rho);
            }
        }
    }

  private:
    static void observe(Trajectory& diag, const ComplexMatrix& rho)
    {
        const double tr = rho.trace().real();
        diag.trace_min = std::min(diag.trace_min, tr);
        diag.trace_max = std::max(diag.trace_max, tr);
    }

    EnsembleConfig cfg_;
    std::uint64_t steps_;
    IncrementSampler sampler_;
    std::vector<double> dw_;
    std::optional<EulerStepper> euler_;
    std::optional<HermitianOperator> h_;
    std::optional<HermitianOperator> k_;
};

inline void check_step_regime(const LindbladModel& model, double dt, std::vector<std::string>& warnings)
{
    const double load = dt * step_stiffness(model);
    if (load > kStiffnessFail) {
        throw NumericalError("dt * (||H|| + sum ||v_n||^2) = " + std::to_string(load) + " exceeds " +
                             std::to_string(kStiffnessFail));
    }
    if (load > kStiffnessWarn) {
        warnings.push_back("dt * (||H|| + sum ||v_n||^2) = " + std::to_string(load) + " exceeds " +
                           std::to_string(kStiffnessWarn) + "; Euler bias may be significant");
    }
}

}  // namespace detail

/// One realization with full state history. Trajectory `index` uses the
/// same noise as trajectory `index` of run_ensemble with the same seed.
inline Trajectory run_trajectory(const LindbladModel& model, const DensityMatrix& rho0, const EnsembleConfig& cfg,
                                 std::uint64_t index)
{
    if (rho0.dim() != model.dim()) {
        throw DimensionError("run_trajectory: initial state dimension mismatch");
    }
    detail::TrajectoryEngine engine(model, cfg);
    Trajectory traj;
    engine.run(rho0.matrix(), index, traj, [&](std::size_t, double t, const ComplexMatrix& rho) {
        traj.times.push_back(t);
        traj.states.push_back(rho);
        traj.purity_series.push_back(purity(rho));
        traj.min_eigenvalue_seen = std::min(traj.min_eigenvalue_seen, min_eigenvalue(rho));
    });
    return traj;
}

inline constexpr std::uint64_t kEnsembleBlock = 64;

/// Monte Carlo mean of rho over independent trajectories. Trajectories are
/// grouped in fixed blocks of kEnsembleBlock; sums run in trajectory order
/// inside a block and blocks are merged in index order, so the result does
/// not depend on the worker count.
inline EnsembleResult run_ensemble(const LindbladModel& model, const DensityMatrix& rho0, const EnsembleConfig& cfg)
{
    if (rho0.dim() != model.dim()) {
        throw DimensionError("run_ensemble: initial state dimension mismatch");
    }
    if (cfg.trajectories < 1) {
        throw ConfigError("run_ensemble: trajectories must be >= 1");
    }
    EnsembleResult result;
    detail::check_step_regime(model, cfg.dt, result.diagnostics.warnings);

    // Construct once up front so configuration errors surface here.
    const detail::TrajectoryEngine probe(model, cfg);
    const std::vector<std::uint64_t> rec = detail::record_steps(probe.steps(), cfg.record_every);
    const std::size_t samples = rec.size();
    const Index dim = model.dim();

    struct BlockSums {
        std::vector<ComplexMatrix> sum;
        std::vector<RealMatrix> sum_sq;
        std::vector<double> min_eig;
        Trajectory diag;
        std::optional<TrajectoryError> error;
    };

    const std::uint64_t blocks = (cfg.trajectories + kEnsembleBlock - 1) / kEnsembleBlock;
    unsigned workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));

    std::vector<ComplexMatrix> total(samples, ComplexMatrix::Zero(dim, dim));
    std::vector<RealMatrix> total_sq(samples, RealMatrix::Zero(dim, dim));
    std::vector<double> min_eig(samples, std::numeric_limits<double>::infinity());
    Trajectory total_diag;
    std::optional<TrajectoryError> first_error;

    std::mutex merge_mutex;
    std::map<std::uint64_t, BlockSums> pending;
    std::uint64_t next_merge = 0;
    std::atomic<std::uint64_t> next_block{0};
    std::atomic<bool> failed{false};
    std::exception_ptr setup_error;

    auto merge = [&](BlockSums& b) {
        for (std::size_t s = 0; s < samples; ++s) {
            total[s] += b.sum[s];
            total_sq[s] += b.sum_sq[s];
            min_eig[s] = std::min(min_eig[s], b.min_eig[s]);
        }
        total_diag.trace_min = std::min(total_diag.trace_min, b.diag.trace_min);
        total_diag.trace_max = std::max(total_diag.trace_max, b.diag.trace_max);
        total_diag.max_hermiticity_residual =
            std::max(total_diag.max_hermiticity_residual, b.diag.max_hermiticity_residual);
    };

    auto worker = [&] {
        try {
            detail::TrajectoryEngine engine(model, cfg);
            while (!failed.load()) {
                const std::uint64_t b = next_block.fetch_add(1);
                if (b >= blocks) {
                    break;
                }
                BlockSums sums{std::vector<ComplexMatrix>(samples, ComplexMatrix::Zero(dim, dim)),
                               std::vector<RealMatrix>(samples, RealMatrix::Zero(dim, dim)),
                               std::vector<double>(samples, std::numeric_limits<double>::infinity()),
                               {},
                               std::nullopt};
                const std::uint64_t first = b * kEnsembleBlock;
                const std::uint64_t last = std::min(cfg.trajectories, first + kEnsembleBlock);
                try {
                    for (std::uint64_t i = first; i < last; ++i) {
                        engine.run(rho0.matrix(), i, sums.diag, [&](std::size_t s, double, const ComplexMatrix& rho) {
                            sums.sum[s] += rho;
                            sums.sum_sq[s] += rho.cwiseAbs2();
                            sums.min_eig[s] = std::min(sums.min_eig[s], min_eigenvalue(rho));
                        });
                    }
                } catch (const TrajectoryError& e) {
                    sums.error = e;
                    failed.store(true);
                }
                std::lock_guard<std::mutex> lock(merge_mutex);
                if (sums.error) {
                    if (!first_error || sums.error->trajectory() < first_error->trajectory()) {
                        first_error = sums.error;
                    }
                    continue;
                }
                pending.emplace(b, std::move(sums));
                for (auto it = pending.find(next_merge); it != pending.end(); it = pending.find(next_merge)) {
                    merge(it->second);
                    pending.erase(it);
                    ++next_merge;
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(merge_mutex);
            setup_error = std::current_exception();
            failed.store(true);
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (setup_error) {
        std::rethrow_exception(setup_error);
    }
    if (first_error) {
        throw *first_error;
    }

    const double n = static_cast<double>(cfg.trajectories);
    EnsembleStats& st = result.stats;
    st.trajectory_count = cfg.trajectories;
    st.seed = cfg.seed;
    for (std::size_t s = 0; s < samples; ++s) {
        st.times.push_back(static_cast<double>(rec[s]) * cfg.dt);
        ComplexMatrix mean = total[s] / n;
        double se = 0.0;
        if (cfg.trajectories > 1) {
            const double var_sum = (total_sq[s] - n * mean.cwiseAbs2()).sum() / (n - 1.0);
            se = std::sqrt(std::max(var_sum, 0.0) / n);
        }
        st.mean_state.push_back(std::move(mean));
        st.standard_error.push_back(se);
    }
    EnsembleDiagnostics& dg = result.diagnostics;
    dg.trace_min = total_diag.trace_min;
    dg.trace_max = total_diag.trace_max;
    dg.max_hermiticity_residual = total_diag.max_hermiticity_residual;
    dg.min_eigenvalue_by_time = min_eig;
    dg.min_eigenvalue = *std::min_element(min_eig.begin(), min_eig.end());
    return result;
}

}  // namespace stochlind
