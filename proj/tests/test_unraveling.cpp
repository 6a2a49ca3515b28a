#include <gtest/gtest.h>

#include <array>

#include "stochlind/cli/model_io.hpp"
#include "test_support.hpp"

using namespace stochlind;
using namespace stochlind::testing;

namespace {

const DensityMatrix kPlus = DensityMatrix::pure(qubit::plus_state());

LindbladModel preset(const std::string& name) { return cli::load_preset(name).model; }

/// Models that satisfy the trajectory-level trace condition: either all
/// v_n anti-Hermitian, or Hermitian parts cancelling across perfectly
/// correlated noises.
LindbladModel trace_preserving_model(Rng& rng, Index d, int kind)
{
    if (kind == 0) {
        const Index noises = 1 + static_cast<Index>(rng() % 3);
        std::vector<ComplexMatrix> ops;
        std::vector<double> w(static_cast<std::size_t>(noises), 1.0 / std::sqrt(static_cast<double>(noises)));
        for (Index n = 0; n < noises; ++n) {
            ops.push_back(-kI * random_hermitian(rng, d, 0.5));
        }
        return LindbladModel(HermitianOperator(random_hermitian(rng, d)), ops, w,
                             RealSymmetricMatrix(random_unit_diag_covariance(rng, noises)));
    }
    const ComplexMatrix a = random_complex(rng, d, 0.5);
    const std::vector<double> w{std::sqrt(0.5), std::sqrt(0.5)};
    return LindbladModel(HermitianOperator(random_hermitian(rng, d)), {a, -a}, w,
                         RealSymmetricMatrix(RealMatrix::Ones(2, 2)));
}

EnsembleConfig config(double t_final, double dt, std::uint64_t n, std::uint64_t seed, std::size_t record_every = 1)
{
    EnsembleConfig cfg;
    cfg.t_final = t_final;
    cfg.dt = dt;
    cfg.trajectories = n;
    cfg.seed = seed;
    cfg.record_every = record_every;
    cfg.workers = 1;
    return cfg;
}

}  // namespace

//---------------------------------------------------------------------------//
// sde_step
//---------------------------------------------------------------------------//

TEST(SdeStep, NoDynamicsLeavesStateUnchanged)
{
    Rng rng(80);
    const auto m = LindbladModel::single_noise(ComplexMatrix::Zero(3, 3), ComplexMatrix::Zero(3, 3));
    const ComplexMatrix rho = random_density(rng, 3);
    const std::array<double, 1> dw{0.05};
    EXPECT_EQ(sde_step(m, rho, 1e-3, dw), rho);
}

TEST(SdeStep, StochasticUnitaryIncrement)
{
    Rng rng(81);
    const ComplexMatrix h = random_hermitian(rng, 3);
    const ComplexMatrix k = random_hermitian(rng, 3);
    const auto m = LindbladModel::single_noise(h, -kI * k);
    const ComplexMatrix rho = random_density(rng, 3);
    const double dt = 1e-3;
    const std::array<double, 1> dw{-0.04};
    auto comm = [](const ComplexMatrix& a, const ComplexMatrix& b) -> ComplexMatrix {
        return ref_mul(a, b) - ref_mul(b, a);
    };
    const ComplexMatrix expect =
        rho - kI * comm(k, rho) * dw[0] + (-kI * comm(h, rho) - 0.5 * comm(k, comm(k, rho))) * dt;
    EXPECT_LT(max_abs_diff(sde_step(m, rho, dt, dw), expect), 1e-15);
}

TEST(SdeStep, MatchesReferenceFormula)
{
    Rng rng(82);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        const Index d = 1 + trial % 5;
        const LindbladModel m = random_model(rng, d, 1 + trial % 3);
        const ComplexMatrix rho = random_density(rng, d);
        const double dt = 1e-3;
        std::vector<double> dw;
        ComplexMatrix expect = rho + ref_lindblad(m, rho) * dt;
        for (Index n = 0; n < m.noise_count(); ++n) {
            dw.push_back(std::sqrt(dt) * normal(rng));
            const ComplexMatrix& v = m.lindblad_op(n);
            expect += m.weight(n) * (ref_mul(v, rho) + ref_mul(rho, ref_adj(v))) * dw.back();
        }
        const ComplexMatrix out = sde_step(m, rho, dt, dw);
        EXPECT_LT(max_abs_diff(out, expect), 1e-14);
        EXPECT_EQ(out, out.adjoint().eval());
    }
}

TEST(SdeStep, PerStepTraceUnderConstraint)
{
    Rng rng(83);
    for (int trial = 0; trial < 40; ++trial) {
        const Index d = 1 + trial % 4;
        const LindbladModel m = trace_preserving_model(rng, d, trial % 2);
        ASSERT_TRUE(validate_model(m).trajectory_trace_preserving);
        const NoiseBasis basis = diagonalize_covariance(m.covariance());
        const CounterStream stream(static_cast<std::uint64_t>(trial), 0);
        EulerStepper stepper(m);
        ComplexMatrix rho = random_density(rng, d);
        const double tr0 = rho.trace().real();
        for (std::uint64_t k = 0; k < 1000; ++k) {
            const double before = rho.trace().real();
            const std::vector<double> dw = sample_increments(basis, 1e-3, stream, k);
            const double herm = stepper.step(rho, 1e-3, dw);
            ASSERT_LE(std::abs(rho.trace().real() - before), 1e-13 * static_cast<double>(d)) << trial << " " << k;
            ASSERT_LE(herm, 1e-12);
        }
        EXPECT_LE(std::abs(rho.trace().real() - tr0), 1e-10);
    }
}

TEST(SdeStep, Errors)
{
    const LindbladModel m = preset("dephasing");
    const std::array<double, 1> one{0.0};
    const std::array<double, 2> two{0.0, 0.0};
    EXPECT_THROW(sde_step(m, ComplexMatrix::Identity(3, 3), 1e-3, one), DimensionError);
    EXPECT_THROW(sde_step(m, kPlus.matrix(), 1e-3, two), DimensionError);
    EXPECT_THROW(sde_step(m, kPlus.matrix(), -1e-3, one), ConfigError);
    const std::array<double, 1> huge{1e300};
    const auto big = LindbladModel::single_noise(ComplexMatrix::Zero(2, 2), 1e10 * qubit::sigma_minus());
    EXPECT_THROW(sde_step(big, kPlus.matrix(), 1e-3, huge), NumericalError);
}

//---------------------------------------------------------------------------//
// stochastic_unitary_step
//---------------------------------------------------------------------------//

TEST(StochasticUnitary, ZeroStepIsIdentity)
{
    Rng rng(84);
    const HermitianOperator h(random_hermitian(rng, 3));
    const HermitianOperator k(random_hermitian(rng, 3));
    const ComplexMatrix rho = random_density(rng, 3);
    EXPECT_LT(max_abs_diff(stochastic_unitary_step(h, k, rho, 0.0, 0.0), rho), 1e-15);
}

TEST(StochasticUnitary, PurityOfPureState)
{
    const HermitianOperator h(ComplexMatrix::Zero(2, 2));
    const HermitianOperator k(qubit::sigma_z());
    DensityMatrix rho = kPlus;
    const CounterStream stream(1, 0);
    std::array<double, 1> xi{};
    for (std::uint64_t s = 0; s < 1000; ++s) {
        stream.normals(s, xi);
        rho = stochastic_unitary_step(h, k, rho, 1e-3, std::sqrt(1e-3) * xi[0]);
    }
    EXPECT_NEAR(purity(rho.matrix()), 1.0, 1e-10);
}

TEST(StochasticUnitary, UnitaryAndSpectrumPreserving)
{
    Rng rng(85);
    for (int trial = 0; trial < 30; ++trial) {
        const Index d = 1 + trial % 6;
        const HermitianOperator h(random_hermitian(rng, d));
        const HermitianOperator k(random_hermitian(rng, d));
        const ComplexMatrix v = stochastic_unitary(h, k, 1e-2, 0.1);
        EXPECT_LE((v.adjoint() * v - ComplexMatrix::Identity(d, d)).norm(), 1e-13);
        const ComplexMatrix rho = random_density(rng, d);
        const ComplexMatrix out = stochastic_unitary_step(h, k, rho, 1e-2, 0.1);
        EXPECT_LE((hermitian_eigenvalues(out) - hermitian_eigenvalues(rho)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(StochasticUnitary, MatchesMatrixExponentialForCommutingCase)
{
    // H and K diagonal: V is diagonal with phases exp(-i(h dt + k dW)).
    ComplexMatrix h = ComplexMatrix::Zero(3, 3);
    ComplexMatrix k = ComplexMatrix::Zero(3, 3);
    h.diagonal() << 0.3, -1.0, 2.0;
    k.diagonal() << 1.0, 0.5, -0.7;
    const ComplexMatrix v = stochastic_unitary(HermitianOperator(h), HermitianOperator(k), 0.01, 0.2);
    for (Index i = 0; i < 3; ++i) {
        const Complex expect = std::exp(Complex(0.0, -(h(i, i).real() * 0.01 + k(i, i).real() * 0.2)));
        EXPECT_LT(std::abs(v(i, i) - expect), 1e-15);
    }
}

TEST(StochasticUnitary, FirstOrderExpansionResidual)
{
    // V - (1 - iK dW + (-iH - K^2/2) dt) with dW = +-sqrt(dt) is O(dt^{3/2}).
    Rng rng(86);
    const ComplexMatrix h = random_hermitian(rng, 3);
    const ComplexMatrix k = random_hermitian(rng, 3);
    const HermitianOperator ho(h), ko(k);
    auto residual = [&](double dt, double sign) {
        const double dw = sign * std::sqrt(dt);
        const ComplexMatrix approx = ComplexMatrix::Identity(3, 3) - kI * k * dw + (-kI * h - 0.5 * k * k) * dt;
        return (stochastic_unitary(ho, ko, dt, dw) - approx).norm();
    };
    for (const double sign : {1.0, -1.0}) {
        const double ratio = residual(1e-4, sign) / residual(0.5e-4, sign);
        EXPECT_GT(ratio, 2.6);
        EXPECT_LT(ratio, 3.1);
    }
}

//---------------------------------------------------------------------------//
// run_trajectory / run_ensemble
//---------------------------------------------------------------------------//

TEST(Ensemble, NoNoiseSingleTrajectoryEqualsOde)
{
    const auto m = LindbladModel::single_noise(ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2));
    const EnsembleResult r = run_ensemble(m, kPlus, config(1.0, 1e-2, 1, 3, 10));
    const OdeTrajectory ode = integrate_ode(m, kPlus, 1.0, 1e-2, 10);
    ASSERT_EQ(r.stats.times.size(), ode.times.size());
    for (std::size_t s = 0; s < ode.times.size(); ++s) {
        EXPECT_EQ(r.stats.times[s], ode.times[s]);
        EXPECT_EQ(r.stats.mean_state[s], ode.states[s]);
        EXPECT_EQ(r.stats.standard_error[s], 0.0);
    }
}

TEST(Ensemble, NoNoiseFollowsEulerRecursion)
{
    const auto m = LindbladModel::single_noise(qubit::sigma_x(), ComplexMatrix::Zero(2, 2));
    const EnsembleResult r = run_ensemble(m, kPlus, config(0.5, 1e-2, 1, 0, 1));
    ComplexMatrix rho = kPlus.matrix();
    for (std::size_t s = 0; s < r.stats.times.size(); ++s) {
        EXPECT_EQ(r.stats.mean_state[s], rho) << s;
        rho = hermitian_part(rho + lindblad_rhs(m, rho) * 1e-2);
    }
}

TEST(Ensemble, TrajectoryMatchesEnsembleMember)
{
    const LindbladModel m = preset("two-noise-correlated");
    const EnsembleConfig cfg = config(0.2, 1e-3, 1, 11, 20);
    const Trajectory tr = run_trajectory(m, kPlus, cfg, 0);
    const EnsembleResult r = run_ensemble(m, kPlus, cfg);
    ASSERT_EQ(tr.states.size(), r.stats.mean_state.size());
    for (std::size_t s = 0; s < tr.states.size(); ++s) {
        EXPECT_EQ(tr.states[s], r.stats.mean_state[s]);
        EXPECT_EQ(tr.purity_series[s], purity(tr.states[s]));
    }
    EXPECT_EQ(tr.times, r.stats.times);
}

TEST(Ensemble, RecordsStartEveryKAndEnd)
{
    const EnsembleResult r = run_ensemble(preset("dephasing"), kPlus, config(0.1, 1e-3, 2, 0, 30));
    const std::vector<double> expect{0.0, 0.03, 0.06, 0.09, 0.1};
    ASSERT_EQ(r.stats.times.size(), expect.size());
    for (std::size_t s = 0; s < expect.size(); ++s) {
        EXPECT_NEAR(r.stats.times[s], expect[s], 1e-15);
    }
}

TEST(Ensemble, DephasingCoherenceDecay)
{
    const EnsembleResult r = run_ensemble(preset("dephasing"), kPlus, config(1.0, 1e-3, 2000, 17, 100));
    for (std::size_t s = 0; s < r.stats.times.size(); ++s) {
        const double err = std::abs(r.stats.mean_state[s](0, 1) - 0.5 * std::exp(-r.stats.times[s]));
        EXPECT_LE(err, std::max(3.0 * r.stats.standard_error[s], 0.02)) << "t=" << r.stats.times[s];
    }
    EXPECT_LE(std::abs(r.diagnostics.trace_max - 1.0), 1e-10);
    EXPECT_LE(std::abs(r.diagnostics.trace_min - 1.0), 1e-10);
}

TEST(Ensemble, AmplitudeDampingMeanVersusTrajectoryTrace)
{
    const EnsembleResult r = run_ensemble(preset("amplitude-damping"), kPlus, config(1.0, 1e-3, 2000, 5, 100));
    const OdeTrajectory ode = integrate_ode(preset("amplitude-damping"), kPlus, 1.0, 1e-3, 100);
    for (std::size_t s = 0; s < r.stats.times.size(); ++s) {
        EXPECT_LE((r.stats.mean_state[s] - ode.states[s]).norm(), 3.0 * r.stats.standard_error[s] + 1e-12);
        EXPECT_LE(std::abs(r.stats.mean_state[s].trace().real() - 1.0),
                  3.0 * r.stats.standard_error[s] + 1e-12);
    }
    EXPECT_GT(std::max(r.diagnostics.trace_max - 1.0, 1.0 - r.diagnostics.trace_min), 1e-2);
}

TEST(Ensemble, MeanFieldRecursion)
{
    const LindbladModel m = preset("dephasing");
    const EnsembleResult r = run_ensemble(m, kPlus, config(0.1, 1e-3, 100000, 23, 10));
    ComplexMatrix rho = kPlus.matrix();
    std::size_t s = 0;
    for (std::uint64_t k = 0; k <= 100; ++k) {
        if (k % 10 == 0) {
            ASSERT_NEAR(r.stats.times[s], static_cast<double>(k) * 1e-3, 1e-15);
            EXPECT_LE((r.stats.mean_state[s] - rho).norm(), 4.0 * r.stats.standard_error[s] + 1e-12) << k;
            ++s;
        }
        rho = rho + lindblad_rhs(m, rho) * 1e-3;
    }
    EXPECT_EQ(s, r.stats.times.size());
}

TEST(Ensemble, BitReproducibleAndWorkerIndependent)
{
    const LindbladModel m = preset("two-noise-correlated");
    EnsembleConfig cfg = config(0.1, 1e-3, 300, 99, 10);
    const EnsembleResult a = run_ensemble(m, kPlus, cfg);
    const EnsembleResult b = run_ensemble(m, kPlus, cfg);
    cfg.workers = 3;
    const EnsembleResult c = run_ensemble(m, kPlus, cfg);
    for (const EnsembleResult* other : {&b, &c}) {
        ASSERT_EQ(a.stats.mean_state.size(), other->stats.mean_state.size());
        for (std::size_t s = 0; s < a.stats.mean_state.size(); ++s) {
            EXPECT_EQ(a.stats.mean_state[s], other->stats.mean_state[s]);
            EXPECT_EQ(a.stats.standard_error[s], other->stats.standard_error[s]);
        }
        EXPECT_EQ(a.diagnostics.min_eigenvalue, other->diagnostics.min_eigenvalue);
        EXPECT_EQ(a.diagnostics.trace_min, other->diagnostics.trace_min);
    }
    cfg.seed = 100;
    const EnsembleResult d = run_ensemble(m, kPlus, cfg);
    EXPECT_NE(a.stats.mean_state.back(), d.stats.mean_state.back());
}

TEST(Ensemble, ExactUnitaryStepper)
{
    const LindbladModel m = preset("stochastic-unitary-larmor");
    EnsembleConfig cfg = config(1.0, 1e-3, 1, 4, 100);
    cfg.stepper = StepperKind::exact_unitary;
    const Trajectory tr = run_trajectory(m, kPlus, cfg, 0);
    for (double p : tr.purity_series) {
        EXPECT_NEAR(p, 1.0, 1e-10);
    }
    EXPECT_GE(tr.min_eigenvalue_seen, -1e-10);

    cfg.trajectories = 2000;
    const EnsembleResult r = run_ensemble(m, kPlus, cfg);
    const OdeTrajectory ode = integrate_ode(m, kPlus, 1.0, 1e-3, 100);
    for (std::size_t s = 0; s < ode.times.size(); ++s) {
        EXPECT_LE((r.stats.mean_state[s] - ode.states[s]).norm(), 4.0 * r.stats.standard_error[s] + 1e-3);
    }
}

TEST(Ensemble, ExactUnitaryRequiresAntiHermitianNoise)
{
    EnsembleConfig cfg = config(0.1, 1e-3, 4, 0);
    cfg.stepper = StepperKind::exact_unitary;
    EXPECT_THROW(run_ensemble(preset("amplitude-damping"), kPlus, cfg), ModelError);
    EXPECT_THROW(run_ensemble(preset("two-noise-correlated"), kPlus, cfg), ModelError);
}

TEST(Ensemble, StepRegimeChecks)
{
    const auto m = LindbladModel::single_noise(ComplexMatrix::Zero(2, 2), qubit::sigma_minus());
    // stiffness = ||sigma_-||^2 = 1
    const EnsembleResult r = run_ensemble(m, kPlus, config(1.0, 0.25, 4, 0));
    ASSERT_EQ(r.diagnostics.warnings.size(), 1u);
    EXPECT_NE(r.diagnostics.warnings[0].find("0.25"), std::string::npos);
    EXPECT_TRUE(run_ensemble(m, kPlus, config(1.0, 0.05, 4, 0)).diagnostics.warnings.empty());
    EXPECT_THROW(run_ensemble(m, kPlus, config(2.0, 2.0, 4, 0)), NumericalError);
}

TEST(Ensemble, ConfigErrors)
{
    const LindbladModel m = preset("dephasing");
    EXPECT_THROW(run_ensemble(m, kPlus, config(1.0, 0.3, 4, 0)), ConfigError);
    EXPECT_THROW(run_ensemble(m, kPlus, config(1.0, 1e-3, 0, 0)), ConfigError);
    EXPECT_THROW(run_ensemble(m, DensityMatrix::maximally_mixed(3), config(1.0, 1e-3, 4, 0)), DimensionError);
    EXPECT_THROW(run_ensemble(m, kPlus, config(1.0, 1e-3, 4, 0, 0)), ConfigError);
}

TEST(Ensemble, BlowUpNamesTrajectoryAndTime)
{
    // Large multiplicative noise on a non-trace-preserving model drives the
    // linear SDE to overflow.
    const auto m = LindbladModel::single_noise(ComplexMatrix::Zero(2, 2), 3.0 * qubit::sigma_x());
    try {
        run_ensemble(m, kPlus, config(2000.0, 0.1, 8, 1, 1000));
        FAIL() << "expected TrajectoryError";
    } catch (const TrajectoryError& e) {
        EXPECT_LT(e.trajectory(), 8u);
        EXPECT_GT(e.time(), 0.0);
        EXPECT_NE(std::string(e.what()).find("trajectory"), std::string::npos);
    }
}
