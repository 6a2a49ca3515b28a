#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace stochlind;
using namespace stochlind::testing;

namespace {

ItoPolynomial random_poly(Rng& rng, Index d, Index noises)
{
    ItoPolynomial p(d, noises);
    p.const_term() = random_complex(rng, d);
    p.dt_term() = random_complex(rng, d);
    for (Index n = 0; n < noises; ++n) {
        p.dw_term(n) = random_complex(rng, d);
    }
    return p;
}

double poly_diff(const ItoPolynomial& a, const ItoPolynomial& b)
{
    double m = std::max(max_abs_diff(a.const_term(), b.const_term()), max_abs_diff(a.dt_term(), b.dt_term()));
    for (Index n = 0; n < a.noise_count(); ++n) {
        m = std::max(m, max_abs_diff(a.dw_term(n), b.dw_term(n)));
    }
    return m;
}

}  // namespace

TEST(ItoMul, NoiseSquaredIsDt)
{
    const ItoContext ctx = ItoContext::independent(1);
    const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
    const ItoPolynomial dw = ItoPolynomial::noise(0, id, 1);
    const ItoPolynomial p = ito_mul(ctx, dw, dw);
    EXPECT_EQ(p.dt_term(), id);
    EXPECT_EQ(p.const_term().norm(), 0.0);
    EXPECT_EQ(p.dw_term(0).norm(), 0.0);
}

TEST(ItoMul, ConstantTimesDrift)
{
    Rng rng(20);
    const ComplexMatrix x = random_complex(rng, 3);
    const ComplexMatrix y = random_complex(rng, 3);
    const ItoPolynomial p = ito_mul(ItoContext::independent(2), ItoPolynomial::constant(x, 2), ItoPolynomial::drift(y, 2));
    EXPECT_LT(max_abs_diff(p.dt_term(), ref_mul(x, y)), 1e-14);
    EXPECT_EQ(p.const_term().norm(), 0.0);
    EXPECT_EQ(p.dw_term(0).norm() + p.dw_term(1).norm(), 0.0);
}

TEST(ItoMul, NoiseTimesDtVanishes)
{
    Rng rng(21);
    const ItoPolynomial dw = ItoPolynomial::noise(1, random_complex(rng, 2), 2);
    const ItoPolynomial dt = ItoPolynomial::drift(random_complex(rng, 2), 2);
    const ItoContext ctx = ItoContext::independent(2);
    EXPECT_EQ(ito_mul(ctx, dw, dt).max_coefficient_norm(), 0.0);
    EXPECT_EQ(ito_mul(ctx, dt, dw).max_coefficient_norm(), 0.0);
    EXPECT_EQ(ito_mul(ctx, dt, dt).max_coefficient_norm(), 0.0);
}

TEST(ItoMul, CorrelatedNoisesMeetThroughCovariance)
{
    RealMatrix c(2, 2);
    c << 1.0, 0.3, 0.3, 1.0;
    const ItoContext ctx{RealSymmetricMatrix(c)};
    const ComplexMatrix id = ComplexMatrix::Identity(2, 2);
    const ItoPolynomial p = ito_mul(ctx, ItoPolynomial::noise(0, id, 2), ItoPolynomial::noise(1, id, 2));
    EXPECT_LT(max_abs_diff(p.dt_term(), 0.3 * id), 1e-16);
}

TEST(ItoMul, OrderOfCoefficientsIsKept)
{
    const ItoContext ctx = ItoContext::independent(1);
    const ItoPolynomial a = ItoPolynomial::noise(0, qubit::sigma_x(), 1);
    const ItoPolynomial b = ItoPolynomial::noise(0, qubit::sigma_y(), 1);
    EXPECT_LT(max_abs_diff(ito_mul(ctx, a, b).dt_term(), kI * qubit::sigma_z()), 1e-15);
    EXPECT_LT(max_abs_diff(ito_mul(ctx, b, a).dt_term(), -kI * qubit::sigma_z()), 1e-15);
}

TEST(ItoMul, MatchesTermByTermFormula)
{
    Rng rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const Index d = 1 + trial % 4;
        const Index noises = 1 + trial % 3;
        const RealMatrix c = random_unit_diag_covariance(rng, noises);
        const ItoContext ctx{RealSymmetricMatrix(c)};
        const ItoPolynomial p = random_poly(rng, d, noises);
        const ItoPolynomial q = random_poly(rng, d, noises);
        const ItoPolynomial r = ito_mul(ctx, p, q);

        ComplexMatrix dt = ref_mul(p.const_term(), q.dt_term()) + ref_mul(p.dt_term(), q.const_term());
        for (Index m = 0; m < noises; ++m) {
            for (Index n = 0; n < noises; ++n) {
                dt += c(m, n) * ref_mul(p.dw_term(m), q.dw_term(n));
            }
        }
        EXPECT_LT(max_abs_diff(r.const_term(), ref_mul(p.const_term(), q.const_term())), 1e-12);
        EXPECT_LT(max_abs_diff(r.dt_term(), dt), 1e-12);
        for (Index n = 0; n < noises; ++n) {
            const ComplexMatrix dw = ref_mul(p.const_term(), q.dw_term(n)) + ref_mul(p.dw_term(n), q.const_term());
            EXPECT_LT(max_abs_diff(r.dw_term(n), dw), 1e-12);
        }
    }
}

TEST(ItoMul, BilinearAndAssociative)
{
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const Index d = 1 + trial % 4;
        const Index noises = 1 + trial % 3;
        const ItoContext ctx{RealSymmetricMatrix(random_unit_diag_covariance(rng, noises))};
        const ItoPolynomial p = random_poly(rng, d, noises);
        const ItoPolynomial q = random_poly(rng, d, noises);
        const ItoPolynomial r = random_poly(rng, d, noises);
        const Complex s(0.7, -1.3);

        EXPECT_LT(poly_diff(ito_mul(ctx, ito_mul(ctx, p, q), r), ito_mul(ctx, p, ito_mul(ctx, q, r))), 1e-12);
        EXPECT_LT(poly_diff(ito_mul(ctx, p + s * q, r), ito_mul(ctx, p, r) + s * ito_mul(ctx, q, r)), 1e-12);
        EXPECT_LT(poly_diff(ito_mul(ctx, p, q + s * r), ito_mul(ctx, p, q) + s * ito_mul(ctx, p, r)), 1e-12);
    }
}

TEST(ItoMul, AdjointReversesProducts)
{
    Rng rng(24);
    const ItoContext ctx{RealSymmetricMatrix(random_unit_diag_covariance(rng, 3))};
    const ItoPolynomial p = random_poly(rng, 3, 3);
    const ItoPolynomial q = random_poly(rng, 3, 3);
    EXPECT_LT(poly_diff(adjoint(ito_mul(ctx, p, q)), ito_mul(ctx, adjoint(q), adjoint(p))), 1e-12);
}

TEST(ItoMul, MismatchThrows)
{
    const ItoContext ctx = ItoContext::independent(2);
    EXPECT_THROW(ito_mul(ctx, ItoPolynomial(2, 2), ItoPolynomial(3, 2)), DimensionError);
    EXPECT_THROW(ito_mul(ctx, ItoPolynomial(2, 2), ItoPolynomial(2, 1)), DimensionError);
    EXPECT_THROW(ito_mul(ctx, ItoPolynomial(2, 1), ItoPolynomial(2, 1)), DimensionError);
    EXPECT_THROW(ItoPolynomial::noise(2, ComplexMatrix::Identity(2, 2), 2), DimensionError);
}

TEST(ItoContext, RejectsBadCovariance)
{
    RealMatrix c(2, 2);
    c << 1.0, 0.0, 0.0, 0.5;
    EXPECT_THROW(ItoContext{RealSymmetricMatrix(c)}, ModelError);
    c << 1.0, 1.2, 1.2, 1.0;
    EXPECT_THROW(ItoContext{RealSymmetricMatrix(c)}, ModelError);
}

TEST(ItoExpectation, DropsNoiseTerms)
{
    Rng rng(25);
    ItoPolynomial p(2, 2);
    p.dw_term(0) = random_complex(rng, 2);
    p.dw_term(1) = random_complex(rng, 2);
    const ItoExpectation e = ito_expectation(p);
    EXPECT_EQ(e.constant.norm(), 0.0);
    EXPECT_EQ(e.dt.norm(), 0.0);

    const ComplexMatrix rho = random_density(rng, 2);
    const ComplexMatrix l = random_hermitian(rng, 2);
    const ItoPolynomial q = ItoPolynomial::constant(rho, 2) + ItoPolynomial::drift(l, 2) + p;
    EXPECT_EQ(ito_expectation(q).constant, rho);
    EXPECT_EQ(ito_expectation(q).dt, l);
}

//---------------------------------------------------------------------------//
// derive_stochastic_evolution
//---------------------------------------------------------------------------//

TEST(DeriveEvolution, StochasticUnitaryDoubleCommutator)
{
    Rng rng(26);
    const ComplexMatrix sz = qubit::sigma_z();
    const auto m = LindbladModel::single_noise(ComplexMatrix::Zero(2, 2), -kI * sz);
    for (int trial = 0; trial < 10; ++trial) {
        const ComplexMatrix rho = random_density(rng, 2);
        const StochasticEvolution ev = derive_stochastic_evolution(m, rho);
        const ComplexMatrix inner = ref_mul(sz, rho) - ref_mul(rho, sz);
        const ComplexMatrix expect = -0.5 * (ref_mul(sz, inner) - ref_mul(inner, sz));
        EXPECT_LT(max_abs_diff(ev.drift_coeff, expect), 1e-14);
        // noise coefficient -i[sigma_z, rho]
        EXPECT_LT(max_abs_diff(ev.noise_coeffs[0], -kI * inner), 1e-14);
    }
}

TEST(DeriveEvolution, TrivialModelGivesZero)
{
    Rng rng(27);
    const auto m = LindbladModel::single_noise(ComplexMatrix::Zero(3, 3), ComplexMatrix::Zero(3, 3));
    const StochasticEvolution ev = derive_stochastic_evolution(m, random_density(rng, 3));
    EXPECT_EQ(ev.drift_coeff.norm(), 0.0);
    EXPECT_EQ(ev.noise_coeffs[0].norm(), 0.0);
    EXPECT_LT(ev.constant_residual.norm(), 1e-15);
}

TEST(DeriveEvolution, TwoIndependentNoisesMatchLindblad)
{
    Rng rng(28);
    for (int trial = 0; trial < 20; ++trial) {
        const LindbladModel m = random_model(rng, 2, 2, false);
        const ComplexMatrix rho = random_density(rng, 2);
        const StochasticEvolution ev = derive_stochastic_evolution(m, rho);
        EXPECT_LE((ev.drift_coeff - ref_lindblad(m, rho)).norm(), 1e-12);
    }
}

TEST(DeriveEvolution, RandomCorrelatedModels)
{
    Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const Index d = 1 + trial % 4;
        const Index noises = 1 + trial % 3;
        const LindbladModel m = random_model(rng, d, noises);
        const ComplexMatrix rho = random_density(rng, d);
        const StochasticEvolution ev = derive_stochastic_evolution(m, rho);

        EXPECT_LE(ev.trace_residual, 1e-12);
        EXPECT_LE(ev.constant_residual.norm(), 1e-12);
        EXPECT_LE((ev.drift_coeff - ref_lindblad(m, rho)).norm(), 1e-12);
        ASSERT_EQ(static_cast<Index>(ev.noise_coeffs.size()), noises);
        for (Index n = 0; n < noises; ++n) {
            const ComplexMatrix& v = m.lindblad_op(n);
            const ComplexMatrix expect = m.weight(n) * (ref_mul(v, rho) + ref_mul(rho, ref_adj(v)));
            EXPECT_LT(max_abs_diff(ev.noise_coeffs[static_cast<std::size_t>(n)], expect), 1e-12);
        }
    }
}

TEST(DeriveEvolution, UnnormalizedWeightsAreRejected)
{
    const ComplexMatrix v = qubit::sigma_minus();
    const LindbladModel m(HermitianOperator(ComplexMatrix::Zero(2, 2)), {v, v}, {1.0, 1.0},
                          RealSymmetricMatrix::identity(2));
    EXPECT_THROW(derive_stochastic_evolution(m, ComplexMatrix::Identity(2, 2) / 2.0), ModelError);
}

TEST(InfinitesimalKraus, Shape)
{
    Rng rng(30);
    const LindbladModel m = random_model(rng, 3, 2);
    const ComplexMatrix u = drift_operator(m);
    const ItoPolynomial a = infinitesimal_kraus_operator(m, 1, u);
    EXPECT_LT(max_abs_diff(a.const_term(), m.weight(1) * ComplexMatrix::Identity(3, 3)), 1e-16);
    EXPECT_LT(max_abs_diff(a.dt_term(), m.weight(1) * u), 1e-16);
    EXPECT_EQ(a.dw_term(0).norm(), 0.0);
    EXPECT_EQ(a.dw_term(1), m.lindblad_op(1));
}
