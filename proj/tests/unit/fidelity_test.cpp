#include <cmath>

#include <gtest/gtest.h>

#include "dnc/errors.hpp"
#include "dnc/fidelity.hpp"
#include "dnc/seed.hpp"

namespace dnc {
namespace {

DecomposedScores scores(double a, double b, double c, double d) {
    return {Score{a}, Score{b}, Score{c}, Score{d}};
}

TEST(Score, RejectsOutsideUnitInterval) {
    EXPECT_THROW(Score{0.0}, DomainError);
    EXPECT_THROW(Score{-0.1}, DomainError);
    EXPECT_THROW(Score{1.0000001}, DomainError);
    EXPECT_NO_THROW(Score{1.0});
}

TEST(Score, ClampFloorsZero) {
    bool clamped = false;
    EXPECT_EQ(Score::clamp(0.0, &clamped).value(), kScoreFloor);
    EXPECT_TRUE(clamped);
    clamped = false;
    EXPECT_EQ(Score::clamp(0.5, &clamped).value(), 0.5);
    EXPECT_FALSE(clamped);
}

TEST(ComposeFidelity, Examples) {
    EXPECT_DOUBLE_EQ(compose_fidelity({1, 1, 1}), 1.0);
    EXPECT_NEAR(compose_fidelity({0.9, 0.95, 0.8}), 0.684, 1e-15);
    EXPECT_DOUBLE_EQ(compose_fidelity({0.5, 1, 1}), 0.5);
}

TEST(ComposeFidelity, DomainErrors) {
    EXPECT_THROW(compose_fidelity({0.0, 1, 1}), DomainError);
    EXPECT_THROW(compose_fidelity({1, -0.5, 1}), DomainError);
    EXPECT_THROW(compose_fidelity({1, 1, 1.5}), DomainError);
    EXPECT_THROW(compose_fidelity({1, 1, std::nan("")}), DomainError);
}

TEST(ToLosses, Examples) {
    const auto zero = to_losses({1, 1, 1});
    EXPECT_EQ(zero.l_task, 0.0);
    EXPECT_EQ(zero.l_sys, 0.0);
    EXPECT_FALSE(std::signbit(zero.l_sys));

    const auto l = to_losses({std::exp(-0.1), std::exp(-0.2), std::exp(-0.3)});
    EXPECT_NEAR(l.l_task, 0.1, 1e-15);
    EXPECT_NEAR(l.l_agg, 0.2, 1e-15);
    EXPECT_NEAR(l.l_model, 0.3, 1e-15);
    EXPECT_NEAR(l.l_sys, 0.6, 1e-15);

    // mpmath, 30 digits: -ln(0.684) = 0.379797361359586590419992215404
    EXPECT_NEAR(to_losses({0.9, 0.95, 0.8}).l_sys, 0.379797361359586590, 1e-14);
    EXPECT_THROW(to_losses({0.0, 1, 1}), DomainError);
}

TEST(FirstOrderError, Examples) {
    const auto e = first_order_error({0.95, 0.95, 0.95});
    EXPECT_NEAR(e.exact, 0.142625, 1e-15);
    EXPECT_NEAR(e.approx, 0.15, 1e-15);
    EXPECT_NEAR(e.residual, 0.007375, 1e-15);

    const auto z = first_order_error({1, 1, 1});
    EXPECT_EQ(z.exact, 0.0);
    EXPECT_EQ(z.approx, 0.0);
    EXPECT_EQ(z.residual, 0.0);

    const auto one = first_order_error({0.9, 1, 1});
    EXPECT_NEAR(one.exact, 0.1, 1e-15);
    EXPECT_NEAR(one.approx, 0.1, 1e-15);
    EXPECT_EQ(one.residual, 0.0);
}

TEST(MeasureTriple, Examples) {
    const auto same = measure_triple(scores(1, 1, 1, 1));
    EXPECT_EQ(same.triple.rho_task, 1.0);
    EXPECT_FALSE(same.monotonicity_clamped);

    const auto m = measure_triple(scores(1.0, 0.9, 0.81, 0.729));
    EXPECT_NEAR(m.triple.rho_task, 0.9, 1e-15);
    EXPECT_NEAR(m.triple.rho_agg, 0.9, 1e-15);
    EXPECT_NEAR(m.triple.rho_model, 0.9, 1e-15);
    EXPECT_FALSE(m.monotonicity_clamped);

    const auto c = measure_triple(scores(1.0, 0.9, 0.9, 0.95));
    EXPECT_NEAR(c.triple.rho_task, 0.9, 1e-15);
    EXPECT_EQ(c.triple.rho_agg, 1.0);
    EXPECT_EQ(c.triple.rho_model, 1.0);
    EXPECT_TRUE(c.monotonicity_clamped);
}

TEST(ClassifyRegime, Examples) {
    EXPECT_EQ(classify_regime({0, 0, 0, 0}).regime, Regime::Trivial);
    EXPECT_EQ(classify_regime({0.5, 0.05, 0.05, 0.6}).regime, Regime::TaskDominated);
    EXPECT_EQ(classify_regime({0.02, 0.02, 0.9, 0.94}).regime, Regime::ModelDominated);

    const auto mixed = classify_regime({0.3, 0.0, 0.2, 0.5});
    EXPECT_EQ(mixed.regime, Regime::ModelDominated);
    EXPECT_TRUE(mixed.indeterminate);
}

TEST(ClassifyRegime, ThresholdIsInclusive) {
    EXPECT_EQ(classify_regime({0.02, 0, 0, 0.02}).regime, Regime::Trivial);
    EXPECT_EQ(classify_regime({0.021, 0, 0, 0.021}).regime, Regime::TaskDominated);
}

TEST(RegimeNames, RoundTrip) {
    for (auto r : {Regime::Trivial, Regime::TaskDominated, Regime::ModelDominated}) {
        EXPECT_EQ(regime_from_string(to_string(r)), r);
    }
}

// Properties over seeded random triples.

FidelityTriple random_triple(Rng& rng) {
    auto draw = [&] { return 1.0 - rng.uniform() * 0.999999; };
    return {draw(), draw(), draw()};
}

TEST(FidelityProperty, LossesSumToSystemLoss) {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        const auto t = random_triple(rng);
        const auto l = to_losses(t);
        ASSERT_NEAR(-std::log(compose_fidelity(t)), l.l_task + l.l_agg + l.l_model, 1e-12);
        ASSERT_EQ(l.l_sys, l.l_task + l.l_agg + l.l_model);
        ASSERT_GE(l.l_task, 0.0);
        ASSERT_GE(l.l_agg, 0.0);
        ASSERT_GE(l.l_model, 0.0);
    }
}

TEST(FidelityProperty, ResidualWithinSecondOrderBound) {
    Rng rng(12);
    for (int i = 0; i < 20000; ++i) {
        const auto t = random_triple(rng);
        const double a = 1 - t.rho_task, b = 1 - t.rho_agg, c = 1 - t.rho_model;
        const auto e = first_order_error(t);
        ASSERT_GE(e.residual, 0.0);
        ASSERT_LE(e.residual, a * b + a * c + b * c + 1e-15);
        ASSERT_NEAR(e.exact, 1 - compose_fidelity(t), 1e-15);
    }
}

TEST(FidelityProperty, TelescopingOnUnclampedScores) {
    Rng rng(13);
    for (int i = 0; i < 20000; ++i) {
        const double s0 = 1.0 - 0.5 * rng.uniform();
        const double s1 = s0 * (1.0 - 0.9 * rng.uniform());
        const double s2 = s1 * (1.0 - 0.9 * rng.uniform());
        const double s3 = s2 * (1.0 - 0.9 * rng.uniform());
        const auto m = measure_triple(scores(s0, s1, s2, s3));
        ASSERT_FALSE(m.monotonicity_clamped);
        ASSERT_NEAR(compose_fidelity(m.triple) * s0, s3, 1e-12);
    }
}

TEST(FidelityProperty, ClampFlagIffSomeRatioExceedsOne) {
    Rng rng(14);
    for (int i = 0; i < 20000; ++i) {
        double s[4];
        for (double& v : s) v = 0.05 + 0.95 * rng.uniform();
        const bool expected = s[1] > s[0] || s[2] > s[1] || s[3] > s[2];
        ASSERT_EQ(measure_triple(scores(s[0], s[1], s[2], s[3])).monotonicity_clamped, expected);
    }
}

TEST(FidelityProperty, RegimeIsScaleConsistent) {
    Rng rng(15);
    for (int i = 0; i < 5000; ++i) {
        const double t = rng.uniform(), a = rng.uniform(), m = rng.uniform();
        const LossBreakdown base{t, a, m, t + a + m};
        const double k = 0.5 + 10 * rng.uniform();
        const LossBreakdown scaled{k * t, k * a, k * m, k * (t + a + m)};
        if (base.l_sys <= 0.02 || scaled.l_sys <= 0.02) continue;
        const auto x = classify_regime(base);
        const auto y = classify_regime(scaled);
        ASSERT_EQ(x.regime, y.regime);
        ASSERT_EQ(x.indeterminate, y.indeterminate);
    }
}

}  // namespace
}  // namespace dnc
