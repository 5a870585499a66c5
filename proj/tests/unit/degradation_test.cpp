#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "dnc/degradation.hpp"
#include "dnc/errors.hpp"
#include "dnc/seed.hpp"

namespace dnc {
namespace {

// Linear scan: last T in [1, max] with strong(T) <= dc(T); T0 is the next integer.
std::optional<std::uint64_t> scan_crossover(const DegradationModel& strong, const DcLossModel& dc, std::uint64_t c,
                                            std::uint64_t max) {
    std::uint64_t last_fail = 0;
    for (std::uint64_t t = 1; t <= max; ++t) {
        if (!(raw_loss(strong, static_cast<double>(t)) > dc_loss(dc, t, c))) last_fail = t;
    }
    if (last_fail == max) return std::nullopt;
    return last_fail + 1;
}

TEST(LossAt, Examples) {
    EXPECT_EQ(loss_at(PowerLaw{1e-6, 2}, 0), 0.0);
    EXPECT_NEAR(loss_at(PowerLaw{1e-6, 2}, 1000), 1.0, 1e-15);
    EXPECT_NEAR(loss_at(Linear{1e-3, 0}, 500), 0.5, 1e-15);
}

TEST(LossAt, CappedAt700) {
    EXPECT_EQ(loss_at(PowerLaw{1e-6, 2}, 128000), kLossCap);
    EXPECT_NEAR(raw_loss(PowerLaw{1e-6, 2}, 128000), 16384.0, 1e-9);
    EXPECT_EQ(fidelity_at(PowerLaw{1e-6, 2}, 128000), std::exp(-700.0));
}

TEST(LossAt, SaturatingIsBounded) {
    const Saturating s{2.0, 5000};
    EXPECT_NEAR(loss_at(s, 5000), 1.0, 1e-15);
    EXPECT_LT(loss_at(s, 1e12), 2.0);
}

TEST(Models, ParseAndFormat) {
    const auto m = parse_model("powerlaw:1e-6,2");
    ASSERT_TRUE(std::holds_alternative<PowerLaw>(m));
    EXPECT_EQ(std::get<PowerLaw>(m).a, 1e-6);
    EXPECT_EQ(std::get<PowerLaw>(m).beta, 2.0);
    EXPECT_EQ(parse_model(format_model(m)), m);
    EXPECT_TRUE(is_zero(parse_model("zero")));
    EXPECT_THROW(parse_model("cubic:1"), FormatError);
    EXPECT_THROW(parse_model("powerlaw:1e-6"), FormatError);
    EXPECT_THROW(validate(PowerLaw{-1, 2}), DomainError);
}

TEST(DcLoss, Examples) {
    EXPECT_NEAR(dc_loss({0.01, 0, 0}, 128000, 16000), 0.08, 1e-15);
    EXPECT_NEAR(dc_loss({0, 1e-5, 0}, 10000, 1000), 0.1, 1e-15);
    EXPECT_NEAR(dc_loss({0.01, 0, 0}, 1, 1000), 0.01, 1e-15);
    EXPECT_THROW(dc_loss({0.01, 0, 0}, 10, 0), DomainError);
}

TEST(Crossover, QuadraticAgainstLinear) {
    const DcLossModel dc{0, 1e-3, 0};
    for (std::uint64_t c : {1ULL, 1000ULL, 64000ULL}) {
        const auto r = crossover(PowerLaw{1e-6, 2}, dc, c);
        ASSERT_EQ(r.status, CrossoverStatus::Found);
        EXPECT_EQ(r.t0, 1001u);
    }
    EXPECT_EQ(scan_crossover(PowerLaw{1e-6, 2}, dc, 1000, 200000), 1001u);
}

TEST(Crossover, IdenticalModelsNeverCross) {
    const auto r = crossover(Linear{1e-3, 0}, {0, 1e-3, 0}, 1000);
    EXPECT_EQ(r.status, CrossoverStatus::NotFound);
    EXPECT_FALSE(r.t0.has_value());
}

// Window-by-window oracle for a stepped D&C loss: inside window k the D&C side
// is the constant k*u, so the failing points are those with strong(T) <= k*u.
std::uint64_t window_oracle(double a, double beta, double u, std::uint64_t c, std::uint64_t max) {
    std::uint64_t last_fail = 0;
    const std::uint64_t windows = (max + c - 1) / c;
    for (std::uint64_t k = 1; k <= windows; ++k) {
        const std::uint64_t lo = (k - 1) * c + 1;
        const std::uint64_t hi = std::min(k * c, max);
        auto fails = [&](std::uint64_t t) { return !(raw_loss(PowerLaw{a, beta}, double(t)) > dc_loss({u, 0, 0}, t, c)); };
        if (!fails(lo)) continue;
        const double root = std::pow(k * u / a, 1.0 / beta);
        std::uint64_t t = std::min<std::uint64_t>(hi, static_cast<std::uint64_t>(std::max(root, double(lo))));
        while (t < hi && fails(t + 1)) ++t;
        while (t > lo && !fails(t)) --t;
        last_fail = std::max(last_fail, t);
    }
    return last_fail + 1;
}

TEST(Crossover, SteppedDcLossMatchesWindowOracle) {
    const std::uint64_t max = std::uint64_t{1} << 32;
    const auto r = crossover(PowerLaw{1e-9, 1.5}, {0.05, 0, 0}, 1000, max);
    ASSERT_EQ(r.status, CrossoverStatus::Found);
    EXPECT_FALSE(r.difference_monotone);
    EXPECT_EQ(r.t0, 2500001334u);
    EXPECT_EQ(window_oracle(1e-9, 1.5, 0.05, 1000, max), 2500001334u);
}

TEST(Crossover, DefaultRangeHasNoCrossoverForSlowCurve) {
    const auto r = crossover(PowerLaw{1e-9, 1.5}, {0.05, 0, 0}, 1000);
    EXPECT_EQ(r.status, CrossoverStatus::NotFound);
}

TEST(Crossover, SmallCasesAgreeWithLinearScan) {
    Rng rng(21);
    for (int i = 0; i < 60; ++i) {
        const double beta = 1.1 + 2 * rng.uniform();
        const PowerLaw strong{std::pow(10.0, -3 - 3 * rng.uniform()), beta};
        const DcLossModel dc{0.05 * rng.uniform(), 1e-3 * rng.uniform(), 0.1 * rng.uniform()};
        const std::uint64_t c = 1 + rng.below(300);
        const std::uint64_t max = 20000;
        const auto r = crossover(strong, dc, c, max);
        const auto oracle = scan_crossover(strong, dc, c, max);
        ASSERT_EQ(r.t0, oracle) << format_model(strong) << " u=" << dc.per_chunk_unit_loss << " c=" << c;
    }
}

TEST(CrossoverProperty, ThresholdSatisfiesDefinition) {
    for (double beta : {1.2, 1.5, 2.0, 3.0}) {
        const PowerLaw strong{1e-6, beta};
        const DcLossModel dc{0.01, 1e-4, 0.05};
        const auto r = crossover(strong, dc, 1000, std::uint64_t{1} << 40);
        ASSERT_EQ(r.status, CrossoverStatus::Found) << beta;
        const auto t0 = *r.t0;
        EXPECT_GT(raw_loss(strong, double(t0)), dc_loss(dc, t0, 1000));
        if (t0 > 1) EXPECT_LE(raw_loss(strong, double(t0 - 1)), dc_loss(dc, t0 - 1, 1000));
    }
}

TEST(DegradationProperty, Nondecreasing) {
    Rng rng(22);
    for (int i = 0; i < 300; ++i) {
        const double p = std::pow(10.0, -8 + 6 * rng.uniform());
        const double q = 0.2 + 3 * rng.uniform();
        for (const DegradationModel m : {DegradationModel{PowerLaw{p, q}}, DegradationModel{Linear{p, q}},
                                         DegradationModel{Saturating{q, 1e4 * q}}}) {
            double prev = 0.0;
            for (double len = 0; len <= 2e6; len = len * 1.7 + 13) {
                const double v = loss_at(m, len);
                ASSERT_GE(v, 0.0);
                ASSERT_GE(v, prev);
                prev = v;
            }
        }
    }
}

TEST(DegradationProperty, PowerLawDoublingRatio) {
    Rng rng(23);
    for (int i = 0; i < 1000; ++i) {
        const double beta = 1.0 + 2.0 * rng.uniform();
        const PowerLaw m{1e-15, beta};  // stays far below the cap
        const double len = 10 + 1e5 * rng.uniform();
        EXPECT_NEAR(loss_at(m, 2 * len) / loss_at(m, len), std::pow(2.0, beta), 1e-12 * std::pow(2.0, beta));
    }
}

TEST(Fit, RoundTripOnNoiselessPowerLaw) {
    const PowerLaw truth{2e-7, 1.8};
    std::vector<FitPoint> losses;
    for (double len : {1e3, 1e4, 1e5}) losses.push_back({len, loss_at(truth, len)});
    const auto r = fit_power_law_losses(losses);
    const auto& m = std::get<PowerLaw>(r.model);
    EXPECT_NEAR(m.a / 2e-7, 1.0, 1e-9);
    EXPECT_NEAR(m.beta / 1.8, 1.0, 1e-9);
    EXPECT_EQ(r.points_used, 3u);

    // The same curve through the error interface, at lengths where 1 - exp(-g)
    // still resolves the loss.
    std::vector<FitPoint> errors;
    for (double len : {1e2, 1e3, 1e4}) errors.push_back({len, -std::expm1(-loss_at(truth, len))});
    const auto e = fit_power_law(errors);
    EXPECT_NEAR(std::get<PowerLaw>(e.model).a / 2e-7, 1.0, 1e-9);
    EXPECT_NEAR(std::get<PowerLaw>(e.model).beta / 1.8, 1.0, 1e-9);
}

TEST(Fit, DegenerateOnZeroErrors) {
    const std::vector<FitPoint> pts{{1000, 0}, {2000, 0}, {4000, 0}};
    const auto r = fit_power_law(pts);
    EXPECT_TRUE(r.degenerate);
    EXPECT_TRUE(is_zero(r.model));
}

TEST(Fit, InsufficientPoints) {
    const std::vector<FitPoint> one{{1000, 0.1}};
    EXPECT_THROW(fit_power_law(one), InsufficientPoints);
    const std::vector<FitPoint> same{{1000, 0.1}, {1000, 0.2}};
    EXPECT_THROW(fit_power_law(same), InsufficientPoints);
}

TEST(Fit, KvErrorSeriesIsSuperLinear) {
    // Single-agent KV accuracy at 1K..128K tokens.
    const std::vector<FitPoint> pts{{1000, 0.0},  {2000, 0.0},  {4000, 0.0},   {8000, 0.0},
                                    {16000, 0.0}, {32000, 0.01}, {64000, 0.14}, {128000, 0.40}};
    const auto r = fit_power_law(pts);
    ASSERT_FALSE(r.degenerate);
    EXPECT_EQ(r.points_used, 3u);
    const auto beta = std::get<PowerLaw>(r.model).beta;
    EXPECT_GT(beta, 1.0);

    // Closed-form OLS on the three positive-loss points.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [len, err] : {std::pair{32000.0, 0.01}, {64000.0, 0.14}, {128000.0, 0.40}}) {
        const double x = std::log(len), y = std::log(-std::log(1 - err));
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    EXPECT_NEAR(beta, (3 * sxy - sx * sy) / (3 * sxx - sx * sx), 1e-9);
}

TEST(Fit, ErrorToLoss) {
    EXPECT_EQ(error_to_loss(0.0), 0.0);
    EXPECT_NEAR(error_to_loss(1 - std::exp(-2.0)), 2.0, 1e-12);
    EXPECT_NEAR(error_to_loss(1.0), -std::log(1e-6), 1e-9);
}

}  // namespace
}  // namespace dnc
