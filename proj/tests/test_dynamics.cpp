#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pa_amm/dynamics.hpp"
#include "test_support.hpp"

namespace pa_amm {
namespace {

using testing::Draw;
using testing::rel_diff;

SimConfig config(double mu, double sigma, double dt, std::int64_t blocks, std::int64_t burn_in = 0,
                 std::uint64_t seed = 7) {
    return SimConfig{mu, sigma, dt, blocks, burn_in, seed};
}

TEST(PortableLog, AgreesWithLibm) {
    Draw draw(31);
    for (int i = 0; i < 100000; ++i) {
        const double x = draw.uniform(1e-300, 1.0);
        ASSERT_NEAR(detail::portable_log(x), std::log(x), 4e-16 * std::max(1.0, std::abs(std::log(x))));
    }
    EXPECT_EQ(detail::portable_log(1.0), 0.0);
}

TEST(GaussianStream, ReproducibleAndStandardized) {
    GaussianStream a(99), b(99);
    double sum = 0.0, sq = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const double x = a.standard();
        ASSERT_EQ(x, b.standard());
        sum += x;
        sq += x * x;
    }
    EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(GbmPath, DeterministicCases) {
    const auto flat = gbm_path(config(0.0, 0.0, 0.1, 5), 1.3);
    ASSERT_EQ(flat.size(), 6u);
    for (double s : flat) EXPECT_EQ(s, 1.3);
    const auto drift = gbm_path(config(1.0, 0.0, 0.1, 3), 0.0);
    ASSERT_EQ(drift.size(), 4u);
    EXPECT_NEAR(drift[1], 0.1, 1e-15);
    EXPECT_NEAR(drift[2], 0.2, 1e-15);
    EXPECT_NEAR(drift[3], 0.3, 1e-15);
}

TEST(GbmPath, IncrementMomentsWithinFourStandardErrors) {
    const double mu = 0.3, sigma = 0.8, dt = 0.01;
    const int n = 1000000;
    const auto path = gbm_path(config(mu, sigma, dt, n, 0, 2024), 0.0);
    double sum = 0.0, sq = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double e = path[i] - path[i - 1];
        sum += e;
        sq += e * e;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double true_var = sigma * sigma * dt;
    EXPECT_NEAR(mean, mu * dt, 4.0 * std::sqrt(true_var / n));
    EXPECT_NEAR(var, true_var, 4.0 * true_var * std::sqrt(2.0 / n));
}

TEST(SimConfig, Validation) {
    EXPECT_THROW(validate(config(0, -1, 0.1, 10)), DomainError);
    EXPECT_THROW(validate(config(0, 1, 0.0, 10)), DomainError);
    EXPECT_THROW(validate(config(0, 1, 0.1, 10, 10)), DomainError);
}

TEST(StepBlock, NoArbitrageBlock) {
    PoolState pool = seed_pool(0.3, 0.5, 0.4, 10.0);
    const double ell = std::log(pool.curve->value(total_reserves(pool)));
    const auto [next, rec] = step_block(pool, 0.4, 1);
    EXPECT_NEAR(rec.top_gap, 0.0, 1e-15);
    EXPECT_NEAR(rec.bot_gap, 0.0, 1e-15);
    EXPECT_NEAR(rec.norm_lvr, 0.0, 1e-15);
    EXPECT_NEAR(rec.log_liquidity, ell, 1e-14);
    EXPECT_NEAR(rec.risky_weight, 0.3, 1e-15);
}

TEST(StepBlock, FullyActiveNormalizedLvrLeadingTerm) {
    const double theta = 0.5, g = 0.01;
    const auto [next, rec] = step_block(seed_pool(theta, 1.0, 0.0, 1.0), g, 1);
    EXPECT_NEAR(rec.norm_lvr, 0.5 * theta * (1 - theta) * g * g, 1e-6);
    EXPECT_NEAR(rec.bot_gap, 0.0, 1e-12);
}

TEST(StepBlock, LiquidityGrowthAgainstMergeOracle) {
    const double lambda = 0.5, theta = 0.5, g = 0.1;
    const auto [next, rec] = step_block(seed_pool(theta, lambda, 0.0, 1.0), g, 1);
    const double ell0 = std::log(next.curve->value(seed_pool(theta, lambda, 0.0, 1.0).active +
                                                   seed_pool(theta, lambda, 0.0, 1.0).passive));
    // independent: merge (1 - lambda) R(L, 0) with lambda R(L, g) by hand
    const double l = std::exp(ell0);
    auto x_of = [&](double p) { return l * std::pow(theta / (1 - theta) * std::exp(-p), 1 - theta); };
    auto y_of = [&](double p) { return l * std::pow((1 - theta) / theta * std::exp(p), theta); };
    const double mx = (1 - lambda) * x_of(0.0) + lambda * x_of(g);
    const double my = (1 - lambda) * y_of(0.0) + lambda * y_of(g);
    const double growth = theta * std::log(mx) + (1 - theta) * std::log(my) - ell0;
    EXPECT_NEAR(rec.log_liquidity - ell0, growth, 1e-13);
    // leading order 1/2 lambda (1 - lambda) theta (1 - theta) g^2 = 3.125e-4
    EXPECT_NEAR(rec.log_liquidity - ell0, 3.125e-4, g * g * g);
}

TEST(StepBlock, PerBlockGrowthPeaksAtHalfActiveness) {
    double best_lambda = 0.0, best = -1.0;
    for (int k = 1; k < 100; ++k) {
        const double lambda = k / 100.0;
        PoolState pool = seed_pool(0.4, lambda, 0.0, 1.0);
        const double ell0 = std::log(pool.curve->value(total_reserves(pool)));
        const auto [next, rec] = step_block(pool, 0.01, 1);
        if (rec.log_liquidity - ell0 > best) {
            best = rec.log_liquidity - ell0;
            best_lambda = lambda;
        }
    }
    EXPECT_NEAR(best_lambda, 0.5, 0.011);
}

TEST(SimulatePath, ZeroVolatility) {
    const auto recs = simulate_path(config(0.0, 0.0, 0.01, 50), seed_pool(0.5, 0.5, 0.0));
    ASSERT_EQ(recs.size(), 50u);
    double cumulative = 0.0;
    for (const auto& r : recs) {
        EXPECT_NEAR(r.top_gap, 0.0, 1e-15);
        cumulative += r.norm_lvr;
    }
    EXPECT_NEAR(cumulative, 0.0, 1e-13);
}

TEST(SimulatePath, FullyActiveEqualsCfmmTrace) {
    const SimConfig cfg = config(0.1, 0.9, 0.001, 500);
    const auto recs = simulate_path(cfg, seed_pool(0.4, 1.0, 0.2, 5.0));
    const G3mCurve curve(0.4);
    Reserves cfmm{5.0, 0.6 / 0.4 * std::exp(0.2) * 5.0};
    const auto path = gbm_path(cfg, curve.log_marginal_price(cfmm));
    for (std::size_t k = 0; k < recs.size(); ++k) {
        cfmm = arbitrage_trade(curve, cfmm, path[k + 1]);
        ASSERT_EQ(recs[k].log_liquidity, curve.log_value(cfmm));
        ASSERT_NEAR(recs[k].bot_gap, 0.0, 1e-12);
    }
}

TEST(SimulatePath, SameSeedIsBitIdentical) {
    const SimConfig cfg = config(0.2, 1.1, 0.001, 2000);
    const auto a = simulate_path(cfg, seed_pool(0.3, 0.6, 0.0));
    const auto b = simulate_path(cfg, seed_pool(0.3, 0.6, 0.0));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        ASSERT_EQ(a[k].lvr, b[k].lvr);
        ASSERT_EQ(a[k].top_gap, b[k].top_gap);
        ASSERT_EQ(a[k].log_liquidity, b[k].log_liquidity);
    }
}

TEST(SimulatePath, LvrNonNegativeAndLiquidityNonDecreasing) {
    for (double lambda : {0.1, 0.5, 1.0}) {
        for (double theta : {0.2, 0.5}) {
            const auto recs = simulate_path(config(0.0, 1.0, 0.01, 20000, 0, 5), seed_pool(theta, lambda, 7.6));
            double prev = recs.front().log_liquidity - 1.0;
            for (const auto& r : recs) {
                ASSERT_GE(r.norm_lvr, -1e-12);
                ASSERT_GE(r.log_liquidity, prev - 1e-12);
                prev = r.log_liquidity;
            }
        }
    }
}

TEST(SimulatePath, RebalancePeriodTwoStillClosesActiveGap) {
    PoolState pool = seed_pool(0.5, 0.5, 0.0, 1.0, 2);
    const auto recs = simulate_path(config(0.0, 0.5, 0.01, 100), pool);
    for (const auto& r : recs) ASSERT_GE(r.norm_lvr, -1e-12);
}

TEST(StationaryMoments, FullyActiveRecoversInnovationMoments) {
    const double mu = 0.5, sigma = 1.0, dt = 1e-4;
    const auto m = stationary_moments(1.0, 0.4, config(mu, sigma, dt, 200000, 1000, 3));
    const double expected = sigma * sigma * dt + mu * mu * dt * dt;
    EXPECT_NEAR(m.second_moment_gap, expected, 4.0 * m.std_error);
    EXPECT_GE(m.second_moment_gap, m.mean_gap * m.mean_gap);
    EXPECT_THROW(stationary_moments(0.0, 0.4, config(0, 1, 1e-4, 10)), DomainError);
}

TEST(GapChain, CouplingFromOppositeStarts) {
    for (double lambda : {0.25, 0.5, 1.0}) {
        const double theta = 0.3;
        const double rho = contraction_bound(lambda, theta);
        const int horizon = static_cast<int>(std::ceil(std::log(0.5e-10) / std::log(rho)));
        GaussianStream noise(17);
        double a = 1.0, b = -1.0;
        for (int n = 0; n < horizon; ++n) {
            const double e = noise.normal(0.0, 0.01);
            a = psi(a, lambda, theta) + e;
            b = psi(b, lambda, theta) + e;
        }
        EXPECT_LT(std::abs(a - b), 1e-10) << lambda;
    }
}

TEST(TrackingError, WeightExpansionIsSecondOrder) {
    for (double theta : {0.3, 0.5, 0.7}) {
        std::vector<double> remainder;
        for (double g : {0.04, 0.02, 0.01}) {
            const auto [pool, rec] = step_block(seed_pool(theta, 0.5, 0.0, 1.0), g, 1);
            remainder.push_back(std::abs(rec.risky_weight - theta - theta * (1 - theta) * rec.bot_gap));
        }
        EXPECT_GT(remainder[0] / remainder[1], 3.5) << theta;
        EXPECT_GT(remainder[1] / remainder[2], 3.5) << theta;
    }
}

TEST(TrackingError, CheckCases) {
    const auto zero = tracking_error_check(0.5, 0.3, 0.0);
    EXPECT_EQ(zero.exact, 0.0);
    EXPECT_EQ(zero.expansion, 0.0);
    for (double g : {-0.3, 0.05, 0.2}) EXPECT_LT(tracking_error_check(1.0, 0.3, g).exact, 1e-28);
    // remainder bound C |g|^3 with C calibrated at g and confirmed after halving
    const auto a = tracking_error_check(0.5, 0.5, 0.02);
    const auto b = tracking_error_check(0.5, 0.5, 0.01);
    const double c = std::abs(a.exact - a.expansion) / std::pow(0.02, 3);
    EXPECT_LE(std::abs(b.exact - b.expansion), c * std::pow(0.01, 3));
}

TEST(Replay, ConstantPriceHasNoLvr) {
    std::vector<PriceObservation> prices;
    for (int i = 0; i < 100; ++i) prices.push_back({std::to_string(i), 2500.0});
    const auto recs = replay_historical(prices, seed_pool(0.5, 0.5, std::log(2500.0)));
    double cumulative = 0.0;
    for (const auto& r : recs) cumulative += r.norm_lvr;
    EXPECT_NEAR(cumulative, 0.0, 1e-13);
}

TEST(Replay, SingleJumpDecaysGeometrically) {
    const double lambda = 0.5, theta = 0.5, jump = 0.05;
    std::vector<PriceObservation> prices;
    for (int i = 0; i < 5; ++i) prices.push_back({std::to_string(i), 100.0});
    for (int i = 5; i < 40; ++i) prices.push_back({std::to_string(i), 100.0 * std::exp(jump)});
    const auto recs = replay_historical(prices, seed_pool(theta, lambda, std::log(100.0)));
    double expected = jump;
    for (std::size_t k = 5; k < recs.size(); ++k) {
        ASSERT_NEAR(recs[k].top_gap, expected, 1e-11) << k;
        if (k > 5) {
            const double prev = recs[k - 1].top_gap;
            ASSERT_LE(std::abs(recs[k].top_gap - (1 - lambda) * prev), prev * prev / 8 + 1e-13);
        }
        expected = psi(expected, lambda, theta);
    }
}

TEST(Replay, RejectsNonPositivePrices) {
    std::vector<PriceObservation> prices = {{"0", 1.0}, {"1", -2.0}};
    EXPECT_THROW(replay_historical(prices, seed_pool(0.5, 0.5, 0.0)), DomainError);
}

TEST(Replay, CumulativeLvrOrderedByActivenessOnStandInSeries) {
    const auto path = gbm_path(config(0.0, 0.8, 12.0 / 31536000.0, 200000, 0, 11), std::log(2500.0));
    std::vector<PriceObservation> prices;
    for (std::size_t i = 0; i < path.size(); ++i) prices.push_back({std::to_string(i), std::exp(path[i])});
    double prev = 0.0;
    for (double lambda : {0.25, 0.5, 0.75, 1.0}) {
        const auto recs = replay_historical(prices, seed_pool(0.5, lambda, path.front()));
        double cumulative = 0.0;
        for (const auto& r : recs) cumulative += r.lvr;
        EXPECT_GT(cumulative, prev) << lambda;
        prev = cumulative;
    }
}

}  // namespace
}  // namespace pa_amm
