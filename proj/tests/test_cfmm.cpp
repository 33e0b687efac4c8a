#include <gtest/gtest.h>

#include <cmath>

#include "pa_amm/cfmm.hpp"
#include "test_support.hpp"

namespace pa_amm {
namespace {

using testing::Draw;
using testing::rel_diff;

TEST(InvariantValue, ClosedFormCases) {
    const G3mCurve half(0.5);
    EXPECT_DOUBLE_EQ(invariant_value(half, {1.0, 1.0}), 1.0);
    EXPECT_NEAR(invariant_value(half, {4.0, 1.0}), 2.0, 1e-15);
}

TEST(InvariantValue, MatchesLogDomainEvaluation) {
    const G3mCurve curve(0.3);
    // 2^0.3 3^0.7 = 2 (3/2)^0.7
    const double direct = 2.0 * std::pow(1.5, 0.7);
    const double log_domain = std::exp(0.3 * std::log(2.0) + 0.7 * std::log(3.0));
    EXPECT_NEAR(invariant_value(curve, {2.0, 3.0}), log_domain, 1e-14);
    EXPECT_NEAR(invariant_value(curve, {2.0, 3.0}), direct, 1e-14);
}

TEST(InvariantValue, RejectsBoundaryReserves) {
    const G3mCurve curve(0.5);
    EXPECT_THROW(invariant_value(curve, {0.0, 1.0}), DomainError);
    EXPECT_THROW(invariant_value(curve, {1.0, -2.0}), DomainError);
    EXPECT_THROW(marginal_price(curve, {0.0, 1.0}), DomainError);
    EXPECT_THROW(G3mCurve(1.0), DomainError);
    EXPECT_THROW(G3mCurve(0.0), DomainError);
}

TEST(MarginalPrice, ClosedFormCases) {
    EXPECT_NEAR(marginal_price(G3mCurve(0.5), {1.0, 1.0}), 1.0, 1e-15);
    EXPECT_NEAR(marginal_price(G3mCurve(0.5), {1.0, 2.0}), 2.0, 1e-15);
    EXPECT_NEAR(marginal_price(G3mCurve(0.25), {3.0, 9.0}), 1.0, 1e-15);
}

TEST(MarginalPrice, GradientRatioAgreesWithClosedForm) {
    const G3mCurve curve(0.35);
    const Reserves r{2.5, 7.0};
    const Reserves grad = curve.gradient(r);
    EXPECT_NEAR(grad.x / grad.y, marginal_price(curve, r), 1e-14);
}

TEST(ReservesFrom, ClosedFormCases) {
    const G3mCurve half(0.5);
    const Reserves a = reserves_from(half, {1.0, 0.0});
    EXPECT_NEAR(a.x, 1.0, 1e-15);
    EXPECT_NEAR(a.y, 1.0, 1e-15);
    const Reserves b = reserves_from(half, {1.0, std::log(4.0)});
    EXPECT_NEAR(b.x, 0.5, 1e-15);
    EXPECT_NEAR(b.y, 2.0, 1e-15);
}

TEST(ReservesFrom, RoundTripsSpecificPoint) {
    const G3mCurve curve(0.3);
    const Reserves r = reserves_from(curve, {5.0, 0.7});
    EXPECT_LE(rel_diff(invariant_value(curve, r), 5.0), 1e-12);
    EXPECT_LE(rel_diff(marginal_price(curve, r), std::exp(0.7)), 1e-12);
    EXPECT_THROW(reserves_from(curve, {0.0, 0.0}), DomainError);
}

TEST(ReservesFrom, RoundTripProperty) {
    Draw draw(1);
    for (int i = 0; i < 2000; ++i) {
        const G3mCurve curve(draw.uniform(0.05, 0.95));
        const double liquidity = draw.log_uniform(1e-3, 1e6);
        const double p = draw.uniform(-5.0, 5.0);
        const Reserves r = reserves_from(curve, {liquidity, p});
        ASSERT_LE(rel_diff(invariant_value(curve, r), liquidity), 1e-10);
        ASSERT_LE(std::abs(log_marginal_price(curve, r) - p), 1e-10 * std::max(1.0, std::abs(p)));
    }
}

TEST(InvariantCurve, HomogeneityProperty) {
    Draw draw(2);
    for (int i = 0; i < 2000; ++i) {
        const G3mCurve curve(draw.uniform(0.05, 0.95));
        const Reserves r{draw.log_uniform(1e-3, 1e3), draw.log_uniform(1e-3, 1e3)};
        const double alpha = draw.uniform(0.1, 10.0);
        const double phi = invariant_value(curve, r);
        ASSERT_LE(std::abs(invariant_value(curve, alpha * r) - alpha * phi), 1e-12 * alpha * phi);
        ASSERT_LE(rel_diff(marginal_price(curve, alpha * r), marginal_price(curve, r)), 1e-12);
    }
}

TEST(InvariantCurve, ConcavityOnLevelSet) {
    Draw draw(3);
    for (int i = 0; i < 2000; ++i) {
        const G3mCurve curve(draw.uniform(0.05, 0.95));
        const double liquidity = draw.log_uniform(1e-2, 1e2);
        const double p1 = draw.uniform(-3.0, 3.0);
        const double p2 = p1 + draw.uniform(0.01, 3.0);
        const Reserves r1 = reserves_from(curve, {liquidity, p1});
        const Reserves r2 = reserves_from(curve, {liquidity, p2});
        const Reserves mid = 0.5 * r1 + 0.5 * r2;
        ASSERT_GT(invariant_value(curve, mid), invariant_value(curve, r1));
    }
}

TEST(PoolValue, ClosedFormCases) {
    const G3mCurve half(0.5);
    EXPECT_NEAR(pool_value(half, {1.0, 0.0}, 1.0), 2.0, 1e-15);
    EXPECT_NEAR(pool_value(half, {1.0, 0.0}, 4.0), 5.0, 1e-15);
    EXPECT_NEAR(pool_value(half, {1.0, std::log(4.0)}, 4.0), 4.0, 1e-14);
    EXPECT_THROW(pool_value(half, {1.0, 0.0}, 0.0), DomainError);
}

TEST(CfmmLvrRate, ClosedFormCases) {
    EXPECT_DOUBLE_EQ(cfmm_lvr_rate(G3mCurve(0.5), 8.0, 1.0), 1.0);
    EXPECT_EQ(cfmm_lvr_rate(G3mCurve(0.3), 123.0, 0.0), 0.0);
    // fully active PA-AMM normalized rate theta(1-theta) sigma^2 / (2 (2 - lambda)) at lambda = 1
    const double theta = 0.5, sigma = 0.7, value = 3.0;
    EXPECT_NEAR(cfmm_lvr_rate(G3mCurve(theta), value, sigma),
                theta * (1.0 - theta) * sigma * sigma / (2.0 * (2.0 - 1.0)) * value, 1e-15);
}

// -sigma^2 P^2 / 2 V''(P) for the price-aligned value at fixed L.
TEST(CfmmLvrRate, MatchesSecondDerivativeOfPoolValue) {
    const G3mCurve curve(0.5);
    const double liquidity = 3.0, sigma = 0.9;
    for (double price : {0.5, 1.0, 2.0, 40.0}) {
        auto v = [&](double p) { return pool_value(curve, {liquidity, std::log(p)}, p); };
        const double h = 1e-3 * price;
        const double second = (v(price + h) - 2.0 * v(price) + v(price - h)) / (h * h);
        const double numeric = -0.5 * sigma * sigma * price * price * second;
        EXPECT_LE(rel_diff(numeric, cfmm_lvr_rate(curve, v(price), sigma)), 1e-6) << "price " << price;
    }
}

}  // namespace
}  // namespace pa_amm
