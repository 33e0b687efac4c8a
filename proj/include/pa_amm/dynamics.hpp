// Block-level simulation of a PA-AMM against frictionless arbitrageurs.
//
// Per block n with true log price s_n:
//   rebalance -> arbitrage on the active reserves -> merge with passive,
// and the record holds the gaps, log-liquidity, LVR, normalized LVR and the
// tracking error of the post-arbitrage total reserves.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "arbitrage.hpp"
#include "cfmm.hpp"
#include "engine.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace pa_amm {

struct SimConfig {
    double mu{0.0};
    double sigma{0.0};
    double dt{1.0};
    std::int64_t n_blocks{0};
    std::int64_t burn_in{0};
    std::uint64_t seed{0};

    double innovation_mean() const { return mu * dt; }
    double innovation_stddev() const { return sigma * std::sqrt(dt); }
};

inline void validate(const SimConfig& c) {
    if (!(c.sigma >= 0.0)) throw DomainError("sigma must be >= 0");
    if (!(c.dt > 0.0)) throw DomainError("dt must be > 0");
    if (c.n_blocks < 0) throw DomainError("n_blocks must be >= 0");
    if (c.burn_in < 0 || (c.n_blocks > 0 && c.burn_in >= c.n_blocks)) {
        throw DomainError("burn_in must satisfy 0 <= burn_in < n_blocks");
    }
}

struct BlockRecord {
    BlockHeight block{0};
    double log_true_price{0.0};
    double top_gap{0.0};
    double bot_gap{0.0};
    double log_liquidity{0.0};
    double lvr{0.0};
    double norm_lvr{0.0};
    double risky_weight{0.0};
    double tracking_error{0.0};
};

struct MomentEstimate {
    double mean_gap{0.0};
    double mean_gap_std_error{0.0};
    double second_moment_gap{0.0};
    double std_error{0.0};
    std::size_t n_samples{0};

    double variance() const { return second_moment_gap - mean_gap * mean_gap; }
};

struct RateEstimate {
    double estimate{0.0};
    double std_error{0.0};
    std::size_t n_samples{0};
};

// Leading-order stationary predictions.

inline double predicted_gap_second_moment(double lambda, double sigma, double dt) {
    return sigma * sigma * dt / (lambda * (2.0 - lambda));
}

inline double predicted_norm_lvr_rate(double lambda, double theta, double sigma) {
    return theta * (1.0 - theta) * sigma * sigma / (2.0 * (2.0 - lambda));
}

inline double predicted_liquidity_growth_rate(double lambda, double theta, double sigma) {
    return 0.5 * theta * (1.0 - theta) * sigma * sigma * (1.0 - lambda) / (2.0 - lambda);
}

inline void require_activeness(double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("activeness lambda must lie in (0, 1]");
}

inline void require_weight(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("weight theta must lie in (0, 1)");
}

/// Log prices s_0 .. s_n with s_k - s_{k-1} ~ N(mu dt, sigma^2 dt).
inline std::vector<double> gbm_path(const SimConfig& config, double s0) {
    validate(config);
    std::vector<double> path;
    path.reserve(static_cast<std::size_t>(config.n_blocks) + 1);
    path.push_back(s0);
    GaussianStream noise(config.seed);
    const double m = config.innovation_mean();
    const double sd = config.innovation_stddev();
    double s = s0;
    for (std::int64_t n = 0; n < config.n_blocks; ++n) {
        s += noise.normal(m, sd);
        path.push_back(s);
    }
    return path;
}

/// Pool seeded at price exp(log_price) holding `x` of the risky asset in total.
inline PoolState seed_pool(double theta, double lambda, double log_price, double x = 1000.0,
                           BlockHeight rebalance_period = 1) {
    auto curve = std::make_shared<const G3mCurve>(theta);
    const double y = (1.0 - theta) / theta * std::exp(log_price) * x;
    return make_pool(std::move(curve), {x, y}, lambda, 0, rebalance_period);
}

inline double target_weight(const InvariantCurve& curve, const Reserves& r) {
    if (const auto* g3m = dynamic_cast<const G3mCurve*>(&curve)) return g3m->theta();
    const double p = curve.marginal_price(r);
    return p * r.x / (p * r.x + r.y);
}

inline std::pair<PoolState, BlockRecord> step_block(PoolState pool, double log_true_price, BlockHeight block) {
    const InvariantCurve& curve = *pool.curve;
    const Reserves before = total_reserves(pool);
    const double log_price_before = curve.log_marginal_price(before);
    const double true_price = std::exp(log_true_price);
    const double value_before_own = value_at(before, std::exp(log_price_before));

    pool = rebalance(std::move(pool), block);
    pool.active = arbitrage_trade(curve, pool.active, log_true_price);

    const Reserves after = total_reserves(pool);
    BlockRecord rec;
    rec.block = block;
    rec.log_true_price = log_true_price;
    rec.top_gap = log_true_price - log_price_before;
    rec.bot_gap = log_true_price - curve.log_marginal_price(after);
    rec.log_liquidity = curve.log_value(after);
    rec.lvr = value_at(before, true_price) - value_at(after, true_price);
    rec.norm_lvr = rec.lvr / value_before_own;
    rec.risky_weight = true_price * after.x / value_at(after, true_price);
    const double dev = rec.risky_weight - target_weight(curve, after);
    rec.tracking_error = dev * dev;
    return {std::move(pool), rec};
}

/// Drives step_block over a GBM path starting at the pool's current log price.
inline std::vector<BlockRecord> simulate_path(const SimConfig& config, PoolState pool) {
    validate(config);
    validate(pool);
    const double s0 = pool.curve->log_marginal_price(total_reserves(pool));
    const std::vector<double> path = gbm_path(config, s0);
    std::vector<BlockRecord> out;
    out.reserve(static_cast<std::size_t>(config.n_blocks));
    BlockHeight block = pool.last_rebalance_block;
    for (std::size_t k = 1; k < path.size(); ++k) {
        auto [next, rec] = step_block(std::move(pool), path[k], ++block);
        pool = std::move(next);
        out.push_back(rec);
    }
    return out;
}

/// Moments of the top-of-block gap from the exact scalar recursion
/// g_{n+1} = psi(g_n) + eps_{n+1}, started at g = 0, burn-in discarded.
inline MomentEstimate stationary_moments(double lambda, double theta, const SimConfig& config) {
    require_activeness(lambda);
    require_weight(theta);
    validate(config);
    GaussianStream noise(config.seed);
    const double m = config.innovation_mean();
    const double sd = config.innovation_stddev();
    const auto kept = static_cast<std::size_t>(config.n_blocks - config.burn_in);
    std::vector<double> gaps;
    std::vector<double> squares;
    gaps.reserve(kept);
    squares.reserve(kept);
    double g = 0.0;
    for (std::int64_t n = 0; n < config.n_blocks; ++n) {
        g = psi(g, lambda, theta) + noise.normal(m, sd);
        if (n >= config.burn_in) {
            gaps.push_back(g);
            squares.push_back(g * g);
        }
    }
    const MeanEstimate first = batch_mean(gaps);
    const MeanEstimate second = batch_mean(squares);
    MomentEstimate out;
    out.mean_gap = first.mean;
    out.mean_gap_std_error = first.std_error;
    out.second_moment_gap = second.mean;
    out.std_error = second.std_error;
    out.n_samples = second.n_samples;
    return out;
}

struct StationaryRates {
    RateEstimate norm_lvr;          // E[norm_lvr] / dt
    RateEstimate liquidity_growth;  // E[l_n - l_{n-1}] / dt
};

/// Runs the full pool pipeline on a GBM path and estimates per-unit-time
/// normalized LVR and log-liquidity growth after burn-in.
inline StationaryRates stationary_rates(double lambda, double theta, const SimConfig& config) {
    require_activeness(lambda);
    require_weight(theta);
    validate(config);
    PoolState pool = seed_pool(theta, lambda, 0.0, 1.0);
    GaussianStream noise(config.seed);
    const double m = config.innovation_mean();
    const double sd = config.innovation_stddev();
    const auto kept = static_cast<std::size_t>(config.n_blocks - config.burn_in);
    std::vector<double> lvr;
    std::vector<double> growth;
    lvr.reserve(kept);
    growth.reserve(kept);
    double s = 0.0;
    double prev_ell = pool.curve->log_value(total_reserves(pool));
    for (std::int64_t n = 0; n < config.n_blocks; ++n) {
        s += noise.normal(m, sd);
        auto [next, rec] = step_block(std::move(pool), s, n + 1);
        pool = std::move(next);
        if (n >= config.burn_in) {
            lvr.push_back(rec.norm_lvr / config.dt);
            growth.push_back((rec.log_liquidity - prev_ell) / config.dt);
        }
        prev_ell = rec.log_liquidity;
    }
    StationaryRates out;
    const MeanEstimate a = batch_mean(lvr);
    const MeanEstimate b = batch_mean(growth);
    out.norm_lvr = {a.mean, a.std_error, a.n_samples};
    out.liquidity_growth = {b.mean, b.std_error, b.n_samples};
    return out;
}

inline RateEstimate lvr_rate_estimate(double lambda, double theta, const SimConfig& config) {
    return stationary_rates(lambda, theta, config).norm_lvr;
}

inline RateEstimate liquidity_growth_rate_estimate(double lambda, double theta, const SimConfig& config) {
    return stationary_rates(lambda, theta, config).liquidity_growth;
}

struct PriceObservation {
    std::string timestamp;
    double price{0.0};
};

/// One observation = one block, in order, starting after the pool's last
/// rebalance block.
inline std::vector<BlockRecord> replay_historical(const std::vector<PriceObservation>& prices, PoolState pool) {
    validate(pool);
    std::vector<BlockRecord> out;
    out.reserve(prices.size());
    BlockHeight block = pool.last_rebalance_block;
    for (const auto& obs : prices) {
        if (!(obs.price > 0.0) || !std::isfinite(obs.price)) {
            throw DomainError("replay_historical: prices must be strictly positive");
        }
        auto [next, rec] = step_block(std::move(pool), std::log(obs.price), ++block);
        pool = std::move(next);
        out.push_back(rec);
    }
    return out;
}

struct TrackingErrorPair {
    double exact{0.0};
    double expansion{0.0};
};

/// TE after one block with top gap g on a freshly rebalanced pool, next to its
/// leading term theta^2 (1-theta)^2 (1-lambda)^2 g^2.
inline TrackingErrorPair tracking_error_check(double lambda, double theta, double g) {
    require_activeness(lambda);
    require_weight(theta);
    PoolState pool = seed_pool(theta, lambda, 0.0, 1.0);
    const auto [after, rec] = step_block(std::move(pool), g, 1);
    const double lead = theta * (1.0 - theta) * (1.0 - lambda) * g;
    return {rec.tracking_error, lead * lead};
}

}  // namespace pa_amm
