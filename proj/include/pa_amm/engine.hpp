// Partially active AMM state machine: active/passive partition, lazy
// once-per-period rebalancing and invariant-checked swaps.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>

#include "cfmm.hpp"

namespace pa_amm {

class InvariantViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using BlockHeight = std::int64_t;

struct SwapDelta {
    double dx{0.0};
    double dy{0.0};
};

struct PoolState {
    Reserves active;
    Reserves passive;
    double lambda{1.0};
    BlockHeight last_rebalance_block{0};
    BlockHeight rebalance_period{1};
    CurvePtr curve;
};

inline Reserves total_reserves(const PoolState& s) { return s.active + s.passive; }

inline void validate(const PoolState& s) {
    if (!s.curve) throw DomainError("pool has no invariant curve");
    if (!(s.lambda > 0.0 && s.lambda <= 1.0)) throw DomainError("activeness lambda must lie in (0, 1]");
    if (s.rebalance_period < 1) throw DomainError("rebalance period must be >= 1");
    if (s.last_rebalance_block < 0) throw DomainError("block height must be >= 0");
    require_interior(s.active, "active reserves");
    if (s.passive.x < 0.0 || s.passive.y < 0.0) throw DomainError("passive reserves must be non-negative");
}

/// Splits `total` into lambda / (1 - lambda) parts as of block `block`.
inline PoolState make_pool(CurvePtr curve, Reserves total, double lambda, BlockHeight block = 0,
                           BlockHeight rebalance_period = 1) {
    PoolState s;
    s.active = lambda * total;
    s.passive = (1.0 - lambda) * total;
    s.lambda = lambda;
    s.last_rebalance_block = block;
    s.rebalance_period = rebalance_period;
    s.curve = std::move(curve);
    validate(s);
    return s;
}

/// Re-partitions at the first interaction of an eligible block; otherwise a no-op.
inline PoolState rebalance(PoolState s, BlockHeight block) {
    if (block < s.last_rebalance_block) {
        throw DomainError("rebalance: block height went backwards");
    }
    if (block - s.last_rebalance_block >= s.rebalance_period) {
        const Reserves total = total_reserves(s);
        s.active = s.lambda * total;
        s.passive = (1.0 - s.lambda) * total;
        s.last_rebalance_block = block;
    }
    return s;
}

inline PoolState swap(PoolState s, const SwapDelta& delta, BlockHeight block) {
    s = rebalance(std::move(s), block);
    const Reserves next{s.active.x + delta.dx, s.active.y + delta.dy};
    if (!(next.x > 0.0) || !(next.y > 0.0)) {
        throw DomainError("swap: resulting active reserves must be strictly positive");
    }
    const double before = s.curve->value(s.active);
    const double after = s.curve->value(next);
    if (after < before) {
        throw InvariantViolation("swap: trade decreases the invariant");
    }
    s.active = next;
    return s;
}

namespace detail {

// Smallest y' (up to bisection resolution) with phi(x', y') >= target.
inline double solve_y_on_level(const InvariantCurve& curve, double x_new, double y_hint, double target) {
    double lo = y_hint;
    double hi = y_hint;
    while (curve.value({x_new, lo}) > target) {
        lo *= 0.5;
        if (!(lo > std::numeric_limits<double>::min())) {
            throw DomainError("swap_exact_in: no positive output reserve remains");
        }
    }
    while (curve.value({x_new, hi}) < target) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw DomainError("swap_exact_in: output bracket diverged");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double v = curve.value({x_new, mid});
        if (std::abs(v - target) <= 1e-14 * target) return v >= target ? mid : hi;
        (v < target ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace detail

/// Output leg dy that keeps phi(active + (dx, dy)) == phi(active), rounded in the
/// pool's favour so that swap() accepts the pair. Triggers a rebalance first.
inline double swap_exact_in(const PoolState& state, double dx, BlockHeight block) {
    if (dx == 0.0) return 0.0;
    const PoolState s = rebalance(state, block);
    const InvariantCurve& curve = *s.curve;
    const double x_new = s.active.x + dx;
    if (!(x_new > 0.0)) throw DomainError("swap_exact_in: input leaves non-positive reserves");
    const double target = curve.value(s.active);

    double y_new;
    if (const auto* g3m = dynamic_cast<const G3mCurve*>(&curve)) {
        const double theta = g3m->theta();
        y_new = std::exp((std::log(target) - theta * std::log(x_new)) / (1.0 - theta));
    } else {
        y_new = detail::solve_y_on_level(curve, x_new, s.active.y, target);
    }
    if (!(y_new > 0.0) || !std::isfinite(y_new)) {
        throw DomainError("swap_exact_in: no positive output reserve remains");
    }
    while (curve.value({x_new, y_new}) < target) {
        y_new = std::nextafter(y_new, std::numeric_limits<double>::infinity());
    }
    return y_new - s.active.y;
}

}  // namespace pa_amm
