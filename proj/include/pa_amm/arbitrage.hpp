// Frictionless competitive arbitrage and the exact one-block gap map of a
// G3M PA-AMM.
//
// Within a block the arbitrageur moves the active reserves along their level
// set until the active marginal price equals the true price s. Merging the
// result back with the passive reserves leaves the total at a log price that
// depends only on the pre-block gap g = s - p_prev:
//
//   p_post = p_prev + log(1 - lambda + lambda e^{theta g})
//                   - log(1 - lambda + lambda e^{-(1-theta) g})
//
// and the bottom-of-block gap s - p_post = psi(g).
#pragma once

#include <algorithm>
#include <cmath>

#include "cfmm.hpp"

namespace pa_amm {

namespace detail {

// log(1 - lambda + lambda e^a), stable for small lambda, small a and large |a|.
inline double log_mix(double lambda, double a) {
    if (a > 1.0) return a + std::log(lambda + (1.0 - lambda) * std::exp(-a));
    if (a < -1.0) return std::log((1.0 - lambda) + lambda * std::exp(a));
    return std::log1p(lambda * std::expm1(a));
}

// lambda e^a / (1 - lambda + lambda e^a)
inline double mix_share(double lambda, double a) {
    if (a >= 0.0) return lambda / (lambda + (1.0 - lambda) * std::exp(-a));
    const double e = std::exp(a);
    return lambda * e / (1.0 - lambda + lambda * e);
}

// e^a / (1 - lambda + lambda e^a)^2
inline double mix_curvature(double lambda, double a) {
    if (a >= 0.0) {
        const double d = lambda + (1.0 - lambda) * std::exp(-a);
        return std::exp(-a) / (d * d);
    }
    const double e = std::exp(a);
    const double d = 1.0 - lambda + lambda * e;
    return e / (d * d);
}

// Point on the level set phi = liquidity with the requested log marginal price,
// found by bisection on t = log(x / y). Uses only value() and gradient().
inline Reserves reserves_on_level(const InvariantCurve& curve, double liquidity, double log_price,
                                  double start_t) {
    auto ray = [&](double t) {
        const Reserves unit{std::exp(0.5 * t), std::exp(-0.5 * t)};
        const double scale = liquidity / curve.value(unit);
        return Reserves{scale * unit.x, scale * unit.y};
    };
    // log price is decreasing in t for a strictly concave curve
    auto excess = [&](double t) { return curve.log_marginal_price(ray(t)) - log_price; };
    double lo = start_t;
    double hi = start_t;
    double step = 1.0;
    while (excess(lo) < 0.0) {
        lo -= step;
        step *= 2.0;
    }
    step = 1.0;
    while (excess(hi) > 0.0) {
        hi += step;
        step *= 2.0;
    }
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double e = excess(mid);
        if (std::abs(e) <= 1e-13 || mid <= lo || mid >= hi) return ray(mid);
        (e > 0.0 ? lo : hi) = mid;
    }
    return ray(0.5 * (lo + hi));
}

}  // namespace detail

/// Active reserves after the price-closing arbitrage: same invariant value,
/// log marginal price equal to `log_true_price`.
inline Reserves arbitrage_trade(const InvariantCurve& curve, const Reserves& active, double log_true_price) {
    require_interior(active, "arbitrage_trade");
    if (const auto* g3m = dynamic_cast<const G3mCurve*>(&curve)) {
        return g3m->reserves_from_log(g3m->log_value(active), log_true_price);
    }
    return detail::reserves_on_level(curve, curve.value(active), log_true_price, std::log(active.x / active.y));
}

inline double psi(double g, double lambda, double theta) {
    return g - (detail::log_mix(lambda, theta * g) - detail::log_mix(lambda, -(1.0 - theta) * g));
}

inline double psi_prime(double g, double lambda, double theta) {
    return 1.0 - theta * detail::mix_share(lambda, theta * g) -
           (1.0 - theta) * detail::mix_share(lambda, -(1.0 - theta) * g);
}

inline double psi_second(double g, double lambda, double theta) {
    const double a = theta * g;
    const double b = -(1.0 - theta) * g;
    return -lambda * (1.0 - lambda) *
           (theta * theta * detail::mix_curvature(lambda, a) -
            (1.0 - theta) * (1.0 - theta) * detail::mix_curvature(lambda, b));
}

/// rho = 1 - lambda min(theta, 1 - theta); global Lipschitz constant of psi.
inline double contraction_bound(double lambda, double theta) {
    return 1.0 - lambda * std::min(theta, 1.0 - theta);
}

inline double merged_log_price(double p_prev, double g, double lambda, double theta) {
    return p_prev + detail::log_mix(lambda, theta * g) - detail::log_mix(lambda, -(1.0 - theta) * g);
}

}  // namespace pa_amm
