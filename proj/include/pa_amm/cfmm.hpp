// Constant function market maker invariants.
//
// The G3M curve phi(x, y) = x^theta * y^(1 - theta) is the only shipped
// instance; everything that needs nothing beyond phi, its gradient and the
// (L, p) reparametrization is written against InvariantCurve.
#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace pa_amm {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Reserves {
    double x{0.0};
    double y{0.0};

    friend Reserves operator+(Reserves a, Reserves b) { return {a.x + b.x, a.y + b.y}; }
    friend Reserves operator*(double s, Reserves r) { return {s * r.x, s * r.y}; }
    friend bool operator==(const Reserves&, const Reserves&) = default;
};

// (L, p): invariant value and log marginal price.
struct PricePoint {
    double liquidity{1.0};
    double log_price{0.0};
};

inline void require_interior(const Reserves& r, const char* what) {
    if (!(r.x > 0.0) || !(r.y > 0.0)) {
        throw DomainError(std::string(what) + ": reserves must be strictly positive");
    }
}

class InvariantCurve {
public:
    virtual ~InvariantCurve() = default;

    /// phi(R). Requires strictly positive reserves.
    virtual double value(const Reserves& r) const = 0;
    /// (d phi / dx, d phi / dy).
    virtual Reserves gradient(const Reserves& r) const = 0;
    /// Reserves R(L, p) with phi(R) = L and log marginal price p.
    virtual Reserves reserves_from(const PricePoint& pt) const = 0;

    virtual double log_value(const Reserves& r) const { return std::log(value(r)); }

    virtual double log_marginal_price(const Reserves& r) const {
        const Reserves grad = gradient(r);
        return std::log(grad.x) - std::log(grad.y);
    }
    double marginal_price(const Reserves& r) const { return std::exp(log_marginal_price(r)); }
};

/// Two-asset geometric mean market maker with weights (theta, 1 - theta).
class G3mCurve final : public InvariantCurve {
public:
    explicit G3mCurve(double theta) : theta_(theta) {
        if (!(theta > 0.0 && theta < 1.0)) {
            throw DomainError("G3M weight theta must lie in (0, 1)");
        }
    }

    double theta() const { return theta_; }

    double value(const Reserves& r) const override {
        require_interior(r, "invariant_value");
        return std::exp(log_value(r));
    }

    double log_value(const Reserves& r) const override {
        require_interior(r, "invariant_value");
        return theta_ * std::log(r.x) + (1.0 - theta_) * std::log(r.y);
    }

    Reserves gradient(const Reserves& r) const override {
        require_interior(r, "gradient");
        const double phi = value(r);
        return {theta_ * phi / r.x, (1.0 - theta_) * phi / r.y};
    }

    double log_marginal_price(const Reserves& r) const override {
        require_interior(r, "marginal_price");
        return std::log(theta_ / (1.0 - theta_)) + std::log(r.y) - std::log(r.x);
    }

    // x = L (theta/(1-theta) e^-p)^(1-theta), y = L ((1-theta)/theta e^p)^theta
    Reserves reserves_from(const PricePoint& pt) const override {
        if (!(pt.liquidity > 0.0)) {
            throw DomainError("reserves_from: liquidity must be positive");
        }
        return reserves_from_log(std::log(pt.liquidity), pt.log_price);
    }

    // y comes from the level set rather than its own closed form: the
    // separate forms leave a price-dependent bias in log_value().
    Reserves reserves_from_log(double log_liquidity, double log_price) const {
        const double log_odds = std::log(theta_ / (1.0 - theta_));
        const double x = std::exp(log_liquidity + (1.0 - theta_) * (log_odds - log_price));
        const double y = std::exp((log_liquidity - theta_ * std::log(x)) / (1.0 - theta_));
        return {x, y};
    }

private:
    double theta_;
};

using CurvePtr = std::shared_ptr<const InvariantCurve>;

inline CurvePtr make_g3m(double theta) { return std::make_shared<const G3mCurve>(theta); }

inline double invariant_value(const InvariantCurve& curve, const Reserves& r) { return curve.value(r); }

inline double marginal_price(const InvariantCurve& curve, const Reserves& r) {
    return curve.marginal_price(r);
}

inline double log_marginal_price(const InvariantCurve& curve, const Reserves& r) {
    return curve.log_marginal_price(r);
}

inline Reserves reserves_from(const InvariantCurve& curve, const PricePoint& pt) {
    return curve.reserves_from(pt);
}

/// V(L, P, S) = S x(L, log P) + y(L, log P).
inline double pool_value(const InvariantCurve& curve, const PricePoint& pt, double true_price) {
    if (!(true_price > 0.0)) {
        throw DomainError("pool_value: true price must be positive");
    }
    const Reserves r = curve.reserves_from(pt);
    return true_price * r.x + r.y;
}

inline double value_at(const Reserves& r, double true_price) { return true_price * r.x + r.y; }

/// Instantaneous LVR of a fully active G3M: sigma^2/2 theta (1 - theta) V.
inline double cfmm_lvr_rate(const G3mCurve& curve, double value, double sigma) {
    const double theta = curve.theta();
    return 0.5 * sigma * sigma * theta * (1.0 - theta) * value;
}

}  // namespace pa_amm
