// Optimal activeness as a discounted linear-quadratic control problem.
//
// With u = 1 - lambda the gap follows g' = u g + eps, eps ~ N(m, s2 - m^2), and
// the stage cost is (u^2 - gamma u + gamma) g^2. The quadratic value function
// V(g) = v2 g^2 + v1 g + v0 solves
//
//   beta v2^2 + (1 - beta gamma) v2 + (gamma^2/4 - gamma) = 0
//   v1 (2 + 2 beta v2 - gamma beta) = 2 gamma beta v2 m
//   v0 = beta (v2 s2 + v1 m + v0) - beta^2 (2 v2 m + v1)^2 / (4 (1 + beta v2))
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "cfmm.hpp"

namespace pa_amm {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ControlParams {
    double gamma{0.0};
    double rho_disc{0.05};
    double dt{1.0};
    double mu{0.0};
    double sigma{0.0};
    double lambda_lower{0.05};

    double beta() const { return std::exp(-rho_disc * dt); }
    double drift() const { return mu * dt; }                          // m
    double second_moment() const { return sigma * sigma * dt + drift() * drift(); }  // s2
};

inline void validate(const ControlParams& p) {
    if (!(p.gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    if (!(p.rho_disc > 0.0)) throw DomainError("discount rate must be > 0");
    if (!(p.dt > 0.0)) throw DomainError("dt must be > 0");
    if (!(p.sigma >= 0.0)) throw DomainError("sigma must be >= 0");
    if (!(p.lambda_lower > 0.0 && p.lambda_lower < 1.0)) throw DomainError("lambda_lower must lie in (0, 1)");
}

struct RiccatiSolution {
    double v2{0.0};
    double v1{0.0};
    double v0{0.0};
    double beta{1.0};
};

struct RiccatiResiduals {
    double v2_eq{0.0};
    double v1_eq{0.0};
    double v0_eq{0.0};
};

/// Positive root of the scalar Riccati equation and the linear/constant terms.
/// beta = 1 is allowed for the quadratic and linear terms; v0 is +inf then.
inline RiccatiSolution solve_riccati(double gamma, double beta, double m, double s2) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("beta must lie in (0, 1]");
    const double a = beta;
    const double b = 1.0 - beta * gamma;
    const double c = gamma * gamma / 4.0 - gamma;
    const double disc = b * b - 4.0 * a * c;
    if (!(disc >= 0.0)) throw NumericalError("Riccati discriminant is negative");
    const double root = std::sqrt(disc);
    // (-b + root) / (2a) without cancellation
    const double v2 = b > 0.0 ? (2.0 * c) / (-b - root) : (-b + root) / (2.0 * a);

    RiccatiSolution sol;
    sol.beta = beta;
    sol.v2 = v2 == 0.0 ? 0.0 : v2;  // no -0.0
    sol.v1 = 2.0 * gamma * beta * sol.v2 * m / (2.0 + 2.0 * beta * sol.v2 - gamma * beta);
    const double k = 2.0 * sol.v2 * m + sol.v1;
    const double numer = beta * (sol.v2 * s2 + sol.v1 * m) - beta * beta * k * k / (4.0 * (1.0 + beta * sol.v2));
    if (beta < 1.0) {
        sol.v0 = numer / (1.0 - beta);
    } else {
        sol.v0 = numer == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), numer);
    }
    return sol;
}

inline RiccatiSolution solve_riccati(const ControlParams& p) {
    validate(p);
    return solve_riccati(p.gamma, p.beta(), p.drift(), p.second_moment());
}

/// Residuals of the three coefficient equations. The v0 residual is NaN when
/// v0 is infinite (beta = 1).
inline RiccatiResiduals riccati_residuals(const RiccatiSolution& sol, double gamma, double m, double s2) {
    const double beta = sol.beta;
    RiccatiResiduals r;
    r.v2_eq = beta * sol.v2 * sol.v2 + (1.0 - beta * gamma) * sol.v2 + (gamma * gamma / 4.0 - gamma);
    r.v1_eq = sol.v1 * (2.0 + 2.0 * beta * sol.v2 - gamma * beta) - 2.0 * gamma * beta * sol.v2 * m;
    const double k = 2.0 * sol.v2 * m + sol.v1;
    r.v0_eq = sol.v0 - (beta * (sol.v2 * s2 + sol.v1 * m + sol.v0) - beta * beta * k * k / (4.0 * (1.0 + beta * sol.v2)));
    return r;
}

inline double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

/// Unclipped constant part of the feedback law, 1 - gamma / (2 (1 + beta v2)).
inline double feedback_constant(const RiccatiSolution& sol, double gamma) {
    return 1.0 - gamma / (2.0 * (1.0 + sol.beta * sol.v2));
}

inline double feedback_lambda(double g, const RiccatiSolution& sol, const ControlParams& p) {
    const double denom = 2.0 * (1.0 + sol.beta * sol.v2);
    double raw = feedback_constant(sol, p.gamma);
    if (g != 0.0) raw += sol.beta * (2.0 * sol.v2 * p.drift() + sol.v1) / denom / g;
    return clip(raw, p.lambda_lower, 1.0);
}

/// Small-dt optimal activeness (1 + sqrt(1 + 2 gamma)) / (1 + gamma + sqrt(1 + 2 gamma)).
inline double lambda_star(double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    const double r = std::sqrt(1.0 + 2.0 * gamma);
    return (1.0 + r) / (1.0 + gamma + r);
}

/// Leading-order stationary per-block loss divided by sigma^2 dt.
inline double stationary_loss(double lambda, double gamma) {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw DomainError("activeness lambda must lie in (0, 1]");
    if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
    const double u = 1.0 - lambda;
    return (u * u + gamma * lambda) / (lambda * (2.0 - lambda));
}

// ---------------------------------------------------------------------------
// Brute-force Bellman solver on a state grid.

struct GridSpec {
    double lo{0.0};
    double hi{0.0};
    std::size_t count{0};

    double step() const { return count > 1 ? (hi - lo) / static_cast<double>(count - 1) : 0.0; }
    double at(std::size_t i) const { return lo + step() * static_cast<double>(i); }
};

struct OracleOptions {
    std::size_t quadrature_nodes{48};
    double tolerance{1e-10};
    int max_iterations{200};
    double extrapolation_fraction{0.1};  // outer share of each side used for the quadratic fit
};

struct OracleResult {
    std::vector<double> states;
    std::vector<double> value;
    std::vector<double> action;  // greedy u = 1 - lambda
    int iterations{0};
    double final_change{0.0};

    double lambda_at(std::size_t i) const { return 1.0 - action[i]; }
};

/// Probabilists' Gauss-Hermite rule: sum w_i f(x_i) ~ E[f(Z)], Z ~ N(0, 1).
/// Golub-Welsch on the Jacobi matrix of the He_n recurrence.
inline void gauss_hermite(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k < n; ++k) {
        const double off = std::sqrt(static_cast<double>(k));
        jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = off;
        jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    nodes.resize(n);
    weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        nodes[i] = eig.eigenvalues()(ii);
        const double v0 = eig.eigenvectors()(0, ii);
        weights[i] = v0 * v0;
    }
}

namespace detail {

struct Stencil {
    std::vector<std::size_t> index;
    std::vector<double> weight;
};

// Linear functional V -> V(x) on the grid: 4-point Lagrange inside, a
// least-squares quadratic over the outer band outside.
class GridInterpolator {
public:
    GridInterpolator(const GridSpec& grid, double band_fraction) : grid_(grid) {
        const std::size_t n = grid.count;
        band_ = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(band_fraction * static_cast<double>(n))));
        band_ = std::min(band_, n);
        left_fit_ = fit_rows(0);
        right_fit_ = fit_rows(n - band_);
    }

    Stencil stencil(double x) const {
        const std::size_t n = grid_.count;
        const double h = grid_.step();
        Stencil s;
        if (x < grid_.lo || x > grid_.hi) {
            const bool left = x < grid_.lo;
            const std::size_t first = left ? 0 : n - band_;
            const auto& fit = left ? left_fit_ : right_fit_;
            const double t = (x - center(first)) / h;
            for (std::size_t j = 0; j < band_; ++j) {
                s.index.push_back(first + j);
                s.weight.push_back(fit[0][j] + fit[1][j] * t + fit[2][j] * t * t);
            }
            return s;
        }
        const double pos = (x - grid_.lo) / h;
        auto base = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
        base = std::clamp<std::ptrdiff_t>(base, 0, static_cast<std::ptrdiff_t>(n) - 4);
        for (std::ptrdiff_t j = 0; j < 4; ++j) {
            double w = 1.0;
            for (std::ptrdiff_t k = 0; k < 4; ++k) {
                if (k == j) continue;
                w *= (pos - static_cast<double>(base + k)) / static_cast<double>(j - k);
            }
            s.index.push_back(static_cast<std::size_t>(base + j));
            s.weight.push_back(w);
        }
        return s;
    }

private:
    double center(std::size_t first) const { return grid_.at(first) + 0.5 * grid_.step() * static_cast<double>(band_ - 1); }

    // Rows c0, c1, c2 of (A^T A)^{-1} A^T for A = [1, t, t^2], t in grid steps from the band center.
    std::array<std::vector<double>, 3> fit_rows(std::size_t first) const {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(band_), 3);
        const double c = center(first);
        for (std::size_t j = 0; j < band_; ++j) {
            const double t = (grid_.at(first + j) - c) / grid_.step();
            a(static_cast<Eigen::Index>(j), 0) = 1.0;
            a(static_cast<Eigen::Index>(j), 1) = t;
            a(static_cast<Eigen::Index>(j), 2) = t * t;
        }
        const Eigen::MatrixXd pinv = (a.transpose() * a).ldlt().solve(a.transpose());
        std::array<std::vector<double>, 3> rows;
        for (int r = 0; r < 3; ++r) {
            rows[static_cast<std::size_t>(r)].resize(band_);
            for (std::size_t j = 0; j < band_; ++j) rows[static_cast<std::size_t>(r)][j] = pinv(r, static_cast<Eigen::Index>(j));
        }
        return rows;
    }

    GridSpec grid_;
    std::size_t band_{4};
    std::array<std::vector<double>, 3> left_fit_;
    std::array<std::vector<double>, 3> right_fit_;
};

}  // namespace detail

/// Symmetric state grid spanning `stddevs` stationary gap standard deviations
/// under lambda = clip(lambda*(gamma), lambda_lower, 1). Even point count, so
/// g = 0 is not a node.
inline GridSpec default_state_grid(const ControlParams& p, std::size_t count = 200, double stddevs = 12.0) {
    const double lam = clip(lambda_star(p.gamma), p.lambda_lower, 1.0);
    const double sd = std::sqrt(p.second_moment() / (lam * (2.0 - lam)));
    const double half = stddevs * sd;
    if (count % 2 != 0) ++count;
    return {-half, half, count};
}

/// Action grid over u in [0, 1 - lambda_lower].
inline GridSpec default_action_grid(const ControlParams& p, std::size_t count = 191) {
    return {0.0, 1.0 - p.lambda_lower, count};
}

/// Solves V(g) = min_u { (u^2 - gamma u + gamma) g^2 + beta E[V(u g + eps)] } on
/// the grid by policy iteration: exact policy evaluation (dense LU) alternating
/// with greedy improvement, until one Bellman application moves V by less than
/// the tolerance in sup norm.
inline OracleResult value_iteration_oracle(const ControlParams& params, const GridSpec& state_grid,
                                           const GridSpec& action_grid, const OracleOptions& opts = {}) {
    validate(params);
    if (state_grid.count < 8 || !(state_grid.hi > state_grid.lo)) throw DomainError("state grid too small");
    if (action_grid.count < 2) throw DomainError("action grid needs at least two points");
    if (action_grid.lo < 0.0 || action_grid.hi > 1.0 - params.lambda_lower + 1e-15) {
        throw DomainError("action grid must lie within [0, 1 - lambda_lower]");
    }
    const double lam_ref = clip(lambda_star(params.gamma), params.lambda_lower, 1.0);
    const double sd = std::sqrt(params.second_moment() / (lam_ref * (2.0 - lam_ref)));
    if (state_grid.hi < 10.0 * sd || -state_grid.lo < 10.0 * sd) {
        throw DomainError("state grid must cover at least 10 stationary standard deviations");
    }

    const std::size_t n = state_grid.count;
    const std::size_t na = action_grid.count;
    const double beta = params.beta();
    const double m = params.drift();
    const double noise_sd = params.sigma * std::sqrt(params.dt);

    std::vector<double> nodes, weights;
    gauss_hermite(opts.quadrature_nodes, nodes, weights);
    const detail::GridInterpolator interp(state_grid, opts.extrapolation_fraction);

    // expectation[i][a]: sparse row E[V(u_a g_i + eps)] as (index, weight) pairs
    struct Row {
        std::vector<std::size_t> index;
        std::vector<double> weight;
    };
    std::vector<Row> expectation(n * na);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = state_grid.at(i);
        for (std::size_t a = 0; a < na; ++a) {
            Row& row = expectation[i * na + a];
            std::vector<double> dense(n, 0.0);
            std::vector<bool> touched(n, false);
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                const auto st = interp.stencil(action_grid.at(a) * g + m + noise_sd * nodes[q]);
                for (std::size_t k = 0; k < st.index.size(); ++k) {
                    dense[st.index[k]] += weights[q] * st.weight[k];
                    touched[st.index[k]] = true;
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (touched[j]) {
                    row.index.push_back(j);
                    row.weight.push_back(dense[j]);
                }
            }
        }
    }

    auto stage_cost = [&](std::size_t i, std::size_t a) {
        const double g = state_grid.at(i);
        const double u = action_grid.at(a);
        return (u * u - params.gamma * u + params.gamma) * g * g;
    };
    auto q_value = [&](const std::vector<double>& v, std::size_t i, std::size_t a) {
        const Row& row = expectation[i * na + a];
        double ev = 0.0;
        for (std::size_t k = 0; k < row.index.size(); ++k) ev += row.weight[k] * v[row.index[k]];
        return stage_cost(i, a) + beta * ev;
    };

    OracleResult out;
    out.states.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.states[i] = state_grid.at(i);
    std::vector<std::size_t> policy(n, 0);
    std::vector<double> value(n, 0.0);

    // start from the greedy policy against V = 0
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < na; ++a) {
            if (q_value(value, i, a) < q_value(value, i, best)) best = a;
        }
        policy[i] = best;
    }

    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        // evaluate: (I - beta P) V = c
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const Row& row = expectation[i * na + policy[i]];
            for (std::size_t k = 0; k < row.index.size(); ++k) {
                system(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(row.index[k])) -= beta * row.weight[k];
            }
            rhs(static_cast<Eigen::Index>(i)) = stage_cost(i, policy[i]);
        }
        const Eigen::VectorXd solved = system.partialPivLu().solve(rhs);
        for (std::size_t i = 0; i < n; ++i) value[i] = solved(static_cast<Eigen::Index>(i));

        // one Bellman application with greedy improvement
        double change = 0.0;
        bool stable = true;
        std::vector<double> updated(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = policy[i];
            double best_q = q_value(value, i, best);
            for (std::size_t a = 0; a < na; ++a) {
                const double qa = q_value(value, i, a);
                if (qa < best_q - 1e-15 * std::max(1.0, std::abs(best_q))) {
                    best_q = qa;
                    best = a;
                }
            }
            if (best != policy[i]) stable = false;
            policy[i] = best;
            updated[i] = best_q;
            change = std::max(change, std::abs(best_q - value[i]));
        }
        out.iterations = iter;
        out.final_change = change;
        if (stable && change < opts.tolerance) {
            out.value = std::move(updated);
            out.action.resize(n);
            for (std::size_t i = 0; i < n; ++i) out.action[i] = action_grid.at(policy[i]);
            return out;
        }
    }
    throw NumericalError("value iteration did not converge within the iteration cap");
}

/// Least-squares quadratic a g^2 + b g + c over states with |g| <= max_abs.
inline std::array<double, 3> fit_quadratic(const std::vector<double>& states, const std::vector<double>& values,
                                           double max_abs) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (std::abs(states[i]) <= max_abs) keep.push_back(i);
    }
    if (keep.size() < 3) throw DomainError("fit_quadratic: need at least three points");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(keep.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const double g = states[keep[r]];
        const auto rr = static_cast<Eigen::Index>(r);
        a(rr, 0) = g * g;
        a(rr, 1) = g;
        a(rr, 2) = 1.0;
        b(rr) = values[keep[r]];
    }
    const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
    return {coef(0), coef(1), coef(2)};
}

}  // namespace pa_amm
