// Command-line front end: simulate, moments, frontier, optimal-lambda, replay.
//
// Exit codes: 0 success, 2 usage error, 3 input data error, 4 numerical failure.
// Every command that writes to --out also writes manifest.json; running
// `pa_amm --manifest DIR/manifest.json` repeats the run byte for byte.
#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pa_amm.hpp"

namespace pa_amm::cli {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr double kSecondsPerYear = 31536000.0;

enum ExitCode : int { kOk = 0, kUsage = 2, kInputData = 3, kNumerical = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Params {
    std::string command;
    double theta{0.5};
    std::string lambdas{"0.25,0.5,0.75,1"};
    double gamma{4.0};
    double mu{0.0};
    double sigma{0.8};
    double dt{12.0 / kSecondsPerYear};
    double rho{0.05};
    std::int64_t blocks{100000};
    std::int64_t burn_in{10000};
    std::uint64_t seed{42};
    std::int64_t period{1};
    double lambda_lower{0.05};
    double initial_x{1000.0};
    double initial_price{2000.0};
    bool oracle{false};
    std::string input;
    std::string out;
    std::string format;
};

inline nlohmann::ordered_json to_json(const Params& p) {
    nlohmann::ordered_json j;
    j["command"] = p.command;
    j["theta"] = p.theta;
    j["lambda"] = p.lambdas;
    j["gamma"] = p.gamma;
    j["mu"] = p.mu;
    j["sigma"] = p.sigma;
    j["dt"] = p.dt;
    j["rho"] = p.rho;
    j["blocks"] = p.blocks;
    j["burn_in"] = p.burn_in;
    j["seed"] = p.seed;
    j["period"] = p.period;
    j["lambda_lower"] = p.lambda_lower;
    j["initial_x"] = p.initial_x;
    j["initial_price"] = p.initial_price;
    j["oracle"] = p.oracle;
    j["input"] = p.input;
    j["out"] = p.out;
    j["format"] = p.format;
    return j;
}

inline Params params_from_json(const nlohmann::json& j) {
    Params p;
    p.command = j.at("command").get<std::string>();
    p.theta = j.at("theta").get<double>();
    p.lambdas = j.at("lambda").get<std::string>();
    p.gamma = j.at("gamma").get<double>();
    p.mu = j.at("mu").get<double>();
    p.sigma = j.at("sigma").get<double>();
    p.dt = j.at("dt").get<double>();
    p.rho = j.at("rho").get<double>();
    p.blocks = j.at("blocks").get<std::int64_t>();
    p.burn_in = j.at("burn_in").get<std::int64_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.period = j.at("period").get<std::int64_t>();
    p.lambda_lower = j.at("lambda_lower").get<double>();
    p.initial_x = j.at("initial_x").get<double>();
    p.initial_price = j.at("initial_price").get<double>();
    p.oracle = j.at("oracle").get<bool>();
    p.input = j.at("input").get<std::string>();
    p.out = j.at("out").get<std::string>();
    p.format = j.at("format").get<std::string>();
    return p;
}

inline std::vector<double> parse_lambda_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto v = pa_amm::detail::parse_number(item);
        if (!v) throw UsageError("--lambda: `" + item + "` is not a number");
        if (!(*v > 0.0 && *v <= 1.0)) {
            throw UsageError("--lambda: activeness must lie in (0, 1], got " + item);
        }
        out.push_back(*v);
    }
    if (out.empty()) throw UsageError("--lambda: empty list");
    return out;
}

inline SimConfig sim_config(const Params& p) {
    SimConfig c{p.mu, p.sigma, p.dt, p.blocks, p.burn_in, p.seed};
    try {
        validate(c);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return c;
}

inline void check_common(const Params& p) {
    if (!(p.theta > 0.0 && p.theta < 1.0)) throw UsageError("--theta must lie in (0, 1)");
    if (!(p.sigma >= 0.0)) throw UsageError("--sigma must be >= 0");
    if (!(p.dt > 0.0)) throw UsageError("--dt must be > 0");
    if (p.period < 1) throw UsageError("--period must be >= 1");
    if (p.format != "json" && p.format != "csv") throw UsageError("--format must be csv or json");
}

// Runs independent per-lambda jobs concurrently, results in lambda order.
template <typename Fn>
auto fan_out(const std::vector<double>& lambdas, Fn fn) {
    using R = decltype(fn(0.0));
    std::vector<std::future<R>> jobs;
    jobs.reserve(lambdas.size());
    for (double lam : lambdas) jobs.push_back(std::async(std::launch::async, fn, lam));
    std::vector<R> out;
    out.reserve(lambdas.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

class OutputDir {
public:
    explicit OutputDir(const std::string& dir) : dir_(dir) {
        if (dir_.empty()) return;
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw InputError("cannot create output directory " + dir_ + ": " + ec.message(), 0);
    }
    bool enabled() const { return !dir_.empty(); }

    std::string write(const std::string& name, const std::string& contents) {
        const std::string path = (std::filesystem::path(dir_) / name).string();
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw InputError("cannot open " + path + " for writing", 0);
        f << contents;
        if (!f) throw InputError("failed writing " + path, 0);
        written_.push_back(name);
        return path;
    }

    void write_manifest(const Params& p, const std::vector<std::string>& inputs) {
        if (!enabled()) return;
        nlohmann::ordered_json m;
        m["tool"] = "pa_amm";
        m["version"] = kToolVersion;
        m["params"] = to_json(p);
        m["inputs"] = inputs;
        std::vector<std::string> outputs = written_;
        outputs.push_back("manifest.json");
        m["outputs"] = outputs;
        write("manifest.json", m.dump(2) + "\n");
    }

private:
    std::string dir_;
    std::vector<std::string> written_;
};

inline nlohmann::ordered_json path_summary_json(double lambda, const Params& p, const PathSummary& s) {
    nlohmann::ordered_json j;
    const double elapsed = static_cast<double>(s.blocks) * p.dt;
    j["lambda"] = lambda;
    j["blocks"] = s.blocks;
    j["cumulative_lvr"] = s.cumulative_lvr;
    j["cumulative_norm_lvr"] = s.cumulative_norm_lvr;
    j["initial_log_liquidity"] = s.initial_log_liquidity;
    j["final_log_liquidity"] = s.final_log_liquidity;
    j["gap_mean"] = s.gap_mean;
    j["gap_variance"] = s.gap_variance;
    j["gap_second_moment"] = s.gap_second_moment;
    j["predicted_gap_second_moment"] = predicted_gap_second_moment(lambda, p.sigma, p.dt);
    j["norm_lvr_rate"] = elapsed > 0.0 ? s.cumulative_norm_lvr / elapsed : 0.0;
    j["predicted_norm_lvr_rate"] = predicted_norm_lvr_rate(lambda, p.theta, p.sigma);
    j["liquidity_growth_rate"] = elapsed > 0.0 ? (s.final_log_liquidity - s.initial_log_liquidity) / elapsed : 0.0;
    j["predicted_liquidity_growth_rate"] = predicted_liquidity_growth_rate(lambda, p.theta, p.sigma);
    j["mean_tracking_error"] = s.mean_tracking_error;
    return j;
}

inline int write_paths(const Params& p, const std::vector<double>& lambdas,
                       const std::vector<std::vector<BlockRecord>>& paths, const std::vector<double>& initial_ell,
                       const std::vector<std::string>& inputs, std::ostream& out) {
    nlohmann::ordered_json summary;
    summary["command"] = p.command;
    summary["theta"] = p.theta;
    summary["results"] = nlohmann::ordered_json::array();
    std::ostringstream csv;
    write_block_csv_header(csv);
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        write_block_csv_rows(csv, lambdas[k], paths[k]);
        summary["results"].push_back(path_summary_json(lambdas[k], p, summarize(paths[k], initial_ell[k])));
    }
    OutputDir dir(p.out);
    const std::string text = summary.dump(2) + "\n";
    if (dir.enabled()) {
        dir.write("blocks.csv", csv.str());
        dir.write("summary.json", text);
        dir.write_manifest(p, inputs);
    }
    out << (p.format == "csv" ? csv.str() : text);
    return kOk;
}

inline int cmd_simulate(const Params& p, std::ostream& out) {
    check_common(p);
    const SimConfig cfg = sim_config(p);
    const auto lambdas = parse_lambda_list(p.lambdas);
    if (!(p.initial_price > 0.0) || !(p.initial_x > 0.0)) throw UsageError("--p0 and --x0 must be > 0");
    std::vector<double> initial_ell;
    for (double lam : lambdas) {
        const PoolState pool = seed_pool(p.theta, lam, std::log(p.initial_price), p.initial_x, p.period);
        initial_ell.push_back(pool.curve->log_value(total_reserves(pool)));
    }
    const auto paths = fan_out(lambdas, [&](double lam) {
        return simulate_path(cfg, seed_pool(p.theta, lam, std::log(p.initial_price), p.initial_x, p.period));
    });
    return write_paths(p, lambdas, paths, initial_ell, {}, out);
}

inline int cmd_replay(const Params& p, std::ostream& out) {
    check_common(p);
    const auto lambdas = parse_lambda_list(p.lambdas);
    if (p.input.empty()) throw UsageError("replay requires --input FILE");
    std::ifstream f(p.input);
    if (!f) throw InputError("cannot open price file " + p.input, 0);
    std::vector<PriceObservation> prices;
    try {
        prices = read_price_series(f);
    } catch (const InputError& e) {
        throw InputError(p.input + ": " + e.what(), e.line());
    }
    const double log_p0 = std::log(prices.front().price);
    std::vector<double> initial_ell;
    for (double lam : lambdas) {
        const PoolState pool = seed_pool(p.theta, lam, log_p0, p.initial_x, p.period);
        initial_ell.push_back(pool.curve->log_value(total_reserves(pool)));
    }
    const auto paths = fan_out(lambdas, [&](double lam) {
        return replay_historical(prices, seed_pool(p.theta, lam, log_p0, p.initial_x, p.period));
    });
    return write_paths(p, lambdas, paths, initial_ell, {p.input}, out);
}

inline nlohmann::ordered_json moments_json(double lambda, const Params& p, const MomentEstimate& m) {
    nlohmann::ordered_json j;
    const double pred = predicted_gap_second_moment(lambda, p.sigma, p.dt);
    j["lambda"] = lambda;
    j["theta"] = p.theta;
    j["n_samples"] = m.n_samples;
    j["mean_gap"] = m.mean_gap;
    j["mean_gap_std_error"] = m.mean_gap_std_error;
    j["second_moment_gap"] = m.second_moment_gap;
    j["std_error"] = m.std_error;
    j["variance_gap"] = m.variance();
    j["predicted_second_moment"] = pred;
    j["ratio"] = pred > 0.0 ? m.second_moment_gap / pred : 0.0;
    j["ratio_std_error"] = pred > 0.0 ? m.std_error / pred : 0.0;
    return j;
}

inline int cmd_moments(const Params& p, std::ostream& out) {
    check_common(p);
    const SimConfig cfg = sim_config(p);
    const auto lambdas = parse_lambda_list(p.lambdas);
    const auto est = fan_out(lambdas, [&](double lam) { return stationary_moments(lam, p.theta, cfg); });
    nlohmann::ordered_json j;
    j["command"] = "moments";
    j["results"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < lambdas.size(); ++k) j["results"].push_back(moments_json(lambdas[k], p, est[k]));
    const std::string text = j.dump(2) + "\n";
    OutputDir dir(p.out);
    if (dir.enabled()) {
        dir.write("moments.json", text);
        dir.write_manifest(p, {});
    }
    out << text;
    return kOk;
}

inline constexpr const char* kFrontierHeader =
    "lambda,gap_second_moment,gap_second_moment_se,gap_second_moment_pred,lvr_rate,lvr_rate_se,lvr_rate_pred,"
    "liquidity_growth_rate,liquidity_growth_rate_se,liquidity_growth_rate_pred";

inline int cmd_frontier(const Params& p, std::ostream& out) {
    check_common(p);
    const SimConfig cfg = sim_config(p);
    const auto lambdas = parse_lambda_list(p.lambdas);
    struct Row {
        MomentEstimate moments;
        StationaryRates rates;
    };
    const auto rows = fan_out(lambdas, [&](double lam) {
        return Row{stationary_moments(lam, p.theta, cfg), stationary_rates(lam, p.theta, cfg)};
    });
    std::ostringstream csv;
    csv << kFrontierHeader << '\n';
    nlohmann::ordered_json j;
    j["command"] = "frontier";
    j["results"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double lam = lambdas[k];
        const Row& r = rows[k];
        const double gap_pred = predicted_gap_second_moment(lam, p.sigma, p.dt);
        const double lvr_pred = predicted_norm_lvr_rate(lam, p.theta, p.sigma);
        const double liq_pred = predicted_liquidity_growth_rate(lam, p.theta, p.sigma);
        csv << format_double(lam) << ',' << format_double(r.moments.second_moment_gap) << ','
            << format_double(r.moments.std_error) << ',' << format_double(gap_pred) << ','
            << format_double(r.rates.norm_lvr.estimate) << ',' << format_double(r.rates.norm_lvr.std_error) << ','
            << format_double(lvr_pred) << ',' << format_double(r.rates.liquidity_growth.estimate) << ','
            << format_double(r.rates.liquidity_growth.std_error) << ',' << format_double(liq_pred) << '\n';
        nlohmann::ordered_json row;
        row["lambda"] = lam;
        row["gap_second_moment"] = r.moments.second_moment_gap;
        row["gap_second_moment_se"] = r.moments.std_error;
        row["gap_second_moment_pred"] = gap_pred;
        row["lvr_rate"] = r.rates.norm_lvr.estimate;
        row["lvr_rate_se"] = r.rates.norm_lvr.std_error;
        row["lvr_rate_pred"] = lvr_pred;
        row["liquidity_growth_rate"] = r.rates.liquidity_growth.estimate;
        row["liquidity_growth_rate_se"] = r.rates.liquidity_growth.std_error;
        row["liquidity_growth_rate_pred"] = liq_pred;
        j["results"].push_back(row);
    }
    OutputDir dir(p.out);
    if (dir.enabled()) {
        dir.write("frontier.csv", csv.str());
        dir.write_manifest(p, {});
    }
    out << (p.format == "json" ? j.dump(2) + "\n" : csv.str());
    return kOk;
}

inline int cmd_optimal_lambda(const Params& p, std::ostream& out) {
    if (!(p.gamma >= 0.0)) throw UsageError("--gamma must be >= 0");
    ControlParams cp{p.gamma, p.rho, p.dt, p.mu, p.sigma, p.lambda_lower};
    try {
        validate(cp);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const RiccatiSolution sol = solve_riccati(cp);
    nlohmann::ordered_json j;
    j["command"] = "optimal-lambda";
    j["gamma"] = p.gamma;
    j["lambda_star"] = lambda_star(p.gamma);
    j["beta"] = sol.beta;
    j["v2"] = sol.v2;
    j["v1"] = sol.v1;
    j["v0"] = sol.v0;
    j["feedback_constant"] = feedback_constant(sol, p.gamma);
    j["feedback_constant_clipped"] = clip(feedback_constant(sol, p.gamma), p.lambda_lower, 1.0);
    j["feedback_state_coefficient"] =
        sol.beta * (2.0 * sol.v2 * cp.drift() + sol.v1) / (2.0 * (1.0 + sol.beta * sol.v2));
    j["lambda_lower"] = p.lambda_lower;

    OutputDir dir(p.out);
    if (p.oracle) {
        const GridSpec states = default_state_grid(cp);
        const GridSpec actions = default_action_grid(cp);
        const OracleResult res = value_iteration_oracle(cp, states, actions);
        const double band = 0.1 * static_cast<double>(states.count);
        double max_dev = 0.0;
        std::ostringstream table;
        table << "state,value,oracle_lambda,feedback_lambda\n";
        for (std::size_t i = 0; i < res.states.size(); ++i) {
            const double fb = feedback_lambda(res.states[i], sol, cp);
            if (static_cast<double>(i) >= band && static_cast<double>(i) < static_cast<double>(states.count) - band) {
                max_dev = std::max(max_dev, std::abs(res.lambda_at(i) - fb));
            }
            table << format_double(res.states[i]) << ',' << format_double(res.value[i]) << ','
                  << format_double(res.lambda_at(i)) << ',' << format_double(fb) << '\n';
        }
        const auto fit = fit_quadratic(res.states, res.value, 0.5 * states.hi);
        nlohmann::ordered_json o;
        o["state_points"] = states.count;
        o["state_half_width"] = states.hi;
        o["action_points"] = actions.count;
        o["action_step"] = actions.step();
        o["iterations"] = res.iterations;
        o["final_change"] = res.final_change;
        o["fitted_v2"] = fit[0];
        o["v2_relative_error"] = sol.v2 != 0.0 ? std::abs(fit[0] - sol.v2) / sol.v2 : std::abs(fit[0]);
        o["max_policy_deviation"] = max_dev;
        if (dir.enabled()) {
            dir.write("oracle_policy.csv", table.str());
            o["policy_table"] = "oracle_policy.csv";
        }
        j["oracle"] = o;
    }
    const std::string text = j.dump(2) + "\n";
    if (dir.enabled()) {
        dir.write("optimal_lambda.json", text);
        dir.write_manifest(p, {});
    }
    out << text;
    return kOk;
}

inline int dispatch(const Params& p, std::ostream& out) {
    if (p.command == "simulate") return cmd_simulate(p, out);
    if (p.command == "moments") return cmd_moments(p, out);
    if (p.command == "frontier") return cmd_frontier(p, out);
    if (p.command == "optimal-lambda") return cmd_optimal_lambda(p, out);
    if (p.command == "replay") return cmd_replay(p, out);
    throw UsageError("unknown command `" + p.command + "`");
}

inline void add_common(CLI::App& sub, Params& p, const std::string& default_format) {
    p.format = default_format;
    sub.add_option("--theta", p.theta, "Weight of the risky asset in (0, 1)")->capture_default_str();
    sub.add_option("--lambda", p.lambdas, "Activeness: scalar or comma list in (0, 1]")->capture_default_str();
    sub.add_option("--gamma", p.gamma, "LVR weight gamma >= 0")->capture_default_str();
    sub.add_option("--mu", p.mu, "Annualized log-price drift")->capture_default_str();
    sub.add_option("--sigma", p.sigma, "Annualized log-price volatility")->capture_default_str();
    sub.add_option("--dt", p.dt, "Block time in years (default: 12 s)")->capture_default_str();
    sub.add_option("--rho", p.rho, "Annual discount rate")->capture_default_str();
    sub.add_option("--blocks", p.blocks, "Number of simulated blocks (including burn-in)")->capture_default_str();
    sub.add_option("--burn-in", p.burn_in, "Blocks discarded before estimation")->capture_default_str();
    sub.add_option("--seed", p.seed, "RNG seed")->capture_default_str();
    sub.add_option("--period", p.period, "Blocks between eligible rebalances")->capture_default_str();
    sub.add_option("--lambda-lower", p.lambda_lower, "Lower bound on activeness")->capture_default_str();
    sub.add_option("--x0", p.initial_x, "Initial risky-asset reserves")->capture_default_str();
    sub.add_option("--p0", p.initial_price, "Initial price (simulate)")->capture_default_str();
    sub.add_option("--out", p.out, "Output directory");
    sub.add_option("--format", p.format, "Stdout format: csv or json")->capture_default_str();
}

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Partially active AMM simulator and optimal-activeness solver", "pa_amm"};
    app.set_version_flag("--version", kToolVersion);
    std::string manifest_path;
    std::string manifest_out;
    app.add_option("--manifest", manifest_path, "Re-run the command recorded in a manifest.json");
    app.add_option("--manifest-out", manifest_out, "Output directory override when re-running a manifest");
    app.require_subcommand(0, 1);

    Params sim, mom, fro, opt, rep;
    add_common(*app.add_subcommand("simulate", "Simulate GBM paths for each lambda"), sim, "json");
    add_common(*app.add_subcommand("moments", "Stationary gap moments vs closed form"), mom, "json");
    add_common(*app.add_subcommand("frontier", "LVR rate vs gap second moment per lambda"), fro, "csv");
    auto* opt_cmd = app.add_subcommand("optimal-lambda", "Riccati solution and optimal activeness");
    add_common(*opt_cmd, opt, "json");
    opt_cmd->add_flag("--oracle", opt.oracle, "Also solve the Bellman equation on a grid");
    auto* rep_cmd = app.add_subcommand("replay", "Replay a historical price file");
    add_common(*rep_cmd, rep, "json");
    rep_cmd->add_option("--input", rep.input, "Price file: `timestamp,price` per line")->required();

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& e) {
            return app.exit(e, out, err);
        } catch (const CLI::ParseError& e) {
            app.exit(e, out, err);
            return kUsage;
        }

        Params chosen;
        if (!manifest_path.empty()) {
            std::ifstream f(manifest_path);
            if (!f) throw InputError("cannot open manifest " + manifest_path, 0);
            nlohmann::json m;
            try {
                m = nlohmann::json::parse(f);
                chosen = params_from_json(m.at("params"));
            } catch (const nlohmann::json::exception& e) {
                throw InputError("malformed manifest " + manifest_path + ": " + e.what(), 0);
            }
            if (!manifest_out.empty()) chosen.out = manifest_out;
        } else {
            const auto subs = app.get_subcommands();
            if (subs.empty()) {
                err << app.help();
                return kUsage;
            }
            const std::string name = subs.front()->get_name();
            if (name == "simulate") chosen = sim;
            if (name == "moments") chosen = mom;
            if (name == "frontier") chosen = fro;
            if (name == "optimal-lambda") chosen = opt;
            if (name == "replay") chosen = rep;
            chosen.command = name;
        }
        return dispatch(chosen, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputData;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace pa_amm::cli
