// Price-series input and per-block output.
//
// Input: one `timestamp,price` record per line. Timestamps are integer epoch
// seconds or ISO-8601 (YYYY-MM-DD[THH:MM[:SS[.fff]]][Z|+HH:MM|-HH:MM]); a
// non-numeric price on the first non-empty line marks it as a header.
//
// Block CSV columns, in order:
//   lambda,block,log_true_price,top_gap,bot_gap,log_liquidity,lvr,norm_lvr,
//   cumulative_lvr,risky_weight,tracking_error
#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynamics.hpp"

namespace pa_amm {

class InputError : public std::runtime_error {
public:
    InputError(const std::string& msg, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// 17 significant digits: round-trips every double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace detail

/// Seconds since the Unix epoch for an integer or ISO-8601 timestamp.
inline std::optional<double> parse_timestamp(std::string_view raw) {
    using namespace std::chrono;
    const std::string_view s = detail::trim(raw);
    if (s.empty()) return std::nullopt;
    if (auto v = detail::parse_int(s)) return static_cast<double>(*v);
    if (auto v = detail::parse_number(s); v && s.find('-', 1) == std::string_view::npos) return *v;

    auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        if (pos + len > s.size()) return std::nullopt;
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    const auto y = digits(0, 4);
    const auto mo = digits(5, 2);
    const auto d = digits(8, 2);
    if (!y || !mo || !d || s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    double secs = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400.0;

    std::size_t pos = 10;
    if (pos == s.size()) return secs;
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    const auto hh = digits(pos, 2);
    const auto mm = digits(pos + 3, 2);
    if (!hh || !mm || s.size() < pos + 5 || s[pos + 2] != ':' || *hh > 23 || *mm > 59) return std::nullopt;
    secs += *hh * 3600.0 + *mm * 60.0;
    pos += 5;
    if (pos < s.size() && s[pos] == ':') {
        const auto ss = digits(pos + 1, 2);
        if (!ss || *ss > 60) return std::nullopt;
        secs += *ss;
        pos += 3;
        if (pos < s.size() && s[pos] == '.') {
            std::size_t end = pos + 1;
            while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
            if (end == pos + 1) return std::nullopt;
            if (auto frac = detail::parse_number(std::string("0") + std::string(s.substr(pos, end - pos)))) secs += *frac;
            pos = end;
        }
    }
    if (pos == s.size()) return secs;
    if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
    if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
        const auto oh = digits(pos + 1, 2);
        const auto om = digits(pos + 4, 2);
        if (!oh || !om) return std::nullopt;
        const double offset = *oh * 3600.0 + *om * 60.0;
        return s[pos] == '+' ? secs - offset : secs + offset;
    }
    return std::nullopt;
}

/// Reads the historical price file. Throws InputError naming the line.
inline std::vector<PriceObservation> read_price_series(std::istream& in) {
    std::vector<PriceObservation> out;
    std::string line;
    std::size_t lineno = 0;
    bool seen_first = false;
    std::optional<double> last_time;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view view = detail::trim(line);
        if (view.empty()) continue;
        const auto comma = view.find(',');
        if (comma == std::string_view::npos) throw InputError("expected `timestamp,price`", lineno);
        const std::string_view ts = detail::trim(view.substr(0, comma));
        const std::string_view px = detail::trim(view.substr(comma + 1));
        const auto price = detail::parse_number(px);
        if (!seen_first) {
            seen_first = true;
            if (!price && !parse_timestamp(ts)) continue;  // header
        }
        if (!price) throw InputError("price `" + std::string(px) + "` is not a number", lineno);
        if (!(*price > 0.0) || !std::isfinite(*price)) throw InputError("price must be positive and finite", lineno);
        const auto t = parse_timestamp(ts);
        if (!t) throw InputError("unrecognised timestamp `" + std::string(ts) + "`", lineno);
        if (last_time && !(*t > *last_time)) throw InputError("timestamps must be strictly increasing", lineno);
        last_time = t;
        out.push_back({std::string(ts), *price});
    }
    if (out.empty()) throw InputError("price file contains no observations", 0);
    return out;
}

inline constexpr const char* kBlockCsvHeader =
    "lambda,block,log_true_price,top_gap,bot_gap,log_liquidity,lvr,norm_lvr,cumulative_lvr,risky_weight,tracking_error";

inline void write_block_csv_header(std::ostream& out) { out << kBlockCsvHeader << '\n'; }

inline void write_block_csv_rows(std::ostream& out, double lambda, const std::vector<BlockRecord>& records) {
    double cumulative = 0.0;
    for (const auto& r : records) {
        cumulative += r.lvr;
        out << format_double(lambda) << ',' << r.block << ',' << format_double(r.log_true_price) << ','
            << format_double(r.top_gap) << ',' << format_double(r.bot_gap) << ',' << format_double(r.log_liquidity)
            << ',' << format_double(r.lvr) << ',' << format_double(r.norm_lvr) << ',' << format_double(cumulative)
            << ',' << format_double(r.risky_weight) << ',' << format_double(r.tracking_error) << '\n';
    }
}

struct PathSummary {
    double cumulative_lvr{0.0};
    double cumulative_norm_lvr{0.0};
    double initial_log_liquidity{0.0};
    double final_log_liquidity{0.0};
    double gap_second_moment{0.0};
    double gap_mean{0.0};
    double gap_variance{0.0};
    double mean_tracking_error{0.0};
    std::size_t blocks{0};
};

inline PathSummary summarize(const std::vector<BlockRecord>& records, double initial_log_liquidity) {
    PathSummary s;
    s.blocks = records.size();
    s.initial_log_liquidity = initial_log_liquidity;
    s.final_log_liquidity = initial_log_liquidity;
    if (records.empty()) return s;
    double g1 = 0.0, g2 = 0.0, te = 0.0;
    for (const auto& r : records) {
        s.cumulative_lvr += r.lvr;
        s.cumulative_norm_lvr += r.norm_lvr;
        g1 += r.top_gap;
        g2 += r.top_gap * r.top_gap;
        te += r.tracking_error;
    }
    const auto n = static_cast<double>(records.size());
    s.gap_mean = g1 / n;
    s.gap_second_moment = g2 / n;
    s.gap_variance = s.gap_second_moment - s.gap_mean * s.gap_mean;
    s.mean_tracking_error = te / n;
    s.final_log_liquidity = records.back().log_liquidity;
    return s;
}

}  // namespace pa_amm
