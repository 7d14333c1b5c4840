#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "explq/errors.hpp"
#include "explq/market.hpp"
#include "explq/mv_alm.hpp"
#include "explq/policy_iter.hpp"
#include "explq/rl.hpp"

namespace explq {

/// Everything a run needs: market, target, training hyperparameters,
/// iteration seed, evaluation size, output location.
struct RunConfig {
    AnnualMarket market;

    double d = 1.4;
    double x0 = 1.0;
    double l0 = 0.1;
    std::optional<double> gamma_fixed;   // evaluate: multiplier; default calibrated
    std::optional<double> excess_base;   // sharpe base; default rf_annual - 1
    double lambda = 0.1;

    TrainConfig train;

    SeedPolicy seed_policy;
    std::optional<int> iterate_steps;    // default: one sweep per period

    std::size_t eval_episodes = 100000;

    std::string output_dir;              // empty: --out, then EXPLQ_OUT, then "."
    std::string label = "run";

    double excess() const { return excess_base ? *excess_base : market.rf_annual - 1.0; }

    MVProblem mv(double gamma) const { return MVProblem{d, gamma, x0, l0}; }

    /// TrainConfig with the shared fields filled in.
    TrainConfig train_config() const {
        TrainConfig tc = train;
        tc.d = d;
        tc.x0 = x0;
        tc.l0 = l0;
        tc.lambda = lambda;
        return tc;
    }
};

namespace detail {

inline double parse_real(std::string_view v, int line) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(std::string(v), &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": cannot parse number '" +
                          std::string(v) + "'");
    }
}

inline long long parse_int(std::string_view v, int line) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("line " + std::to_string(line) + ": cannot parse integer '" +
                          std::string(v) + "'");
    return x;
}

inline std::uint64_t parse_u64(std::string_view v, int line) {
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("line " + std::to_string(line) + ": cannot parse unsigned integer '" +
                          std::string(v) + "'");
    return x;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Line-oriented `key = value` configuration with `#` comments. Unknown
/// keys are collected and reported together; violations carry their line
/// number. Missing keys keep the documented defaults.
inline RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    std::array<std::optional<double>, 5> theta_manual;

    std::vector<std::string> unknown;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key{detail::trim(line.substr(0, eq))};
        const std::string_view val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");

        const auto real = [&] { return detail::parse_real(val, line_no); };
        const auto err = [&](const std::string& msg) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + msg);
        };

        if (key == "rf_annual") {
            cfg.market.rf_annual = real();
            if (!(cfg.market.rf_annual > 1.0)) err("rf_annual must exceed 1");
        } else if (key == "risky_return_annual") {
            cfg.market.risky_return_annual = real();
        } else if (key == "risky_vol_annual") {
            cfg.market.risky_vol_annual = real();
            if (cfg.market.risky_vol_annual < 0.0) err("risky_vol_annual must be nonnegative");
        } else if (key == "liability_growth_annual") {
            cfg.market.liability_growth_annual = real();
        } else if (key == "liability_vol_annual") {
            cfg.market.liability_vol_annual = real();
            if (cfg.market.liability_vol_annual < 0.0) err("liability_vol_annual must be nonnegative");
        } else if (key == "rho") {
            cfg.market.rho = real();
            if (!(std::abs(cfg.market.rho) <= 1.0)) err("|rho| must be <= 1");
        } else if (key == "dt") {
            cfg.market.dt = real();
            if (!(cfg.market.dt > 0.0)) err("dt must be positive");
        } else if (key == "horizon_years") {
            cfg.market.horizon_years = real();
            if (!(cfg.market.horizon_years > 0.0)) err("horizon_years must be positive");
        } else if (key == "d") {
            cfg.d = real();
        } else if (key == "x0") {
            cfg.x0 = real();
        } else if (key == "l0") {
            cfg.l0 = real();
        } else if (key == "gamma") {
            cfg.gamma_fixed = real();
        } else if (key == "excess_base") {
            cfg.excess_base = real();
        } else if (key == "lambda") {
            cfg.lambda = real();
            if (!(cfg.lambda > 0.0)) err("lambda must be positive");
        } else if (key == "eta") {
            cfg.train.eta = real();
            if (!(cfg.train.eta >= 0.0)) err("eta must be nonnegative");
        } else if (key == "eta_gamma") {
            cfg.train.eta_gamma = real();
            if (!(cfg.train.eta_gamma >= 0.0)) err("eta_gamma must be nonnegative");
        } else if (key == "eta_norm") {
            cfg.train.eta_norm = real();
            if (!(cfg.train.eta_norm > 0.0)) err("eta_norm must be positive");
        } else if (key == "episodes") {
            const long long n = detail::parse_int(val, line_no);
            if (n < 1) err("episodes must be positive");
            cfg.train.episodes = static_cast<int>(n);
        } else if (key == "batch") {
            const long long n = detail::parse_int(val, line_no);
            if (n < 1) err("batch must be positive");
            cfg.train.batch = static_cast<int>(n);
        } else if (key == "seed") {
            cfg.train.seed = detail::parse_u64(val, line_no);
        } else if (key == "grad_mode") {
            if (val == "raw") cfg.train.grad_mode = GradMode::raw;
            else if (val == "normalized") cfg.train.grad_mode = GradMode::normalized;
            else err("grad_mode must be 'raw' or 'normalized'");
        } else if (key == "theta_perturb") {
            cfg.train.theta_perturb = real();
            if (cfg.train.theta_perturb < 0.0 || cfg.train.theta_perturb >= 1.0)
                err("theta_perturb must lie in [0, 1)");
        } else if (key == "gamma_init") {
            cfg.train.gamma_init = real();
        } else if (key == "theta1") {
            theta_manual[0] = real();
        } else if (key == "theta2") {
            theta_manual[1] = real();
        } else if (key == "theta3") {
            theta_manual[2] = real();
        } else if (key == "theta4") {
            theta_manual[3] = real();
        } else if (key == "theta5") {
            theta_manual[4] = real();
        } else if (key == "seed_k1") {
            cfg.seed_policy.k[0] = real();
        } else if (key == "seed_k2") {
            cfg.seed_policy.k[1] = real();
        } else if (key == "seed_l_scale") {
            cfg.seed_policy.l_scale = real();
            if (!(cfg.seed_policy.l_scale > 0.0)) err("seed_l_scale must be positive");
        } else if (key == "seed_n_base") {
            cfg.seed_policy.n_base = real();
            if (!(cfg.seed_policy.n_base > 0.0)) err("seed_n_base must be positive");
        } else if (key == "iterate_steps") {
            const long long n = detail::parse_int(val, line_no);
            if (n < 0) err("iterate_steps must be nonnegative");
            cfg.iterate_steps = static_cast<int>(n);
        } else if (key == "eval_episodes") {
            const long long n = detail::parse_int(val, line_no);
            if (n < 2) err("eval_episodes must be at least 2");
            cfg.eval_episodes = static_cast<std::size_t>(n);
        } else if (key == "output_dir") {
            cfg.output_dir = std::string(val);
        } else if (key == "label") {
            cfg.label = std::string(val);
        } else {
            unknown.push_back(key + " (line " + std::to_string(line_no) + ")");
        }
    }
    if (!unknown.empty()) {
        std::string msg = "unknown configuration keys:";
        for (const std::string& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    const int given = static_cast<int>(theta_manual[0].has_value()) + theta_manual[1].has_value() +
                      theta_manual[2].has_value() + theta_manual[3].has_value() +
                      theta_manual[4].has_value();
    if (given == 5) {
        cfg.train.theta_manual = std::array<double, 5>{*theta_manual[0], *theta_manual[1],
                                                       *theta_manual[2], *theta_manual[3],
                                                       *theta_manual[4]};
    } else if (given != 0) {
        throw ConfigError("theta1..theta5 must be given all together or not at all");
    }
    return cfg;
}

}  // namespace explq
