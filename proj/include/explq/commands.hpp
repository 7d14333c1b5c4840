#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "explq/closed_form.hpp"
#include "explq/config.hpp"
#include "explq/errors.hpp"
#include "explq/market.hpp"
#include "explq/mv_alm.hpp"
#include "explq/policy_iter.hpp"
#include "explq/rl.hpp"

namespace explq {

/// Round-trippable decimal rendering (17 significant digits).
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_csv(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);  // '\n' endings everywhere
    if (!out) throw ConfigError("cannot open output file " + (dir / name).string());
    return out;
}

inline void write_report_csv(std::ofstream& out, const EvalReport& r) {
    out << "label,episodes,sample_mean,sample_variance,sharpe,constraint_gap\n";
    out << r.label << ',' << r.episodes << ',' << fmt17(r.sample_mean) << ','
        << fmt17(r.sample_variance) << ',' << fmt17(r.sharpe) << ',' << fmt17(r.constraint_gap)
        << '\n';
}

/// Fixed probe grid for iteration gap measurements.
inline const std::vector<StateVec>& probe_states() {
    static const std::vector<StateVec> states = {
        {1.0, 0.1}, {0.5, 0.5}, {-1.0, 0.2}, {2.0, 1.0}, {-3.0, 0.8}, {0.0, 0.0},
    };
    return states;
}

}  // namespace detail

/// solve: exact per-period solution of the configured market, one CSV row
/// per decision period.
inline void run_solve(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const DiscretizedMarket dm = discretize(cfg.market, cfg.lambda);
    const ClosedFormSolution cf = closed_form_alm(dm.params, dm.periods);

    std::ofstream out = detail::open_csv(out_dir, "riccati.csv");
    out << "t,p11,p12,p22,g,gain_x,gain_y,value_const\n";
    for (int t = 0; t < cf.horizon; ++t) {
        const std::size_t u = static_cast<std::size_t>(t);
        out << t << ',' << fmt17(cf.p11[u]) << ',' << fmt17(cf.p12[u]) << ',' << fmt17(cf.p22[u])
            << ',' << fmt17(cf.g[u]) << ',' << fmt17(cf.gain_x[u]) << ',' << fmt17(cf.gain_y[u])
            << ',' << fmt17(cf.value_const[u]) << '\n';
    }
    std::cout << "solve: wrote riccati.csv (" << cf.horizon << " periods), P0 = ["
              << fmt17(cf.p11[0]) << ", " << fmt17(cf.p12[0]) << ", " << fmt17(cf.p22[0]) << "]\n";
}

/// iterate: policy-improvement sweeps from the configured seed policy;
/// per sweep, the worst distance to the exact value over a fixed probe
/// grid and the value at (x0, l0).
inline void run_iterate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const DiscretizedMarket dm = discretize(cfg.market, cfg.lambda);
    const ClosedFormSolution cf = closed_form_alm(dm.params, dm.periods);
    const PolicyValue star = optimal_policy_value(cf);

    const int steps = cfg.iterate_steps ? *cfg.iterate_steps : dm.periods;
    PolicyValue current = evaluate_seed_policy(dm.params, cfg.seed_policy, dm.periods);

    const auto max_gap = [&](const PolicyValue& v) {
        double gap = 0.0;
        for (int t = 0; t <= dm.periods; ++t)
            for (const StateVec& s : detail::probe_states())
                gap = std::max(gap, std::abs(v.at(t, s.x, s.y) - star.at(t, s.x, s.y)));
        return gap;
    };

    std::ofstream out = detail::open_csv(out_dir, "improvement.csv");
    out << "j,max_gap,probe_value\n";
    out << 0 << ',' << fmt17(max_gap(current)) << ',' << fmt17(current.at(0, cfg.x0, cfg.l0))
        << '\n';
    for (int j = 1; j <= steps; ++j) {
        current = improve(dm.params, current).value;
        out << j << ',' << fmt17(max_gap(current)) << ',' << fmt17(current.at(0, cfg.x0, cfg.l0))
            << '\n';
    }
    std::cout << "iterate: wrote improvement.csv (" << steps << " sweeps), final gap = "
              << fmt17(max_gap(current)) << '\n';
}

/// train: the episode loop, full per-episode log plus a summary over the
/// final 4*batch episodes.
inline void run_train(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const DiscretizedMarket dm = discretize(cfg.market, cfg.lambda);
    const TrainConfig tc = cfg.train_config();
    const TrainResult res = train(dm.params, dm.periods, tc);

    std::ofstream out = detail::open_csv(out_dir, "training_log.csv");
    out << "episode,terminal_wealth,terminal_liability,gamma,bellman_sq_error,"
           "theta1,theta2,theta3,theta4,theta5\n";
    for (const TrainLogRow& r : res.log) {
        out << r.episode << ',' << fmt17(r.terminal_wealth) << ',' << fmt17(r.terminal_liability)
            << ',' << fmt17(r.gamma) << ',' << fmt17(r.bellman_sq_error);
        for (double th : r.theta) out << ',' << fmt17(th);
        out << '\n';
    }

    const std::size_t tail = std::min(res.log.size(), static_cast<std::size_t>(tc.batch) * 4);
    std::vector<double> surplus;
    surplus.reserve(tail);
    for (std::size_t i = res.log.size() - tail; i < res.log.size(); ++i)
        surplus.push_back(res.log[i].terminal_wealth - res.log[i].terminal_liability);
    const EvalReport rep = summarize_surplus(surplus, cfg.d, cfg.excess(), cfg.label);
    std::ofstream sum = detail::open_csv(out_dir, "summary.csv");
    detail::write_report_csv(sum, rep);

    std::cout << "train: " << res.log.size() << " episodes ("
              << (tc.grad_mode == GradMode::raw ? "raw" : "normalized")
              << " profile), final gamma = " << fmt17(res.theta.gamma)
              << ", tail mean surplus = " << fmt17(rep.sample_mean) << '\n';
}

/// evaluate: Monte Carlo report for the exact optimal policy, with the
/// multiplier either fixed in the config or calibrated so the expected
/// surplus hits the target.
inline void run_evaluate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const DiscretizedMarket dm = discretize(cfg.market, cfg.lambda);
    const ClosedFormSolution cf = closed_form_alm(dm.params, dm.periods);
    const GaussianPolicy pol = to_policy(cf, cfg.lambda);

    MVProblem mv = cfg.mv(0.0);
    mv.gamma = cfg.gamma_fixed ? *cfg.gamma_fixed
                               : calibrate_gamma(dm.params, dm.periods, pol, mv);
    const EvalReport rep = evaluate_policy(dm.params, dm.periods, pol, mv, cfg.eval_episodes,
                                           cfg.train.seed, cfg.excess(), cfg.label);
    std::ofstream out = detail::open_csv(out_dir, "summary.csv");
    detail::write_report_csv(out, rep);

    std::cout << "evaluate: " << rep.episodes << " episodes, gamma = " << fmt17(mv.gamma)
              << ", mean = " << fmt17(rep.sample_mean) << ", variance = "
              << fmt17(rep.sample_variance) << ", sharpe = " << fmt17(rep.sharpe) << '\n';
}

/// Dispatch with the documented exit codes: 0 success, 1 configuration
/// error, 2 numerical failure.
inline int run_command(const std::string& command, const RunConfig& cfg,
                       const std::filesystem::path& out_dir) {
    try {
        if (command == "solve") run_solve(cfg, out_dir);
        else if (command == "iterate") run_iterate(cfg, out_dir);
        else if (command == "train") run_train(cfg, out_dir);
        else if (command == "evaluate") run_evaluate(cfg, out_dir);
        else throw ConfigError("unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

/// Output directory resolution: --out flag, then config key, then the
/// EXPLQ_OUT environment variable, then the working directory.
inline std::filesystem::path resolve_output_dir(const std::string& flag_value,
                                                const RunConfig& cfg) {
    if (!flag_value.empty()) return flag_value;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv("EXPLQ_OUT"); env && *env) return env;
    return ".";
}

}  // namespace explq
