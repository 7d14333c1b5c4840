#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "explq/closed_form.hpp"
#include "explq/commands.hpp"
#include "explq/config.hpp"

using namespace explq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("explq_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig monthly_config() {
    return parse_config(
        "dt = 0.083333333333333329\n"
        "horizon_years = 1\n"
        "lambda = 0.001\n"
        "d = 1.4\n"
        "seed = 7\n");
}

}  // namespace

TEST_CASE("solve writes the closed-form table deterministically", "[commands]") {
    const RunConfig cfg = monthly_config();
    const fs::path dir = fresh_dir("solve");
    run_solve(cfg, dir);
    const std::string first = slurp(dir / "riccati.csv");
    run_solve(cfg, dir);
    REQUIRE(slurp(dir / "riccati.csv") == first);

    const auto rows = parse_csv(first);
    REQUIRE(rows.at(0) ==
            std::vector<std::string>{"t", "p11", "p12", "p22", "g", "gain_x", "gain_y",
                                     "value_const"});
    REQUIRE(rows.size() == 13);  // header + 12 periods

    const DiscretizedMarket dm = discretize(cfg.market, cfg.lambda);
    const ClosedFormSolution cf = closed_form_alm(dm.params, dm.periods);
    REQUIRE(std::stod(rows.at(1).at(1)) == cf.p11[0]);  // 17-digit round trip
    REQUIRE(std::stod(rows.at(1).at(5)) == cf.gain_x[0]);
    REQUIRE(std::stod(rows.at(12).at(6)) == cf.gain_y[11]);
}

TEST_CASE("iterate produces a nonincreasing gap ending at the optimum", "[commands]") {
    const RunConfig cfg = monthly_config();
    const fs::path dir = fresh_dir("iterate");
    run_iterate(cfg, dir);
    const auto rows = parse_csv(slurp(dir / "improvement.csv"));
    REQUIRE(rows.at(0) == std::vector<std::string>{"j", "max_gap", "probe_value"});
    REQUIRE(rows.size() == 14);  // header + j = 0..12
    double prev = std::stod(rows.at(1).at(1));
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const double gap = std::stod(rows.at(i).at(1));
        REQUIRE(gap <= prev + 1e-12);
        prev = gap;
    }
    REQUIRE(prev <= 1e-9);
}

TEST_CASE("evaluate report is self-consistent and repeatable", "[commands]") {
    RunConfig cfg = monthly_config();
    cfg.eval_episodes = 20000;
    cfg.label = "check";
    const fs::path dir = fresh_dir("evaluate");
    run_evaluate(cfg, dir);
    const std::string first = slurp(dir / "summary.csv");
    run_evaluate(cfg, dir);
    REQUIRE(slurp(dir / "summary.csv") == first);

    const auto rows = parse_csv(first);
    REQUIRE(rows.at(0) ==
            std::vector<std::string>{"label", "episodes", "sample_mean", "sample_variance",
                                     "sharpe", "constraint_gap"});
    REQUIRE(rows.at(1).at(0) == "check");
    REQUIRE(rows.at(1).at(1) == "20000");
    const double mean = std::stod(rows.at(1).at(2));
    const double var = std::stod(rows.at(1).at(3));
    const double sharpe = std::stod(rows.at(1).at(4));
    REQUIRE(sharpe == Catch::Approx(sharpe_ratio(mean, var, cfg.excess())).epsilon(1e-15));
}

TEST_CASE("train writes the full log with the exact header", "[commands]") {
    RunConfig cfg = monthly_config();
    cfg.train.episodes = 100;
    cfg.train.batch = 10;
    cfg.train.grad_mode = GradMode::normalized;
    cfg.train.gamma_init = 2.8;
    cfg.train.theta_perturb = 0.1;
    const fs::path dir = fresh_dir("train");
    run_train(cfg, dir);
    const std::string first = slurp(dir / "training_log.csv");
    run_train(cfg, dir);
    REQUIRE(slurp(dir / "training_log.csv") == first);

    const auto rows = parse_csv(first);
    REQUIRE(rows.at(0) ==
            std::vector<std::string>{"episode", "terminal_wealth", "terminal_liability", "gamma",
                                     "bellman_sq_error", "theta1", "theta2", "theta3", "theta4",
                                     "theta5"});
    REQUIRE(rows.size() == 101);
    REQUIRE(rows.at(1).at(0) == "1");
    REQUIRE(rows.at(100).at(0) == "100");

    const auto summary = parse_csv(slurp(dir / "summary.csv"));
    REQUIRE(summary.at(1).at(1) == "40");  // final 4*batch episodes
}

TEST_CASE("exit codes distinguish config and numerical failures", "[commands]") {
    const fs::path dir = fresh_dir("codes");
    REQUIRE(run_command("solve", monthly_config(), dir) == 0);
    REQUIRE(run_command("frobnicate", monthly_config(), dir) == 1);

    RunConfig degenerate = monthly_config();
    degenerate.market.risky_vol_annual = 0.0;
    REQUIRE(run_command("solve", degenerate, dir) == 2);

    RunConfig bad_dt = monthly_config();
    bad_dt.market.dt = 0.083333333;
    REQUIRE(run_command("solve", bad_dt, dir) == 1);
}

TEST_CASE("output directory resolution order", "[commands]") {
    RunConfig cfg = monthly_config();
    cfg.output_dir = "";
    ::unsetenv("EXPLQ_OUT");
    REQUIRE(resolve_output_dir("", cfg) == fs::path("."));
    ::setenv("EXPLQ_OUT", "/tmp/explq_env_out", 1);
    REQUIRE(resolve_output_dir("", cfg) == fs::path("/tmp/explq_env_out"));
    cfg.output_dir = "cfg_dir";
    REQUIRE(resolve_output_dir("", cfg) == fs::path("cfg_dir"));
    REQUIRE(resolve_output_dir("flag_dir", cfg) == fs::path("flag_dir"));
    ::unsetenv("EXPLQ_OUT");
}
