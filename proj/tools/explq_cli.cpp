#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "explq/commands.hpp"
#include "explq/config.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw explq::ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entropy-regularized discrete-time LQ control and mean-variance "
                 "asset-liability management toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    long long episodes = 0;
    bool episodes_given = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Path to a key = value configuration file");
        sub->add_option("--out", out_dir, "Output directory (overrides config and EXPLQ_OUT)");
        sub->add_option("--seed", seed, "Seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--episodes", episodes, "Episode-count override")
            ->each([&](const std::string&) { episodes_given = true; });
    };

    CLI::App* solve = app.add_subcommand("solve", "Exact per-period solution (riccati.csv)");
    CLI::App* iterate =
        app.add_subcommand("iterate", "Policy-improvement sweeps (improvement.csv)");
    CLI::App* train =
        app.add_subcommand("train", "Episode training loop (training_log.csv, summary.csv)");
    CLI::App* evaluate =
        app.add_subcommand("evaluate", "Monte Carlo policy evaluation (summary.csv)");
    for (CLI::App* sub : {solve, iterate, train, evaluate}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        explq::RunConfig cfg =
            config_path.empty() ? explq::RunConfig{} : explq::parse_config(read_file(config_path));
        if (seed_given) cfg.train.seed = seed;
        if (episodes_given) {
            if (episodes < 1) throw explq::ConfigError("--episodes must be positive");
            cfg.train.episodes = static_cast<int>(episodes);
            cfg.eval_episodes = static_cast<std::size_t>(episodes);
        }
        const std::string command = app.get_subcommands().front()->get_name();
        return explq::run_command(command, cfg, explq::resolve_output_dir(out_dir, cfg));
    } catch (const explq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}
