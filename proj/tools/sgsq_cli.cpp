// Experiment runner for the spectral simulation laboratory.
//
// Usage:
//   sgsq --config cfg.json --out results/run1 [--subcommand NAME]
//        [--seed U64] [--threads K]
//
// The config is a flat-key JSON object; --subcommand and --seed override
// the config fields of the same name. Exit codes: 0 success, 2 config
// error, 3 numerical/regime error, 4 statistical-test failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sgsq/cli_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sgsq: spectral sine-Gordon simulation laboratory"};
    std::string config_path;
    std::string out_dir;
    std::string subcommand;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    app.add_option("--config", config_path, "flat-key JSON experiment config")->required();
    app.add_option("--out", out_dir, "output directory (append-only)")->required();
    app.add_option("--subcommand", subcommand, "experiment name (overrides config)");
    app.add_option("--seed", seed, "master seed (overrides config)")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--threads", threads, "worker threads for ensemble loops");
    CLI11_PARSE(app, argc, argv);

    try {
        std::ifstream in(config_path);
        if (!in) throw sgsq::config_error("cannot open config file: " + config_path);
        sgsq::json cfg;
        try {
            cfg = sgsq::json::parse(in);
        } catch (const std::exception& e) {
            throw sgsq::config_error(std::string("config parse error: ") + e.what());
        }
        sgsq::run_experiment(cfg, out_dir,
                             seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                             subcommand.empty() ? std::nullopt
                                                : std::optional<std::string>(subcommand),
                             threads);
    } catch (const sgsq::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const sgsq::check_failed& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
