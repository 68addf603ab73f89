#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "proxflow/errors.hpp"
#include "proxflow/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw proxflow::ConfigError(proxflow::ConfigCode::IoError, "cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void echo_config(const proxflow::run::RunConfig& cfg) {
    std::cout << "scenario = " << cfg.scenario << "\n"
              << "N = " << cfg.n_particles << "\n"
              << "K = " << cfg.total_steps << "\n"
              << "stride = " << cfg.stride << "\n"
              << "seed = " << cfg.seed << "\n"
              << "h = " << cfg.prox.h << "\n"
              << "beta = " << cfg.prox.beta << "\n"
              << "epsilon = " << cfg.prox.epsilon << "\n"
              << "delta = " << cfg.prox.delta << "\n"
              << "L = " << cfg.prox.max_iter << "\n"
              << "moment_estimator = "
              << (cfg.moment_mode == proxflow::MomentMode::Empirical ? "empirical"
                                                                     : "mass_weighted")
              << "\n";
    for (const auto& [key, value] : cfg.params) std::cout << key << " = " << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"proxflow: joint PDF propagation on probability-weighted point clouds"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;

    CLI::App* cmd_run = app.add_subcommand("run", "execute a scenario from a config file");
    cmd_run->add_option("--config", config_path, "path to a key = value config file")->required();
    cmd_run->add_option("--seed", seed, "override the run seed")->each([&](const std::string&) {
        seed_set = true;
    });
    cmd_run->add_option("--out", out_dir, "output directory (default runs/<scenario>)");

    CLI::App* cmd_validate = app.add_subcommand("validate", "parse and validate a config file");
    cmd_validate->add_option("--config", config_path, "path to a key = value config file")
        ->required();

    CLI::App* cmd_list = app.add_subcommand("list-scenarios", "print the scenario registry");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_list->parsed()) {
            for (const auto& name : proxflow::run::scenario_names())
                std::cout << name << "  -  " << proxflow::run::scenario_description(name) << "\n";
            return 0;
        }

        proxflow::run::RunConfig cfg = proxflow::run::validate_config(read_file(config_path));
        if (cmd_validate->parsed()) {
            echo_config(cfg);
            return 0;
        }

        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (cfg.out_dir.empty()) cfg.out_dir = "runs/" + cfg.scenario;

        proxflow::run::run_scenario(cfg);
        std::cout << "run complete: " << cfg.out_dir << "\n";
        return 0;
    } catch (const proxflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const proxflow::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
