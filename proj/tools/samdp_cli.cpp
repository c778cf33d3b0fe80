#include "harness/config.hpp"
#include "harness/experiment.hpp"
#include "harness/verify.hpp"
#include "samdp/generators.hpp"
#include "samdp/model_io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const samdp::harness::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const samdp::harness::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular state-adversarial MDP laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string scale = "quick";
    bool force_grid = false;

    auto* train = app.add_subcommand("train", "Train every configured method and seed");
    train->add_option("--config", config_path, "experiment config file")->required();
    train->add_option("--out", out_override, "override the output directory");
    train->add_option("--jobs", jobs, "parallel (method, seed) tasks");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate trained policies under the attack suite");
    evaluate->add_option("--config", config_path, "experiment config file")->required();
    evaluate->add_option("--out", out_override, "override the output directory");
    evaluate->add_option("--jobs", jobs, "parallel (method, seed) tasks");

    auto* sweep = app.add_subcommand("sweep", "Train and evaluate across the configured grids");
    sweep->add_option("--config", config_path, "experiment config file")->required();
    sweep->add_option("--out", out_override, "override the output directory");
    sweep->add_option("--jobs", jobs, "parallel grid points");
    sweep->add_flag("--force-grid", force_grid, "allow grids beyond 10^4 points");

    auto* verify = app.add_subcommand("verify", "Run the full property battery");
    verify->add_option("--seed", seed, "battery seed");
    verify->add_option("--scale", scale, "quick or full")
        ->check(CLI::IsMember({"quick", "full"}));

    auto* gen = app.add_subcommand("gen", "Write a generated environment to a model file");
    std::string gen_kind = "fog_bridges";
    double fog_level = 1.0;
    samdp::Index n_states = 6, n_actions = 3, neighborhood = 3;
    double gamma = 0.9;
    std::string gen_out = "model.txt";
    gen->add_option("--generator", gen_kind, "fog_bridges or random")
        ->check(CLI::IsMember({"fog_bridges", "random"}));
    gen->add_option("--fog-level", fog_level, "fog level for fog_bridges");
    gen->add_option("--seed", seed, "seed for the random generator");
    gen->add_option("--n-states", n_states, "random generator state count");
    gen->add_option("--n-actions", n_actions, "random generator action count");
    gen->add_option("--neighborhood", neighborhood, "random generator neighborhood size");
    gen->add_option("--gamma", gamma, "discount factor");
    gen->add_option("--out", gen_out, "output model file");

    CLI11_PARSE(app, argc, argv);

    if (train->parsed() || evaluate->parsed() || sweep->parsed()) {
        return guarded([&] {
            auto cfg = samdp::harness::parse_experiment_config(config_path);
            if (!out_override.empty()) cfg.output_dir = out_override;
            if (train->parsed()) {
                samdp::harness::cli_train(cfg, jobs);
                std::cout << "trained " << cfg.methods.size() * cfg.seeds.size()
                          << " runs into " << cfg.output_dir << "\n";
            } else if (evaluate->parsed()) {
                const auto rows = samdp::harness::cli_evaluate(cfg, jobs);
                std::cout << samdp::harness::render_markdown_summary(cfg, rows);
                std::cout << "wrote " << cfg.output_dir << "/results.csv and summary.md\n";
            } else {
                samdp::harness::cli_sweep(cfg, jobs, force_grid);
                std::cout << "wrote " << cfg.output_dir << "/sweep_summary.csv and sweep_curve.svg\n";
            }
            return kExitOk;
        });
    }

    if (verify->parsed()) {
        return guarded([&] {
            const auto results = samdp::harness::run_verification(
                seed,
                scale == "quick" ? samdp::harness::Scale::kQuick : samdp::harness::Scale::kFull);
            std::cout << samdp::harness::render_verification_report(results);
            return samdp::harness::all_passed(results) ? kExitOk : kExitCheckFailure;
        });
    }

    if (gen->parsed()) {
        return guarded([&] {
            const auto mdp = gen_kind == "fog_bridges"
                                 ? samdp::generate_fog_bridges(fog_level)
                                 : samdp::generate_random(seed, n_states, n_actions, neighborhood,
                                                          gamma);
            samdp::save_model(gen_out, mdp);
            std::cout << "wrote " << gen_out << "\n";
            return kExitOk;
        });
    }
    return kExitUsage;
}
