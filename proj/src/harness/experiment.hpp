#pragma once

#include "harness/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace samdp::harness {

/// An artifact or filesystem problem; the CLI maps it to exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResultRow {
    std::string environment;
    std::string method;
    std::string attack;
    std::uint64_t seed = 0;
    double clean_j = 0;
    double attacked_j = 0;
    double worst_j = 0;  // min over the (method, seed) row group's attacks
    int rounds = 0;
    double wall_time_s = 0;  // written to the timing sidecar, never to the CSV
};

/// Frozen CSV column order. Wall time deliberately stays out so identical
/// configs and seeds produce byte-identical CSV files.
inline constexpr const char* kCsvHeader =
    "environment,method,attack,seed,clean_j,attacked_j,worst_j,rounds";

/// Trains one method on one seed's environment; deterministic.
TrainResult<double> run_method(const TabularSaMdp<double>& mdp, const MethodConfig& method);

/// Trains every (method, seed) pair and persists model, history, and a
/// config echo under out/<method>/seed_<seed>/.
void cli_train(const ExperimentConfig& cfg, int jobs = 1);

/// Loads trained artifacts and evaluates every (method, attack, seed)
/// triple; writes results.csv, a timing sidecar, and summary.md shaped
/// methods-by-attacks with the worst column last. Returns the rows,
/// aggregate rows included.
std::vector<ResultRow> cli_evaluate(const ExperimentConfig& cfg, int jobs = 1);

/// Cross-product parameter sweep: one train+evaluate per grid point under
/// out/sweep/<point>/, plus sweep_summary.csv and an SVG of worst-case
/// return against the (first) swept parameter. Refuses grids over 10^4
/// points unless forced.
void cli_sweep(const ExperimentConfig& cfg, int jobs = 1, bool force_grid = false);

std::string render_results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);
std::string render_markdown_summary(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);

}  // namespace samdp::harness
