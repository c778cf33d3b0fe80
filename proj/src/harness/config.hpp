#pragma once

#include "samdp/training.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace samdp::harness {

/// A usage or configuration problem; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MethodKind { kVanilla, kValtKl, kValtAlpha, kValtEps, kAtla };

const char* to_string(MethodKind k);
MethodKind method_kind_from_string(const std::string& s, const std::string& where);

struct MethodConfig {
    std::string name;
    MethodKind kind = MethodKind::kVanilla;
    TrainConfig<double> train;
    int outer_rounds = 10;   // atla
    double tol = 1e-10;      // vanilla
};

struct EnvironmentConfig {
    std::string generator = "fog_bridges";  // fog_bridges | random | file
    double fog_level = 1.0;
    Index n_states = 6;
    Index n_actions = 3;
    Index neighborhood_size = 3;
    double gamma = 0.9;
    std::string path;  // generator = file

    /// Environment id string used in result rows; includes the seed for the
    /// seeded generator.
    std::string id(std::uint64_t seed) const;
    TabularSaMdp<double> build(std::uint64_t seed) const;
};

struct SweepAxis {
    std::string parameter;  // alpha_attk | kappa_worst | alpha_ent | fog_level
    std::vector<double> values;
};

struct ExperimentConfig {
    EnvironmentConfig environment;
    std::vector<MethodConfig> methods;
    std::vector<std::string> attacks;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "results";
    std::vector<SweepAxis> sweep_axes;

    void check() const;
};

/// Parses the flat sectioned text format; every error message carries the
/// file name and line number of the offending entry.
ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config_text(const std::string& text, const std::string& name);

}  // namespace samdp::harness
