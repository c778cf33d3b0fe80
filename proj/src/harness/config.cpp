#include "harness/config.hpp"

#include "samdp/attacks.hpp"
#include "samdp/generators.hpp"
#include "samdp/model_io.hpp"

#include <fstream>
#include <sstream>

namespace samdp::harness {

const char* to_string(MethodKind k) {
    switch (k) {
        case MethodKind::kVanilla: return "vanilla";
        case MethodKind::kValtKl: return "valt-kl";
        case MethodKind::kValtAlpha: return "valt-alpha";
        case MethodKind::kValtEps: return "valt-eps";
        case MethodKind::kAtla: return "atla";
    }
    return "?";
}

MethodKind method_kind_from_string(const std::string& s, const std::string& where) {
    if (s == "vanilla") return MethodKind::kVanilla;
    if (s == "valt-kl") return MethodKind::kValtKl;
    if (s == "valt-alpha") return MethodKind::kValtAlpha;
    if (s == "valt-eps") return MethodKind::kValtEps;
    if (s == "atla") return MethodKind::kAtla;
    throw ConfigError(where + ": unknown method kind '" + s + "'");
}

std::string EnvironmentConfig::id(std::uint64_t seed) const {
    if (generator == "random")
        return "random_s" + std::to_string(seed) + "_n" + std::to_string(n_states);
    if (generator == "file") return "file_" + path;
    std::ostringstream os;
    os << "fog_bridges_" << fog_level;
    return os.str();
}

TabularSaMdp<double> EnvironmentConfig::build(std::uint64_t seed) const {
    if (generator == "fog_bridges") return generate_fog_bridges(fog_level);
    if (generator == "random")
        return generate_random(seed, n_states, n_actions, neighborhood_size, gamma);
    if (generator == "file") return load_model(path);
    throw ConfigError("unknown environment generator '" + generator + "'");
}

void ExperimentConfig::check() const {
    if (methods.empty()) throw ConfigError("config declares no methods");
    if (attacks.empty()) throw ConfigError("config declares no attacks");
    if (seeds.empty()) throw ConfigError("config declares no seeds");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
            if (methods[i].name == methods[j].name)
                throw ConfigError("duplicate method name '" + methods[i].name + "'");
    for (const auto& a : attacks)
        if (!attack_registry<double>().count(a)) throw ConfigError("unknown attack '" + a + "'");
    for (const auto& m : methods) m.train.check();
    for (const auto& ax : sweep_axes) {
        if (ax.values.empty()) throw ConfigError("sweep axis '" + ax.parameter + "' has no values");
        if (ax.parameter != "alpha_attk" && ax.parameter != "kappa_worst" &&
            ax.parameter != "alpha_ent" && ax.parameter != "fog_level")
            throw ConfigError("unknown sweep parameter '" + ax.parameter + "'");
    }
}

namespace {

struct Line {
    int number = 0;
    std::string section;      // e.g. "method"
    std::string section_arg;  // e.g. the method name
    std::string key;
    std::vector<std::string> values;
};

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + v + "'");
    }
}

long parse_long(const std::string& v, const std::string& where) {
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected an integer, got '" + v + "'");
    }
}

Schedule<double> parse_schedule(const std::vector<std::string>& vals, const std::string& where) {
    if (vals.size() == 2 && vals[0] == "constant")
        return Schedule<double>::constant(parse_double(vals[1], where));
    if (vals.size() == 4 && vals[0] == "linear")
        return Schedule<double>::linear(parse_double(vals[1], where), parse_double(vals[2], where),
                                        static_cast<int>(parse_long(vals[3], where)));
    if (vals.size() == 4 && vals[0] == "geometric")
        return Schedule<double>::geometric(parse_double(vals[1], where),
                                           parse_double(vals[2], where),
                                           static_cast<int>(parse_long(vals[3], where)));
    throw ConfigError(where + ": schedule must be 'constant <v>', 'linear <s> <e> <rounds>' or "
                              "'geometric <s> <e> <rounds>'");
}

void apply_method_key(MethodConfig& m, const Line& ln, const std::string& where) {
    auto one = [&]() -> const std::string& {
        if (ln.values.size() != 1) throw ConfigError(where + ": key '" + ln.key + "' takes one value");
        return ln.values[0];
    };
    if (ln.key == "kind") {
        m.kind = method_kind_from_string(one(), where);
        switch (m.kind) {
            case MethodKind::kValtKl: m.train.solver = SolverKind::kKl; break;
            case MethodKind::kValtAlpha: m.train.solver = SolverKind::kAlpha; break;
            case MethodKind::kValtEps: m.train.solver = SolverKind::kEps; break;
            default: break;
        }
    } else if (ln.key == "alpha_ent") {
        m.train.params.alpha_ent = parse_double(one(), where);
    } else if (ln.key == "alpha_attk") {
        m.train.params.alpha_attk = parse_double(one(), where);
    } else if (ln.key == "alpha") {
        m.train.params.divergence = DivergenceSpecd::alpha_family(parse_double(one(), where));
    } else if (ln.key == "kappa_worst") {
        m.train.params.kappa_worst = parse_double(one(), where);
    } else if (ln.key == "eval_sweeps_per_round") {
        m.train.eval_sweeps_per_round = static_cast<int>(parse_long(one(), where));
    } else if (ln.key == "improvement_rounds") {
        m.train.improvement_rounds = static_cast<int>(parse_long(one(), where));
    } else if (ln.key == "kappa_schedule") {
        m.train.kappa_schedule = parse_schedule(ln.values, where);
    } else if (ln.key == "alpha_attk_schedule") {
        m.train.alpha_attk_schedule = parse_schedule(ln.values, where);
    } else if (ln.key == "regularizer_coeff") {
        m.train.regularizer_coeff = parse_double(one(), where);
    } else if (ln.key == "behavior_adv_ratio") {
        m.train.behavior_adv_ratio = parse_double(one(), where);
    } else if (ln.key == "outer_rounds") {
        m.outer_rounds = static_cast<int>(parse_long(one(), where));
    } else if (ln.key == "tol") {
        m.tol = parse_double(one(), where);
    } else {
        throw ConfigError(where + ": unknown key '" + ln.key + "' in [method " + m.name + "]");
    }
}

void apply_environment_key(EnvironmentConfig& env, const Line& ln, const std::string& where) {
    auto one = [&]() -> const std::string& {
        if (ln.values.size() != 1) throw ConfigError(where + ": key '" + ln.key + "' takes one value");
        return ln.values[0];
    };
    if (ln.key == "generator") env.generator = one();
    else if (ln.key == "fog_level") env.fog_level = parse_double(one(), where);
    else if (ln.key == "n_states") env.n_states = parse_long(one(), where);
    else if (ln.key == "n_actions") env.n_actions = parse_long(one(), where);
    else if (ln.key == "neighborhood_size") env.neighborhood_size = parse_long(one(), where);
    else if (ln.key == "gamma") env.gamma = parse_double(one(), where);
    else if (ln.key == "path") env.path = one();
    else throw ConfigError(where + ": unknown key '" + ln.key + "' in [environment]");
}

}  // namespace

ExperimentConfig parse_experiment_config_text(const std::string& text, const std::string& name) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string raw;
    int number = 0;
    std::string section, section_arg;

    while (std::getline(is, raw)) {
        ++number;
        const std::string where = name + ":" + std::to_string(number);
        std::string line = strip(raw);
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = strip(line.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            std::istringstream hs(line.substr(1, line.size() - 2));
            section.clear();
            section_arg.clear();
            hs >> section >> section_arg;
            if (section == "method") {
                if (section_arg.empty())
                    throw ConfigError(where + ": [method] needs a name, e.g. [method valt-kl]");
                cfg.methods.push_back({});
                cfg.methods.back().name = section_arg;
            } else if (section != "environment" && section != "attacks" && section != "seeds" &&
                       section != "output" && section != "sweep") {
                throw ConfigError(where + ": unknown section [" + section + "]");
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        Line ln;
        ln.number = number;
        ln.key = strip(line.substr(0, eq));
        std::istringstream vs(line.substr(eq + 1));
        std::string tok;
        while (vs >> tok) ln.values.push_back(tok);
        if (ln.key.empty() || ln.values.empty())
            throw ConfigError(where + ": expected 'key = value'");

        if (section == "environment") {
            apply_environment_key(cfg.environment, ln, where);
        } else if (section == "method") {
            apply_method_key(cfg.methods.back(), ln, where);
        } else if (section == "attacks") {
            if (ln.key != "list") throw ConfigError(where + ": [attacks] takes 'list = ...'");
            cfg.attacks = ln.values;
        } else if (section == "seeds") {
            if (ln.key != "list") throw ConfigError(where + ": [seeds] takes 'list = ...'");
            for (const auto& v : ln.values)
                cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(v, where)));
        } else if (section == "output") {
            if (ln.key != "dir") throw ConfigError(where + ": [output] takes 'dir = ...'");
            cfg.output_dir = ln.values[0];
        } else if (section == "sweep") {
            SweepAxis axis;
            axis.parameter = ln.key;
            for (const auto& v : ln.values) axis.values.push_back(parse_double(v, where));
            cfg.sweep_axes.push_back(std::move(axis));
        } else {
            throw ConfigError(where + ": key outside of any section");
        }
    }
    cfg.check();
    return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_experiment_config_text(ss.str(), path);
}

}  // namespace samdp::harness
