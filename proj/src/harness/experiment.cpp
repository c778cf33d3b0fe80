#include "harness/experiment.hpp"

#include "samdp/attacks.hpp"
#include "samdp/model_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace samdp::harness {

namespace fs = std::filesystem;

namespace {

std::string format_value(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("missing artifact: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// Runs tasks [0, n) on up to `jobs` workers; each task owns its outputs,
/// the first failure wins and is rethrown after the barrier.
template <typename Fn>
void run_tasks(std::size_t n, int jobs, Fn&& task) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                task(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int workers = std::min<int>(jobs, static_cast<int>(n));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string method_echo(const MethodConfig& m) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "[method " << m.name << "]\n";
    os << "kind = " << to_string(m.kind) << "\n";
    os << "alpha_ent = " << m.train.params.alpha_ent << "\n";
    os << "alpha_attk = " << m.train.params.alpha_attk << "\n";
    if (!m.train.params.divergence.is_kl())
        os << "alpha = " << m.train.params.divergence.alpha << "\n";
    os << "kappa_worst = " << m.train.params.kappa_worst << "\n";
    os << "eval_sweeps_per_round = " << m.train.eval_sweeps_per_round << "\n";
    os << "improvement_rounds = " << m.train.improvement_rounds << "\n";
    auto echo_schedule = [&](const char* key, const std::optional<Schedule<double>>& s) {
        if (!s) return;
        const char* kind = s->kind == Schedule<double>::Kind::kConstant    ? "constant"
                           : s->kind == Schedule<double>::Kind::kLinear ? "linear"
                                                                        : "geometric";
        os << key << " = " << kind;
        if (s->kind == Schedule<double>::Kind::kConstant) {
            os << " " << s->start;
        } else {
            os << " " << s->start << " " << s->end << " " << s->rounds;
        }
        os << "\n";
    };
    echo_schedule("kappa_schedule", m.train.kappa_schedule);
    echo_schedule("alpha_attk_schedule", m.train.alpha_attk_schedule);
    os << "regularizer_coeff = " << m.train.regularizer_coeff << "\n";
    os << "behavior_adv_ratio = " << m.train.behavior_adv_ratio << "\n";
    if (m.kind == MethodKind::kAtla) os << "outer_rounds = " << m.outer_rounds << "\n";
    if (m.kind == MethodKind::kVanilla) os << "tol = " << m.tol << "\n";
    return os.str();
}

std::string history_csv(const TrainResult<double>& result) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "round,clean_j,worst_j,residual,regularizer,policy_delta,kappa,alpha_attk\n";
    for (const auto& r : result.history)
        os << r.round << "," << r.clean_j << "," << r.worst_j << "," << r.residual << ","
           << r.regularizer << "," << r.policy_delta << "," << r.kappa << "," << r.alpha_attk
           << "\n";
    return os.str();
}

fs::path run_dir(const ExperimentConfig& cfg, const MethodConfig& m, std::uint64_t seed) {
    return fs::path(cfg.output_dir) / m.name / ("seed_" + std::to_string(seed));
}

int count_history_rounds(const std::string& csv) {
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    return std::max(0, lines - 1);
}

}  // namespace

TrainResult<double> run_method(const TabularSaMdp<double>& mdp, const MethodConfig& method) {
    switch (method.kind) {
        case MethodKind::kVanilla:
            return vanilla_soft_vi(mdp, method.train.params.alpha_ent, method.tol);
        case MethodKind::kValtKl:
        case MethodKind::kValtAlpha:
        case MethodKind::kValtEps:
            return valt_train(mdp, method.train);
        case MethodKind::kAtla:
            return atla_train(mdp, method.train.params, method.outer_rounds);
    }
    throw ConfigError("unknown method kind");
}

void cli_train(const ExperimentConfig& cfg, int jobs) {
    cfg.check();
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.output_dir);

    for (std::uint64_t seed : cfg.seeds) {
        const auto mdp = cfg.environment.build(seed);
        std::ostringstream model_text;
        write_model(model_text, mdp);
        write_text_file(fs::path(cfg.output_dir) / ("env_seed_" + std::to_string(seed) + ".txt"),
                        model_text.str());
    }

    struct Task {
        const MethodConfig* method;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& m : cfg.methods)
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({&m, seed});

    std::vector<double> wall(tasks.size(), 0.0);
    run_tasks(tasks.size(), jobs, [&](std::size_t i) {
        const auto& [method, seed] = tasks[i];
        const auto mdp = cfg.environment.build(seed);
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = run_method(mdp, *method);
        wall[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        const fs::path dir = run_dir(cfg, *method, seed);
        fs::create_directories(dir);
        std::ostringstream pi_text, q_text, nu_text;
        write_matrix(pi_text, "agent_policy", result.pi);
        write_matrix(q_text, "qtable", result.q);
        write_rows_over_neighbors(nu_text, "adversary", result.nu);
        write_text_file(dir / "policy.txt", pi_text.str());
        write_text_file(dir / "qtable.txt", q_text.str());
        write_text_file(dir / "adversary.txt", nu_text.str());
        write_text_file(dir / "history.csv", history_csv(result));
        write_text_file(dir / "config_echo.txt", method_echo(*method));
    });

    std::ostringstream timing;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        timing << tasks[i].method->name << ",seed_" << tasks[i].seed << "," << wall[i] << "\n";
    write_text_file(fs::path(cfg.output_dir) / "train_timings.txt", timing.str());
}

std::string render_results_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << kCsvHeader << "\n";
    for (const auto& r : rows)
        os << r.environment << "," << r.method << "," << r.attack << "," << r.seed << ","
           << r.clean_j << "," << r.attacked_j << "," << r.worst_j << "," << r.rounds << "\n";
    return os.str();
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader)
        throw IoError("results csv: unexpected header '" + line + "'");
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ResultRow r;
        std::string field;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) throw IoError("results csv: short row '" + line + "'");
            return field;
        };
        r.environment = next();
        r.method = next();
        r.attack = next();
        r.seed = std::stoull(next());
        r.clean_j = std::stod(next());
        r.attacked_j = std::stod(next());
        r.worst_j = std::stod(next());
        r.rounds = std::stoi(next());
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> cli_evaluate(const ExperimentConfig& cfg, int jobs) {
    cfg.check();
    struct Group {
        const MethodConfig* method;
        std::uint64_t seed;
        std::vector<ResultRow> rows;
        double wall = 0;
    };
    std::vector<Group> groups;
    for (const auto& m : cfg.methods)
        for (std::uint64_t seed : cfg.seeds) groups.push_back({&m, seed, {}, 0.0});

    run_tasks(groups.size(), jobs, [&](std::size_t gi) {
        auto& group = groups[gi];
        const auto& method = *group.method;
        const std::uint64_t seed = group.seed;
        const auto t0 = std::chrono::steady_clock::now();

        const auto mdp = cfg.environment.build(seed);
        const fs::path dir = run_dir(cfg, method, seed);
        std::istringstream pi_text(read_text_file(dir / "policy.txt"));
        const AgentPolicy<double> pi = read_matrix<double>(pi_text, "agent_policy");
        const int rounds = count_history_rounds(read_text_file(dir / "history.csv"));

        const double clean_j = joint_value(mdp, pi, identity_adversary(mdp.perturbation)).j;
        const double alpha_ent = method.train.params.alpha_ent;
        for (const auto& attack : cfg.attacks) {
            const auto nu = attack_registry<double>().at(attack)(mdp, pi, alpha_ent);
            ResultRow row;
            row.environment = cfg.environment.id(seed);
            row.method = method.name;
            row.attack = attack;
            row.seed = seed;
            row.clean_j = clean_j;
            row.attacked_j = evaluate_under_attack(mdp, pi, nu).j;
            row.rounds = rounds;
            group.rows.push_back(std::move(row));
        }
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& r : group.rows) worst = std::min(worst, r.attacked_j);
        for (auto& r : group.rows) r.worst_j = worst;

        ResultRow aggregate = group.rows.front();
        aggregate.attack = "worst";
        aggregate.attacked_j = worst;
        group.rows.push_back(std::move(aggregate));
        group.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    std::vector<ResultRow> rows;
    std::ostringstream timing;
    for (const auto& g : groups) {
        rows.insert(rows.end(), g.rows.begin(), g.rows.end());
        timing << g.method->name << ",seed_" << g.seed << "," << g.wall << "\n";
    }

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    write_text_file(fs::path(cfg.output_dir) / "results.csv", render_results_csv(rows));
    write_text_file(fs::path(cfg.output_dir) / "summary.md", render_markdown_summary(cfg, rows));
    write_text_file(fs::path(cfg.output_dir) / "evaluate_timings.txt", timing.str());
    return rows;
}

std::string render_markdown_summary(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
    // mean over seeds per (method, column); attacks in configured order,
    // the worst-across-attacks column last, exactly the benchmark-table shape
    auto mean_over_seeds = [&](const std::string& method, const std::string& attack, bool clean) {
        double acc = 0;
        int n = 0;
        for (const auto& r : rows) {
            if (r.method != method || r.attack != attack) continue;
            acc += clean ? r.clean_j : r.attacked_j;
            ++n;
        }
        return n ? acc / n : std::numeric_limits<double>::quiet_NaN();
    };

    std::ostringstream os;
    os << std::setprecision(6);
    os << "| method | clean |";
    for (const auto& a : cfg.attacks) os << " " << a << " |";
    os << " worst |\n";
    os << "|---|---|";
    for (std::size_t i = 0; i < cfg.attacks.size(); ++i) os << "---|";
    os << "---|\n";
    for (const auto& m : cfg.methods) {
        os << "| " << m.name << " | " << mean_over_seeds(m.name, cfg.attacks.front(), true) << " |";
        for (const auto& a : cfg.attacks) os << " " << mean_over_seeds(m.name, a, false) << " |";
        os << " " << mean_over_seeds(m.name, "worst", false) << " |\n";
    }
    return os.str();
}

namespace {

struct SweepPoint {
    std::vector<std::pair<std::string, double>> assignment;
    std::string label() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            if (i) os << "+";
            os << assignment[i].first << "_" << assignment[i].second;
        }
        return os.str();
    }
};

void apply_assignment(ExperimentConfig& cfg, const std::string& parameter, double value) {
    if (parameter == "fog_level") {
        cfg.environment.fog_level = value;
        return;
    }
    for (auto& m : cfg.methods) {
        if (parameter == "alpha_attk") m.train.params.alpha_attk = value;
        else if (parameter == "kappa_worst") m.train.params.kappa_worst = value;
        else if (parameter == "alpha_ent") m.train.params.alpha_ent = value;
    }
}

std::string svg_sweep_chart(const std::string& x_label,
                            const std::vector<double>& xs,
                            const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const double width = 640, height = 420, ml = 70, mr = 20, mt = 20, mb = 50;
    double x_min = xs.front(), x_max = xs.back();
    if (x_min == x_max) x_max = x_min + 1;
    double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
    for (const auto& [name, ys] : series)
        for (double y : ys) {
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    if (!(y_min < y_max)) {
        y_min -= 1;
        y_max += 1;
    }
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb); };
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
       << height - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"14\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
       << (mt + height - mb) / 2 << ")\">worst-case return</text>\n";
    for (double x : xs)
        os << "<text x=\"" << px(x) << "\" y=\"" << height - mb + 18
           << "\" text-anchor=\"middle\" font-size=\"11\">" << x << "</text>\n";
    for (double y : {y_min, 0.5 * (y_min + y_max), y_max})
        os << "<text x=\"" << ml - 6 << "\" y=\"" << py(y) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << y << "</text>\n";
    int color = 0;
    for (const auto& [name, ys] : series) {
        os << "<polyline fill=\"none\" stroke=\"" << palette[color % 6] << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) os << px(xs[i]) << "," << py(ys[i]) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << width - mr - 4 << "\" y=\"" << mt + 16 * (color + 1)
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << palette[color % 6] << "\">" << name
           << "</text>\n";
        ++color;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

void cli_sweep(const ExperimentConfig& cfg, int jobs, bool force_grid) {
    cfg.check();
    if (cfg.sweep_axes.empty()) throw ConfigError("sweep requires a [sweep] section with axes");

    std::vector<SweepPoint> points{{}};
    for (const auto& axis : cfg.sweep_axes) {
        std::vector<SweepPoint> expanded;
        for (const auto& base : points)
            for (double v : axis.values) {
                SweepPoint p = base;
                p.assignment.emplace_back(axis.parameter, v);
                expanded.push_back(std::move(p));
            }
        points = std::move(expanded);
    }
    if (points.size() > 10000 && !force_grid)
        throw ConfigError("sweep grid has " + std::to_string(points.size()) +
                          " points; pass --force-grid to run it anyway");

    struct PointResult {
        SweepPoint point;
        std::vector<ResultRow> aggregate_rows;
    };
    std::vector<PointResult> results(points.size());

    run_tasks(points.size(), jobs, [&](std::size_t i) {
        ExperimentConfig sub = cfg;
        for (const auto& [param, value] : points[i].assignment) apply_assignment(sub, param, value);
        sub.output_dir =
            (fs::path(cfg.output_dir) / "sweep" / points[i].label()).string();
        cli_train(sub, 1);
        const auto rows = cli_evaluate(sub, 1);
        results[i].point = points[i];
        for (const auto& r : rows)
            if (r.attack == "worst") results[i].aggregate_rows.push_back(r);
    });

    std::ostringstream csv;
    csv << std::setprecision(17);
    for (const auto& axis : cfg.sweep_axes) csv << axis.parameter << ",";
    csv << "method,seed,clean_j,worst_j\n";
    for (const auto& pr : results)
        for (const auto& row : pr.aggregate_rows) {
            for (const auto& [param, value] : pr.point.assignment) csv << value << ",";
            csv << row.method << "," << row.seed << "," << row.clean_j << "," << row.attacked_j
                << "\n";
        }
    fs::create_directories(cfg.output_dir);
    write_text_file(fs::path(cfg.output_dir) / "sweep_summary.csv", csv.str());

    // chart along the first axis, other axes held at their first value
    const auto& axis = cfg.sweep_axes.front();
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (const auto& m : cfg.methods) {
        std::vector<double> ys;
        for (const auto& pr : results) {
            bool on_slice = true;
            for (std::size_t a = 1; a < pr.point.assignment.size(); ++a)
                on_slice &= pr.point.assignment[a].second == cfg.sweep_axes[a].values.front();
            if (!on_slice) continue;
            double acc = 0;
            int n = 0;
            for (const auto& row : pr.aggregate_rows)
                if (row.method == m.name) {
                    acc += row.attacked_j;
                    ++n;
                }
            ys.push_back(n ? acc / n : std::numeric_limits<double>::quiet_NaN());
        }
        series.emplace_back(m.name, std::move(ys));
    }
    write_text_file(fs::path(cfg.output_dir) / "sweep_curve.svg",
                    svg_sweep_chart(axis.parameter, axis.values, series));
}

}  // namespace samdp::harness
