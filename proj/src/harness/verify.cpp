#include "harness/verify.hpp"

#include "harness/config.hpp"
#include "harness/experiment.hpp"
#include "samdp/attacks.hpp"
#include "samdp/generators.hpp"
#include "samdp/training.hpp"

#include <chrono>
#include <iomanip>
#include <random>
#include <sstream>

namespace samdp::harness {

namespace {

using Clock = std::chrono::steady_clock;
using Spec = DivergenceSpecd;

struct Battery {
    std::uint64_t seed;
    Scale scale;
    bool gamma_fault;
    std::vector<CheckResult>* out;

    int n(int quick, int full) const { return scale == Scale::kQuick ? quick : full; }

    /// Record a check: margin = tolerance - defect, pass when >= 0.
    template <typename Fn>
    void check(const std::string& name, double tolerance, Fn&& defect_fn) {
        CheckResult r;
        r.name = name;
        const auto t0 = Clock::now();
        std::string detail;
        double defect;
        try {
            defect = defect_fn(detail);
        } catch (const std::exception& e) {
            defect = std::numeric_limits<double>::infinity();
            detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        r.margin = tolerance - defect;
        r.passed = r.margin >= 0;
        r.detail = detail.empty() ? ("defect " + std::to_string(defect)) : detail;
        out->push_back(std::move(r));
    }
};

double unit(std::mt19937_64& rng) { return (double(rng() >> 11) + 0.5) * 0x1.0p-53; }

VectorX<double> random_simplex(std::mt19937_64& rng, Index m) {
    VectorX<double> x(m);
    for (Index i = 0; i < m; ++i) x(i) = -std::log(unit(rng));
    return x / x.sum();
}

VectorX<double> random_vector(std::mt19937_64& rng, Index m, double lo, double hi) {
    VectorX<double> x(m);
    for (Index i = 0; i < m; ++i) x(i) = lo + (hi - lo) * unit(rng);
    return x;
}

AgentPolicy<double> random_policy(std::mt19937_64& rng, Index ns, Index na) {
    AgentPolicy<double> pi(ns, na);
    for (Index s = 0; s < ns; ++s) pi.row(s) = random_simplex(rng, na).transpose();
    return pi;
}

PerturbationMapd row_map(const VectorX<double>& prior) {
    const Index m = prior.size();
    auto pm = PerturbationMapd::identity(m);
    pm.neighbors[0].clear();
    for (Index j = 0; j < m; ++j) pm.neighbors[0].push_back(j);
    pm.prior[0] = prior;
    return pm;
}

StateObsValue<double> row_values(const VectorX<double>& v, const PerturbationMapd& pm) {
    StateObsValue<double> out(pm.n_states());
    out[0] = v;
    for (Index s = 1; s < pm.n_states(); ++s) out[s] = VectorX<double>::Zero(1);
    return out;
}

double soft_objective(const VectorX<double>& nu, const VectorX<double>& v,
                      const VectorX<double>& p, double t, const Spec& spec) {
    return nu.dot(v) + t * f_divergence(nu, p, spec);
}

VectorX<double> grid_minimizer_3(const VectorX<double>& v, const VectorX<double>& p, double t,
                                 const Spec& spec, double step) {
    const int n = static_cast<int>(std::round(1.0 / step));
    VectorX<double> best(3), cand(3);
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j + i <= n; ++j) {
            cand << i * step, j * step, std::max(0.0, 1.0 - (i + j) * step);
            const double val = soft_objective(cand, v, p, t, spec);
            if (val < best_val) {
                best_val = val;
                best = cand;
            }
        }
    return best;
}

TabularSaMdp<double> battery_mdp(std::uint64_t seed, std::mt19937_64& rng) {
    const Index ns = 4 + Index(rng() % 5);       // up to 8 states
    const Index na = 2 + Index(rng() % 3);       // up to 4 actions
    const Index nb = std::min<Index>(ns, 2 + Index(rng() % 3));  // neighborhoods up to 4
    return generate_random(seed, ns, na, nb, 0.9);
}

SoftParamsd make_params(double alpha_ent, double alpha_attk, double kappa = 0.5) {
    SoftParamsd p;
    p.alpha_ent = alpha_ent;
    p.alpha_attk = alpha_attk;
    p.kappa_worst = kappa;
    return p;
}

void model_checks(Battery& b) {
    b.check("model.generators-validate", 0.5, [&](std::string& detail) {
        int violations = 0, models = 0;
        for (int k = 0; k < b.n(5, 20); ++k) {
            const auto mdp = generate_random(b.seed + k, 4 + k % 5, 2 + k % 3,
                                             std::min<Index>(4 + k % 5, 2 + k % 3), 0.9);
            violations += static_cast<int>(validate(mdp).size());
            ++models;
        }
        for (double fog : {0.0, 0.3, 1.0}) {
            violations += static_cast<int>(validate(generate_fog_bridges(fog)).size());
            ++models;
        }
        detail = std::to_string(models) + " models, " + std::to_string(violations) + " violations";
        return double(violations);
    });

    b.check("model.generator-determinism", 0.0, [&](std::string&) {
        const auto a = generate_random(b.seed, 6, 3, 3, 0.9);
        const auto c = generate_random(b.seed, 6, 3, 3, 0.9);
        double defect = (a.transition - c.transition).cwiseAbs().maxCoeff();
        defect = std::max(defect, (a.reward - c.reward).cwiseAbs().maxCoeff());
        return defect;
    });
}

void divergence_checks(Battery& b) {
    b.check("divergence.conjugate-inverts-generator", 1e-8, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 11);
        double defect = 0;
        for (double alpha : {-1.0, 0.0, 0.5, 0.9}) {
            const Spec spec = Spec::alpha_family(alpha);
            for (int k = 0; k < b.n(10, 60); ++k) {
                const double x = 0.1 + 9.9 * unit(rng);
                defect = std::max(defect,
                                  std::abs(conjugate_derivative(generator_derivative(x, spec), spec) - x));
            }
        }
        return defect;
    });

    b.check("divergence.conjugate-monotone", 0.0, [&](std::string&) {
        int violations = 0;
        for (double alpha : {-2.0, 0.0, 0.5}) {
            const Spec spec = Spec::alpha_family(alpha);
            const double y_hi = 0.99 / (1.0 - alpha);
            double prev = -1e300;
            for (int i = 0; i < 1000; ++i) {
                const double y = -5.0 + (y_hi + 5.0) * i / 999.0;
                const double g = conjugate_derivative(y, spec);
                if (!(g > prev)) ++violations;
                prev = g;
            }
        }
        return double(violations);
    });

    b.check("divergence.alpha-to-one-is-kl", 1e-6, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 12);
        double defect = 0;
        for (int k = 0; k < b.n(10, 50); ++k) {
            const auto p = random_simplex(rng, 4);
            const auto nu = random_simplex(rng, 4);
            defect = std::max(defect, std::abs(f_divergence(nu, p, Spec::alpha_family(1 - 1e-7)) -
                                               f_divergence(nu, p, Spec::kl())));
        }
        return defect;
    });

    b.check("divergence.convex-along-mixtures", 1e-9, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 13);
        double defect = -1e300;
        for (int k = 0; k < b.n(10, 40); ++k) {
            const auto p = random_simplex(rng, 4);
            const auto a = random_simplex(rng, 4);
            const auto c = random_simplex(rng, 4);
            for (double alpha : {0.0, 0.5, 1.0})
                for (double t : {0.25, 0.5, 0.75}) {
                    const Spec spec = Spec::alpha_family(alpha);
                    const VectorX<double> mix = (1 - t) * a + t * c;
                    defect = std::max(defect, f_divergence(mix, p, spec) -
                                                  ((1 - t) * f_divergence(a, p, spec) +
                                                   t * f_divergence(c, p, spec)));
                }
        }
        return defect;
    });
}

void adversary_checks(Battery& b) {
    b.check("adversary.kl-beats-random-simplex-points", 1e-9, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 21);
        double defect = -1e300;
        long candidates = 0;
        for (int inst = 0; inst < b.n(5, 8); ++inst) {
            const auto prior = random_simplex(rng, 3);
            const auto pm = row_map(prior);
            const auto v = random_vector(rng, 3, -3, 3);
            const double t = 0.3 + 3.0 * unit(rng);
            const auto nu = kl_soft_adversary(row_values(v, pm), pm, t);
            const double star = soft_objective(nu[0], v, prior, t, Spec::kl());
            const int pts = b.n(2000, 10000);
            for (int k = 0; k < pts; ++k) {
                defect = std::max(defect, star - soft_objective(random_simplex(rng, 3), v, prior, t,
                                                                Spec::kl()));
                ++candidates;
            }
        }
        detail = std::to_string(candidates) + " candidates, worst slack " + std::to_string(-defect);
        return defect;
    });

    b.check("adversary.kl-matches-grid-bruteforce", 2e-3, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 22);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 8); ++inst) {
            const auto prior = random_simplex(rng, 3);
            const auto pm = row_map(prior);
            const auto v = random_vector(rng, 3, 0, 2);
            const auto nu = kl_soft_adversary(row_values(v, pm), pm, 1.0);
            defect = std::max(defect,
                              total_variation(nu[0], grid_minimizer_3(v, prior, 1.0, Spec::kl(), 1e-3)));
        }
        return defect;
    });

    // temperature matched to the value spread so the alpha -> 1 limit is
    // tight enough to witness
    b.check("adversary.dual-kl-limit", 1e-3, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 23);
        double defect = 0;
        for (int inst = 0; inst < b.n(10, 50); ++inst) {
            const Index m = 4;
            const auto prior = random_simplex(rng, m);
            const auto pm = row_map(prior);
            const auto v = random_vector(rng, m, 0, 2);
            const double t = std::max(3.0 * (v.maxCoeff() - v.minCoeff()), 1.0);
            const auto kl = kl_soft_adversary(row_values(v, pm), pm, t);
            for (double alpha : {0.99, 0.9}) {
                const auto dual = dual_adversary(row_values(v, pm), pm, t, Spec::alpha_family(alpha));
                defect = std::max(defect, total_variation(kl[0], dual[0]));
            }
        }
        return defect;
    });

    b.check("adversary.dual-matches-grid-at-alpha-half", 2e-3, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 24);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 8); ++inst) {
            const auto prior = random_simplex(rng, 3);
            const auto pm = row_map(prior);
            const auto v = random_vector(rng, 3, 0, 2);
            const Spec spec = Spec::alpha_family(0.5);
            const auto nu = dual_adversary(row_values(v, pm), pm, 1.0, spec);
            defect = std::max(defect,
                              total_variation(nu[0], grid_minimizer_3(v, prior, 1.0, spec, 1e-3)));
        }
        return defect;
    });

    b.check("adversary.prior-recovery", 1e-9, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 25);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto prior = random_simplex(rng, 4);
            const auto pm = row_map(prior);
            const auto v = row_values(VectorX<double>::Constant(4, -1.7), pm);
            defect = std::max(defect, total_variation(kl_soft_adversary(v, pm, 0.8)[0], prior));
            defect = std::max(
                defect, total_variation(dual_adversary(v, pm, 0.8, Spec::alpha_family(0.3))[0], prior));
        }
        // the eps solver's flat part is uniform by construction, so its
        // prior recovery is checked against the uniform prior
        const auto uniform_pm = row_map(VectorX<double>::Constant(4, 0.25));
        const auto v = row_values(VectorX<double>::Constant(4, 2.0), uniform_pm);
        defect = std::max(defect, total_variation(epsilon_worst_adversary(v, uniform_pm, 0.0)[0],
                                                  uniform_pm.prior[0]));
        return defect;
    });

    b.check("adversary.softmin-monotone-sharpening", 1e-12, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 26);
        double defect = -1e300;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto prior = random_simplex(rng, 4);
            const auto pm = row_map(prior);
            const auto vrow = random_vector(rng, 4, -2, 2);
            const Index worst = argmin_lowest(vrow);
            double prev = 0;
            for (double t : {1000.0, 100.0, 10.0, 1.0, 0.1, 0.01}) {
                const double mass = kl_soft_adversary(row_values(vrow, pm), pm, t)[0](worst);
                defect = std::max(defect, prev - mass);
                prev = mass;
            }
        }
        return defect;
    });

    b.check("adversary.softmin-shift-invariance", 1e-12, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 27);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto prior = random_simplex(rng, 4);
            const auto pm = row_map(prior);
            const auto vrow = random_vector(rng, 4, -2, 2);
            const auto a = kl_soft_adversary(row_values(vrow, pm), pm, 0.7);
            const auto c =
                kl_soft_adversary(row_values((vrow.array() + 55.0).matrix(), pm), pm, 0.7);
            defect = std::max(defect, total_variation(a[0], c[0]));
        }
        return defect;
    });

    b.check("adversary.hard-equals-eps-at-kappa-one", 0.0, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 28);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto prior = random_simplex(rng, 5);
            const auto pm = row_map(prior);
            const auto v = row_values(random_vector(rng, 5, -4, 4), pm);
            defect = std::max(defect, total_variation(hard_worst_adversary(v, pm)[0],
                                                      epsilon_worst_adversary(v, pm, 1.0)[0]));
        }
        return defect;
    });
}

void evaluation_checks(Battery& b) {
    const double gamma_scale = b.gamma_fault ? 1.02 : 1.0;

    b.check("evaluation.contraction-agent", 1e-9, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 31);
        double defect = -1e300;
        const int instances = b.n(5, 20), pairs = b.n(20, 100);
        for (int inst = 0; inst < instances; ++inst) {
            auto mdp = battery_mdp(b.seed + 1000 + inst, rng);
            mdp.gamma *= gamma_scale;
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            for (double kappa : {0.0, 0.5, 1.0}) {
                const auto params = make_params(0.3, 1.5, kappa);
                for (auto solver : {SolverKind::kKl, SolverKind::kEps, SolverKind::kHard,
                                    SolverKind::kPrior}) {
                    const double ratio =
                        contraction_probe_agent(mdp, pi, params, solver, pairs, b.seed + inst);
                    defect = std::max(defect, ratio - 0.9);
                    if (solver != SolverKind::kEps) break;  // kappa only matters for eps
                }
            }
        }
        detail = std::to_string(instances) + " models x " + std::to_string(pairs) +
                 " pairs, max ratio excess " + std::to_string(defect);
        return defect;
    });

    b.check("evaluation.contraction-adversary", 1e-9, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 32);
        double defect = -1e300;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            auto mdp = battery_mdp(b.seed + 2000 + inst, rng);
            mdp.gamma *= gamma_scale;
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            for (double kappa : {0.0, 0.5, 1.0}) {
                const auto params = make_params(0.3, 1.5, kappa);
                for (auto solver : {SolverKind::kKl, SolverKind::kEps, SolverKind::kHard,
                                    SolverKind::kPrior}) {
                    const double ratio = contraction_probe_adversary(mdp, pi, params, solver,
                                                                     b.n(20, 100), b.seed + inst);
                    defect = std::max(defect, ratio - 0.9);
                    if (solver != SolverKind::kEps) break;
                }
            }
        }
        return defect;
    });

    b.check("evaluation.fixed-point-symmetry", 1e-6, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 33);
        double defect = 0;
        int cases = 0;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto mdp = battery_mdp(b.seed + 3000 + inst, rng);
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            for (const auto& params :
                 {make_params(0.0, 2.0, 0.5), make_params(0.3, 0.7, 1.0), make_params(0.1, 5.0, 0.0)})
                for (auto solver : {SolverKind::kKl, SolverKind::kEps}) {
                    defect = std::max(defect, symmetry_check(mdp, pi, params, solver));
                    ++cases;
                }
        }
        detail = std::to_string(cases) + " cases, max defect " + std::to_string(defect);
        return defect;
    });

    b.check("evaluation.mirror-identity", 1e-10, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 34);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 10); ++inst) {
            const auto mdp = battery_mdp(b.seed + 4000 + inst, rng);
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            QTable<double> q(mdp.n_states, mdp.n_actions);
            for (Index s = 0; s < mdp.n_states; ++s)
                q.row(s) = random_vector(rng, mdp.n_actions, -10, 10).transpose();
            const auto params = make_params(0.4, 1.5, 0.5);
            for (auto solver : {SolverKind::kKl, SolverKind::kEps, SolverKind::kHard}) {
                AdvQTable<double> qa(mdp.n_states);
                for (Index s = 0; s < mdp.n_states; ++s) {
                    qa[s].resize(mdp.perturbation.degree(s));
                    for (Index j = 0; j < mdp.perturbation.degree(s); ++j)
                        qa[s](j) = -pi.row(mdp.perturbation.neighbors[s][j]).dot(q.row(s));
                }
                const auto t_adv = soft_opt_bellman_adversary(qa, mdp, pi, params, solver);
                const auto t_agent = soft_worst_bellman_agent(q, mdp, pi, params, solver);
                for (Index s = 0; s < mdp.n_states; ++s)
                    for (Index j = 0; j < mdp.perturbation.degree(s); ++j)
                        defect = std::max(defect,
                                          std::abs(t_adv[s](j) +
                                                   pi.row(mdp.perturbation.neighbors[s][j])
                                                       .dot(t_agent.row(s))));
            }
        }
        return defect;
    });

    b.check("evaluation.pessimism-monotonicity", 1e-12, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 35);
        double defect = -1e300;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const VectorX<double> prior = VectorX<double>::Constant(4, 0.25);
            const auto v = random_vector(rng, 4, -5, 5);
            double prev = 1e300;
            for (double t : {100.0, 10.0, 1.0, 0.1}) {
                const double val =
                    inner_worst_value(v, prior, make_params(0.0, t), SolverKind::kKl);
                defect = std::max(defect, val - prev);  // shrinking t never raises the value
                prev = val;
            }
            const double hard = inner_worst_value(v, prior, make_params(0.0, 1.0), SolverKind::kHard);
            const double prior_avg =
                inner_worst_value(v, prior, make_params(0.0, 1.0), SolverKind::kPrior);
            for (double kappa : {0.0, 0.5, 1.0}) {
                const double eps =
                    inner_worst_value(v, prior, make_params(0.0, 1.0, kappa), SolverKind::kEps);
                defect = std::max(defect, hard - eps);
                defect = std::max(defect, eps - prior_avg);
            }
        }
        return defect;
    });

    b.check("evaluation.qtable-bound-posthoc", 1e-9, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 36);
        double defect = -1e300;
        for (int inst = 0; inst < b.n(5, 10); ++inst) {
            const auto mdp = battery_mdp(b.seed + 5000 + inst, rng);
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            const auto params = make_params(0.3, 1.0);
            QTable<double> q = QTable<double>::Zero(mdp.n_states, mdp.n_actions);
            fixed_point(q, make_agent_operator(mdp, pi, params, SolverKind::kKl));
            const double r_max = mdp.reward.cwiseAbs().maxCoeff();
            const double bound = (r_max + params.alpha_ent * std::log(double(mdp.n_actions))) /
                                 (1.0 - mdp.gamma);
            defect = std::max(defect, q.cwiseAbs().maxCoeff() - bound);
        }
        return defect;
    });

    b.check("evaluation.visitation-distribution", 1e-9, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 37);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 10); ++inst) {
            const auto mdp = battery_mdp(b.seed + 6000 + inst, rng);
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            const auto rho = discounted_visitation(mdp, pi, prior_adversary(mdp.perturbation));
            defect = std::max(defect, std::abs(rho.sum() - 1.0));
            defect = std::max(defect, -rho.minCoeff());
        }
        return defect;
    });

    b.check("evaluation.joint-value-matches-rollouts", 0.0, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 38);
        double worst = -1e300, worst_diff = 0, worst_band = 0;
        for (int inst = 0; inst < 5; ++inst) {
            const auto mdp = generate_random(b.seed + 7000 + inst, 5, 2, 3, 0.9);
            const auto pi = random_policy(rng, 5, 2);
            const auto nu = attack_uniform(mdp.perturbation);
            const auto exact = joint_value(mdp, pi, nu);
            const auto est = simulate_return(mdp, pi, nu, b.seed + inst, b.n(100000, 1000000));
            const double diff = std::abs(est.mean - exact.j);
            const double band = 3.0 * est.std_error + 1e-9;
            if (diff - band > worst) {
                worst = diff - band;
                worst_diff = diff;
                worst_band = band;
            }
        }
        detail = "worst diff " + std::to_string(worst_diff) + " vs band " + std::to_string(worst_band);
        return worst;
    });

    b.check("evaluation.entropy-decomposition", 1e-12, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 39);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const Index m = 3, na = 4;
            const auto nu = random_simplex(rng, m);
            MatrixX<double> pi(m, na);
            for (Index j = 0; j < m; ++j) pi.row(j) = random_simplex(rng, na).transpose();
            double joint = 0;
            for (Index j = 0; j < m; ++j)
                for (Index a = 0; a < na; ++a) {
                    const double p = nu(j) * pi(j, a);
                    if (p > 0) joint -= p * std::log(p);
                }
            double decomposed = entropy(nu);
            for (Index j = 0; j < m; ++j) decomposed += nu(j) * entropy(pi.row(j));
            defect = std::max(defect, std::abs(joint - decomposed));
        }
        return defect;
    });
}

void improvement_checks(Battery& b) {
    b.check("improvement.identity-adversary-audit", 1e-8, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 41);
        double worst_gap = 1e300;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto mdp = battery_mdp(b.seed + 8000 + inst, rng);
            const auto pi_old = random_policy(rng, mdp.n_states, mdp.n_actions);
            const auto nu = identity_adversary(mdp.perturbation);
            const auto eval = evaluate_fixed_pair(mdp, pi_old, nu, 0.3);
            const auto pi_new = soft_policy_improvement(eval.q, mdp.perturbation, nu, 0.3);
            worst_gap = std::min(worst_gap,
                                 improvement_audit(mdp, nu, pi_old, pi_new, 0.3).min_gap);
        }
        detail = "min gap " + std::to_string(worst_gap);
        return -worst_gap;
    });

    b.check("improvement.soft-adversary-audit", 1e-8, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 42);
        double worst_gap = 1e300;
        for (int inst = 0; inst < b.n(5, 20); ++inst) {
            const auto mdp = battery_mdp(b.seed + 9000 + inst, rng);
            const auto pi_old = random_policy(rng, mdp.n_states, mdp.n_actions);
            const auto clean = evaluate_fixed_pair(mdp, pi_old, identity_adversary(mdp.perturbation),
                                                   0.3);
            const auto v = state_obs_value(clean.q, pi_old, mdp.perturbation, 0.3);
            for (int variant = 0; variant < 2; ++variant) {
                const auto nu = variant == 0 ? kl_soft_adversary(v, mdp.perturbation, 1.0)
                                             : epsilon_worst_adversary(v, mdp.perturbation, 0.5);
                const auto eval = evaluate_fixed_pair(mdp, pi_old, nu, 0.3);
                const auto pi_new = soft_policy_improvement(eval.q, mdp.perturbation, nu, 0.3);
                worst_gap = std::min(worst_gap,
                                     improvement_audit(mdp, nu, pi_old, pi_new, 0.3).min_gap);
            }
        }
        detail = "min gap " + std::to_string(worst_gap) + " (reported; no theorem for overlaps)";
        return -worst_gap;
    });

    b.check("improvement.zero-reg-coefficient-identity", 0.0, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 43);
        const auto mdp = battery_mdp(b.seed + 9100, rng);
        QTable<double> q(mdp.n_states, mdp.n_actions);
        for (Index s = 0; s < mdp.n_states; ++s)
            q.row(s) = random_vector(rng, mdp.n_actions, -3, 3).transpose();
        const auto nu = prior_adversary(mdp.perturbation);
        const auto plain = soft_policy_improvement(q, mdp.perturbation, nu, 0.4);
        const auto reg0 = soft_policy_improvement(q, mdp.perturbation, nu, 0.4, 0.0);
        return double((plain - reg0).cwiseAbs().maxCoeff());
    });
}

void training_checks(Battery& b) {
    b.check("training.variational-fit-matches-analytical", 1e-4, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 51);
        double defect = 0;
        for (int inst = 0; inst < b.n(5, 10); ++inst) {
            const auto mdp = battery_mdp(b.seed + 9500 + inst, rng);
            const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
            QTable<double> q(mdp.n_states, mdp.n_actions);
            for (Index s = 0; s < mdp.n_states; ++s)
                q.row(s) = random_vector(rng, mdp.n_actions, -8, 8).transpose();
            const auto params = make_params(0.2, 1.0);
            const auto fitted = valt_soft_variational_fit(q, pi, mdp.perturbation, params, 500, 0);
            const auto v = state_obs_value(q, pi, mdp.perturbation, params.alpha_ent);
            const auto analytical = kl_soft_adversary(v, mdp.perturbation, params.alpha_attk);
            for (Index s = 0; s < mdp.n_states; ++s)
                defect = std::max(defect, total_variation(fitted[s], analytical[s]));
        }
        detail = "max tv " + std::to_string(defect) + " after 500 steps";
        return defect;
    });

    b.check("training.valt-reduces-to-soft-vi-without-perturbation", 1e-6, [&](std::string&) {
        const auto mdp = generate_random(b.seed + 9600, 5, 3, 1, 0.9);
        TrainConfig<double> cfg;
        cfg.params = make_params(0.2, 3.0);
        cfg.eval_sweeps_per_round = 200;
        cfg.improvement_rounds = 50;
        const auto valt = valt_train(mdp, cfg);
        const auto vi = vanilla_soft_vi(mdp, 0.2, 1e-12);
        const auto nu = identity_adversary(mdp.perturbation);
        return std::abs(joint_value(mdp, valt.pi, nu).j - joint_value(mdp, vi.pi, nu).j);
    });

    b.check("training.valt-huge-temperature-degenerates-to-prior", 1e-6, [&](std::string&) {
        const auto mdp = generate_random(b.seed + 9700, 5, 3, 3, 0.9);
        TrainConfig<double> kl_cfg;
        kl_cfg.params = make_params(0.1, 1e9);
        kl_cfg.eval_sweeps_per_round = 150;
        kl_cfg.improvement_rounds = 25;
        auto prior_cfg = kl_cfg;
        prior_cfg.solver = SolverKind::kPrior;
        const auto nu = identity_adversary(mdp.perturbation);
        return std::abs(joint_value(mdp, valt_train(mdp, kl_cfg).pi, nu).j -
                        joint_value(mdp, valt_train(mdp, prior_cfg).pi, nu).j);
    });

    b.check("training.valt-deterministic", 0.0, [&](std::string&) {
        const auto mdp = generate_fog_bridges(1.0);
        TrainConfig<double> cfg;
        cfg.params = make_params(0.05, 0.5);
        cfg.eval_sweeps_per_round = 40;
        cfg.improvement_rounds = 5;
        const auto a = valt_train(mdp, cfg);
        const auto c = valt_train(mdp, cfg);
        double defect = sup_diff(a.pi, c.pi);
        for (std::size_t i = 0; i < a.history.size(); ++i)
            defect = std::max(defect, std::abs(a.history[i].clean_j - c.history[i].clean_j));
        return defect;
    });

    b.check("training.schedule-endpoints", 0.0, [&](std::string&) {
        const auto lin = Schedule<double>::linear(0.25, 0.75, 7);
        const auto geo = Schedule<double>::geometric(1000, 4, 9);
        double defect = std::abs(lin.at(0) - 0.25) + std::abs(lin.at(6) - 0.75) +
                        std::abs(lin.at(100) - 0.75);
        defect += std::abs(geo.at(0) - 1000) + std::abs(geo.at(8) - 4);
        return defect;
    });

    b.check("training.atla-best-response-contract", 1e-9, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 52);
        double defect = -1e300;
        const int instances = b.n(5, 5), rounds = b.n(5, 10);
        for (int inst = 0; inst < instances; ++inst) {
            const auto mdp = battery_mdp(b.seed + 9800 + inst, rng);
            SoftParamsd params = make_params(0.0, 1.0);
            const auto result = atla_train(mdp, params, rounds);
            double previous = result.initial_j;
            for (const auto& rec : result.history) {
                defect = std::max(defect, rec.worst_j - previous);  // adversary must not raise J
                defect = std::max(defect, rec.worst_j - rec.clean_j);  // agent must not lower J
                previous = rec.clean_j;
            }
        }
        detail = std::to_string(instances) + " instances x " + std::to_string(rounds) +
                 " rounds, worst violation " + std::to_string(defect);
        return defect;
    });

    b.check("training.equilibrium-gaps-nonnegative", 1e-9, [&](std::string&) {
        const auto mdp = generate_fog_bridges(1.0);
        TrainConfig<double> cfg;
        cfg.params = make_params(0.05, 0.5);
        cfg.eval_sweeps_per_round = 80;
        cfg.improvement_rounds = 10;
        const auto result = valt_train(mdp, cfg);
        const auto gap = equilibrium_gap(mdp, result.pi, result.nu);
        return std::max(-gap.agent_gap, -gap.adversary_gap);
    });
}

void attack_checks(Battery& b) {
    b.check("attacks.optimal-dominates-heuristics", 1e-8, [&](std::string& detail) {
        std::mt19937_64 rng(b.seed + 61);
        double defect = -1e300;
        int comparisons = 0;
        for (int inst = 0; inst < b.n(5, 8); ++inst) {
            const auto mdp = battery_mdp(b.seed + 9900 + inst, rng);
            const double alpha_ent = 0.1;
            const auto vi = vanilla_soft_vi(mdp, alpha_ent, 1e-12);
            TrainConfig<double> cfg;
            cfg.params = make_params(alpha_ent, 1.0);
            cfg.eval_sweeps_per_round = 80;
            cfg.improvement_rounds = 8;
            const auto valt = valt_train(mdp, cfg);
            for (const auto* pi : {&vi.pi, &valt.pi}) {
                const double j_opt = evaluate_under_attack(mdp, *pi, attack_optimal(mdp, *pi)).j;
                for (const auto& [name, make] : attack_registry<double>()) {
                    defect = std::max(defect,
                                      j_opt - evaluate_under_attack(mdp, *pi,
                                                                    make(mdp, *pi, alpha_ent)).j);
                    ++comparisons;
                }
            }
        }
        detail = std::to_string(comparisons) + " comparisons, worst excess " + std::to_string(defect);
        return defect;
    });

    b.check("attacks.rows-are-distributions", 0.5, [&](std::string&) {
        const auto mdp = generate_random(b.seed + 9950, 5, 3, 4, 0.9);
        const auto vi = vanilla_soft_vi(mdp, 0.1, 1e-12);
        int bad = 0;
        for (const auto& [name, make] : attack_registry<double>())
            if (!is_valid_adversary(make(mdp, vi.pi, 0.1), mdp.perturbation)) ++bad;
        return double(bad);
    });

    b.check("attacks.min-v-equals-hard-worst-extraction", 0.0, [&](std::string&) {
        std::mt19937_64 rng(b.seed + 62);
        const auto mdp = battery_mdp(b.seed + 9960, rng);
        const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
        const auto clean = evaluate_fixed_pair(mdp, pi, identity_adversary(mdp.perturbation), 0.2);
        const auto direct = attack_min_v(pi, clean.q, mdp.perturbation, 0.2);
        const auto via_hard = hard_worst_adversary(
            state_obs_value(clean.q, pi, mdp.perturbation, 0.2), mdp.perturbation);
        double defect = 0;
        for (Index s = 0; s < mdp.n_states; ++s)
            defect = std::max(defect, total_variation(direct[s], via_hard[s]));
        return defect;
    });
}

void robustness_checks(Battery& b) {
    b.check("robustness.fog-bridges-tradeoff", 0.0, [&](std::string& detail) {
        const auto mdp = generate_fog_bridges(1.0);
        const double alpha_ent = 0.01;
        const auto vanilla = vanilla_soft_vi(mdp, alpha_ent, 1e-12);

        TrainConfig<double> kl_cfg;
        kl_cfg.params = make_params(alpha_ent, 0.3);
        kl_cfg.eval_sweeps_per_round = 300;
        kl_cfg.improvement_rounds = 40;
        const auto valt_kl = valt_train(mdp, kl_cfg);

        TrainConfig<double> eps_cfg;
        eps_cfg.solver = SolverKind::kEps;
        eps_cfg.params = make_params(alpha_ent, 1.0, 1.0);
        eps_cfg.eval_sweeps_per_round = 300;
        eps_cfg.improvement_rounds = 40;
        eps_cfg.kappa_schedule = Schedule<double>::linear(0.0, 1.0, 20);
        const auto valt_eps = valt_train(mdp, eps_cfg);

        const auto nu_id = identity_adversary(mdp.perturbation);
        const double clean_vanilla = joint_value(mdp, vanilla.pi, nu_id).j;
        const double clean_kl = joint_value(mdp, valt_kl.pi, nu_id).j;
        const double clean_eps = joint_value(mdp, valt_eps.pi, nu_id).j;
        const double worst_vanilla = solve_adversary_mdp(mdp, vanilla.pi).j_against;
        const double worst_kl = solve_adversary_mdp(mdp, valt_kl.pi).j_against;
        const double worst_eps = solve_adversary_mdp(mdp, valt_eps.pi).j_against;

        const double required = worst_vanilla + 0.05 * clean_vanilla;
        double margin = std::min(worst_kl - required, worst_eps - required);
        margin = std::min(margin, clean_vanilla - clean_kl + 1e-9);
        margin = std::min(margin, clean_vanilla - clean_eps + 1e-9);
        std::ostringstream os;
        os << std::setprecision(4) << "vanilla clean " << clean_vanilla << " worst "
           << worst_vanilla << "; valt-kl worst " << worst_kl << "; valt-eps worst " << worst_eps;
        detail = os.str();
        return -margin;
    });

    b.check("harness.end-to-end-determinism", 0.0, [&](std::string&) {
        const std::string config_text = R"(
[environment]
generator = random
n_states = 4
n_actions = 2
neighborhood_size = 2
gamma = 0.9

[method quick-valt]
kind = valt-kl
alpha_ent = 0.1
alpha_attk = 1.0
eval_sweeps_per_round = 30
improvement_rounds = 3

[attacks]
list = uniform optimal

[seeds]
list = 1 2

[output]
dir = /tmp/samdp_verify_determinism
)";
        auto cfg = parse_experiment_config_text(config_text, "inline");
        std::filesystem::remove_all(cfg.output_dir);
        cli_train(cfg, 1);
        const auto rows_a = cli_evaluate(cfg, 1);
        const std::string csv_a = render_results_csv(rows_a);
        std::filesystem::remove_all(cfg.output_dir);
        cli_train(cfg, 2);
        const auto rows_b = cli_evaluate(cfg, 2);
        const std::string csv_b = render_results_csv(rows_b);
        std::filesystem::remove_all(cfg.output_dir);
        return csv_a == csv_b ? 0.0 : 1.0;
    });
}

}  // namespace

std::vector<CheckResult> run_verification(std::uint64_t seed, Scale scale, bool inject_gamma_fault) {
    std::vector<CheckResult> results;
    Battery b{seed, scale, inject_gamma_fault, &results};
    model_checks(b);
    divergence_checks(b);
    adversary_checks(b);
    evaluation_checks(b);
    improvement_checks(b);
    training_checks(b);
    attack_checks(b);
    robustness_checks(b);
    return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

std::string render_verification_report(const std::vector<CheckResult>& results) {
    std::ostringstream os;
    os << std::setprecision(6);
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    double total = 0;
    int failures = 0;
    for (const auto& r : results) {
        os << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(int(width) + 2) << r.name
           << std::right << " margin " << std::setw(12) << r.margin << "  [" << std::fixed
           << std::setprecision(2) << r.seconds << "s] " << std::defaultfloat
           << std::setprecision(6) << r.detail << "\n";
        total += r.seconds;
        failures += r.passed ? 0 : 1;
    }
    os << (failures == 0 ? "ALL CHECKS PASSED" : std::to_string(failures) + " CHECKS FAILED")
       << " (" << results.size() << " checks, " << std::fixed << std::setprecision(1) << total
       << "s)\n";
    return os.str();
}

}  // namespace samdp::harness
