// Acceptance suite: the project's exit criteria, one test per criterion.
// Every test prints its measured margin and asserts the pinned tolerance
// and runtime budget.

#include "harness/verify.hpp"
#include "samdp/attacks.hpp"
#include "samdp/generators.hpp"
#include "samdp/training.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <iostream>

using namespace samdp;

namespace {

using Clock = std::chrono::steady_clock;

struct Stopwatch {
    Clock::time_point t0 = Clock::now();
    double seconds() const { return std::chrono::duration<double>(Clock::now() - t0).count(); }
};

// The shared battery: seeded random models with |S| <= 8, |A| <= 4,
// neighborhoods <= 4, gamma 0.9.
TabularSaMdp<double> battery_mdp(std::uint64_t seed, std::mt19937_64& rng) {
    const Index ns = 4 + Index(rng() % 5);
    const Index na = 2 + Index(rng() % 3);
    const Index nb = std::min<Index>(ns, 2 + Index(rng() % 3));
    return generate_random(seed, ns, na, nb, 0.9);
}

AgentPolicy<double> random_policy(std::mt19937_64& rng, Index ns, Index na) {
    AgentPolicy<double> pi(ns, na);
    for (Index s = 0; s < ns; ++s) pi.row(s) = testsup::random_simplex(rng, na).transpose();
    return pi;
}

SoftParamsd make_params(double alpha_ent, double alpha_attk, double kappa = 0.5) {
    SoftParamsd p;
    p.alpha_ent = alpha_ent;
    p.alpha_attk = alpha_attk;
    p.kappa_worst = kappa;
    return p;
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
                      const VectorX<double>& p, double t, const DivergenceSpecd& spec) {
    return nu.dot(v) + t * f_divergence(nu, p, spec);
}

VectorX<double> grid_minimizer_3(const VectorX<double>& v, const VectorX<double>& p, double t,
                                 const DivergenceSpecd& spec, double step = 1e-3) {
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

// Criterion 1: gamma-contraction of the agent- and adversary-side operators,
// KL and epsilon (kappa in {0, 0.5, 1}), over 20 models x 100 pairs.
TEST(Acceptance, GammaContraction) {
    Stopwatch watch;
    std::mt19937_64 rng(2025);
    double max_excess = -1e300;
    for (int inst = 0; inst < 20; ++inst) {
        const auto mdp = battery_mdp(100 + inst, rng);
        const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
        for (double kappa : {0.0, 0.5, 1.0}) {
            const auto params = make_params(0.3, 1.5, kappa);
            for (auto solver : {SolverKind::kKl, SolverKind::kEps}) {
                max_excess = std::max(
                    max_excess,
                    contraction_probe_agent(mdp, pi, params, solver, 100, 1000 + inst) - mdp.gamma);
                max_excess = std::max(max_excess,
                                      contraction_probe_adversary(mdp, pi, params, solver, 100,
                                                                  2000 + inst) -
                                          mdp.gamma);
                if (solver == SolverKind::kKl) break;  // kappa only shapes the eps solver
            }
        }
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] gamma-contraction: max ratio excess " << max_excess << " (tol 1e-9), "
              << elapsed << "s (budget 30s)\n";
    EXPECT_LE(max_excess, 1e-9);
    EXPECT_LT(elapsed, 30.0);
}

// Criterion 2: fixed points of the operator pair mirror each other with
// opposite signs on the same battery.
TEST(Acceptance, FixedPointSymmetry) {
    Stopwatch watch;
    std::mt19937_64 rng(2026);
    double max_defect = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const auto mdp = battery_mdp(300 + inst, rng);
        const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
        for (const auto& params :
             {make_params(0.0, 2.0, 0.5), make_params(0.3, 0.7, 1.0), make_params(0.1, 5.0, 0.0)})
            for (auto solver : {SolverKind::kKl, SolverKind::kEps})
                max_defect = std::max(max_defect, symmetry_check(mdp, pi, params, solver));
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] fixed-point symmetry: max defect " << max_defect << " (tol 1e-6), "
              << elapsed << "s (budget 60s)\n";
    EXPECT_LT(max_defect, 1e-6);
    EXPECT_LT(elapsed, 60.0);
}

// Criterion 3: the analytical KL adversary minimizes its objective against
// 10^4 random simplex points per row and matches 1e-3-grid brute force.
TEST(Acceptance, KlAnalyticalOptimality) {
    Stopwatch watch;
    std::mt19937_64 rng(2027);
    double worst_slack = 1e300;
    for (int inst = 0; inst < 5; ++inst) {
        const auto prior = testsup::random_simplex(rng, 3);
        const auto pm = row_map(prior);
        const auto v = testsup::random_vector(rng, 3, -3, 3);
        const double t = testsup::uniform(rng, 0.3, 3.0);
        const auto nu = kl_soft_adversary(row_values(v, pm), pm, t);
        const double star = soft_objective(nu[0], v, prior, t, DivergenceSpecd::kl());
        for (int k = 0; k < 10000; ++k)
            worst_slack = std::min(worst_slack,
                                   soft_objective(testsup::random_simplex(rng, 3), v, prior, t,
                                                  DivergenceSpecd::kl()) -
                                       star);
    }
    double max_tv = 0;
    for (int inst = 0; inst < 3; ++inst) {
        const auto prior = testsup::random_simplex(rng, 3);
        const auto pm = row_map(prior);
        const auto v = testsup::random_vector(rng, 3, 0, 2);
        const auto nu = kl_soft_adversary(row_values(v, pm), pm, 1.0);
        max_tv = std::max(max_tv,
                          total_variation(nu[0], grid_minimizer_3(v, prior, 1.0,
                                                                  DivergenceSpecd::kl())));
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] kl analytical optimality: worst objective slack " << worst_slack
              << " (tol -1e-9), grid tv " << max_tv << " (tol 2e-3), " << elapsed
              << "s (budget 30s)\n";
    EXPECT_GE(worst_slack, -1e-9);
    EXPECT_LT(max_tv, 2e-3);
    EXPECT_LT(elapsed, 30.0);
}

// Criterion 4: the dual form reproduces the KL solution in the alpha -> 1
// limit (alpha in {0.99, 0.9}, temperature matched to the value spread) and
// the 1e-3-grid brute force at alpha = 0.5.
TEST(Acceptance, DualFormConsistency) {
    Stopwatch watch;
    std::mt19937_64 rng(2028);
    double limit_tv = 0;
    for (int inst = 0; inst < 25; ++inst) {
        const auto prior = testsup::random_simplex(rng, 4);
        const auto pm = row_map(prior);
        const auto v = testsup::random_vector(rng, 4, 0, 2);
        const double t = std::max(3.0 * (v.maxCoeff() - v.minCoeff()), 1.0);
        const auto kl = kl_soft_adversary(row_values(v, pm), pm, t);
        for (double alpha : {0.99, 0.9}) {
            const auto dual =
                dual_adversary(row_values(v, pm), pm, t, DivergenceSpecd::alpha_family(alpha));
            limit_tv = std::max(limit_tv, total_variation(kl[0], dual[0]));
        }
    }
    double grid_tv = 0;
    for (int inst = 0; inst < 3; ++inst) {
        const auto prior = testsup::random_simplex(rng, 3);
        const auto pm = row_map(prior);
        const auto v = testsup::random_vector(rng, 3, 0, 2);
        const DivergenceSpecd spec = DivergenceSpecd::alpha_family(0.5);
        const auto nu = dual_adversary(row_values(v, pm), pm, 1.0, spec);
        grid_tv = std::max(grid_tv, total_variation(nu[0], grid_minimizer_3(v, prior, 1.0, spec)));
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] dual-form consistency: kl-limit tv " << limit_tv
              << " (tol 1e-3), grid tv " << grid_tv << " (tol 2e-3), " << elapsed
              << "s (budget 60s)\n";
    EXPECT_LT(limit_tv, 1e-3);
    EXPECT_LT(grid_tv, 2e-3);
    EXPECT_LT(elapsed, 60.0);
}

// Criterion 5: policy improvement under a fixed adversary. The identity
// case carries the theorem and must clear -1e-8; soft adversaries are
// reported alongside.
TEST(Acceptance, PolicyImprovement) {
    Stopwatch watch;
    std::mt19937_64 rng(2029);
    double identity_gap = 1e300, soft_gap = 1e300;
    for (int inst = 0; inst < 20; ++inst) {
        const auto mdp = battery_mdp(500 + inst, rng);
        const auto pi_old = random_policy(rng, mdp.n_states, mdp.n_actions);
        const double alpha_ent = 0.3;

        const auto nu_id = identity_adversary(mdp.perturbation);
        const auto eval_id = evaluate_fixed_pair(mdp, pi_old, nu_id, alpha_ent);
        const auto pi_id = soft_policy_improvement(eval_id.q, mdp.perturbation, nu_id, alpha_ent);
        identity_gap = std::min(identity_gap,
                                improvement_audit(mdp, nu_id, pi_old, pi_id, alpha_ent).min_gap);

        const auto v = state_obs_value(eval_id.q, pi_old, mdp.perturbation, alpha_ent);
        const auto nu_soft = kl_soft_adversary(v, mdp.perturbation, 1.0);
        const auto eval_soft = evaluate_fixed_pair(mdp, pi_old, nu_soft, alpha_ent);
        const auto pi_soft =
            soft_policy_improvement(eval_soft.q, mdp.perturbation, nu_soft, alpha_ent);
        soft_gap = std::min(soft_gap,
                            improvement_audit(mdp, nu_soft, pi_old, pi_soft, alpha_ent).min_gap);
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] policy improvement: identity min gap " << identity_gap
              << " (tol -1e-8), soft min gap " << soft_gap << " (reported), " << elapsed
              << "s (budget 120s)\n";
    EXPECT_GE(identity_gap, -1e-8);
    EXPECT_LT(elapsed, 120.0);
}

// Criterion 6: mirror-descent fit of the variational adversary reaches the
// analytical solution within 1e-4 total variation in at most 500 steps.
TEST(Acceptance, VariationalAnalyticalEquivalence) {
    Stopwatch watch;
    std::mt19937_64 rng(2030);
    double max_tv = 0;
    for (int inst = 0; inst < 10; ++inst) {
        const auto mdp = battery_mdp(700 + inst, rng);
        const auto pi = random_policy(rng, mdp.n_states, mdp.n_actions);
        QTable<double> q(mdp.n_states, mdp.n_actions);
        for (Index s = 0; s < mdp.n_states; ++s)
            q.row(s) = testsup::random_vector(rng, mdp.n_actions, -8, 8).transpose();
        const auto params = make_params(0.2, 1.0);
        const auto fitted = valt_soft_variational_fit(q, pi, mdp.perturbation, params, 500, 0);
        const auto v = state_obs_value(q, pi, mdp.perturbation, params.alpha_ent);
        const auto analytical = kl_soft_adversary(v, mdp.perturbation, params.alpha_attk);
        for (Index s = 0; s < mdp.n_states; ++s)
            max_tv = std::max(max_tv, total_variation(fitted[s], analytical[s]));
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] variational equivalence: max tv " << max_tv << " (tol 1e-4), "
              << elapsed << "s (budget 30s)\n";
    EXPECT_LT(max_tv, 1e-4);
    EXPECT_LT(elapsed, 30.0);
}

// Criterion 7: the exact DP adversary is the strongest attack, per policy
// and model, across the battery.
TEST(Acceptance, AttackDominance) {
    Stopwatch watch;
    std::mt19937_64 rng(2031);
    double max_excess = -1e300;
    int comparisons = 0;
    for (int inst = 0; inst < 8; ++inst) {
        const auto mdp = battery_mdp(900 + inst, rng);
        const double alpha_ent = 0.1;
        const auto vi = vanilla_soft_vi(mdp, alpha_ent, 1e-12);
        TrainConfig<double> cfg;
        cfg.params = make_params(alpha_ent, 1.0);
        cfg.eval_sweeps_per_round = 100;
        cfg.improvement_rounds = 10;
        const auto valt = valt_train(mdp, cfg);
        for (const auto* pi : {&vi.pi, &valt.pi}) {
            const double j_opt = evaluate_under_attack(mdp, *pi, attack_optimal(mdp, *pi)).j;
            for (const auto& [name, make] : attack_registry<double>()) {
                max_excess = std::max(
                    max_excess, j_opt - evaluate_under_attack(mdp, *pi, make(mdp, *pi, alpha_ent)).j);
                ++comparisons;
            }
        }
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] attack dominance: worst excess " << max_excess << " over "
              << comparisons << " comparisons (tol 1e-8), " << elapsed << "s (budget 120s)\n";
    EXPECT_LE(max_excess, 1e-8);
    EXPECT_LT(elapsed, 120.0);
}

// Criterion 8: on the foggy two-bridges world, the robustly trained
// policies beat the clean baseline's worst case by at least 5% of the
// baseline's clean return, while the baseline keeps the better clean score.
TEST(Acceptance, RobustnessQualitativeReproduction) {
    Stopwatch watch;
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
    const double elapsed = watch.seconds();
    std::cout << "[criterion] robustness reproduction: vanilla clean " << clean_vanilla
              << " worst " << worst_vanilla << "; valt-kl worst " << worst_kl
              << "; valt-eps worst " << worst_eps << "; required " << required << ", " << elapsed
              << "s (budget 120s)\n";
    EXPECT_GE(worst_kl, required);
    EXPECT_GE(worst_eps, required);
    EXPECT_GE(clean_vanilla + 1e-9, clean_kl);
    EXPECT_GE(clean_vanilla + 1e-9, clean_eps);
    EXPECT_LT(elapsed, 120.0);
}

// Criterion 9: alternating exact best responses move the joint return the
// right way every round: the adversary never raises it, the agent never
// lowers it.
TEST(Acceptance, AtlaComparator) {
    Stopwatch watch;
    std::mt19937_64 rng(2032);
    double worst_violation = -1e300;
    for (int inst = 0; inst < 5; ++inst) {
        const auto mdp = battery_mdp(1100 + inst, rng);
        const auto result = atla_train(mdp, make_params(0.0, 1.0), 10);
        double previous = result.initial_j;
        for (const auto& rec : result.history) {
            worst_violation = std::max(worst_violation, rec.worst_j - previous);
            worst_violation = std::max(worst_violation, rec.worst_j - rec.clean_j);
            previous = rec.clean_j;
        }
    }
    const double elapsed = watch.seconds();
    std::cout << "[criterion] atla comparator: worst monotonicity violation " << worst_violation
              << " (tol 1e-9), " << elapsed << "s (budget 60s)\n";
    EXPECT_LE(worst_violation, 1e-9);
    EXPECT_LT(elapsed, 60.0);
}

// Criterion 10: the one-command battery itself: quick under a minute, full
// under fifteen, everything green.
TEST(Acceptance, EndToEndVerify) {
    Stopwatch quick_watch;
    const auto quick = samdp::harness::run_verification(1, samdp::harness::Scale::kQuick);
    const double quick_s = quick_watch.seconds();
    EXPECT_TRUE(samdp::harness::all_passed(quick))
        << samdp::harness::render_verification_report(quick);
    EXPECT_LT(quick_s, 60.0);

    Stopwatch full_watch;
    const auto full = samdp::harness::run_verification(1, samdp::harness::Scale::kFull);
    const double full_s = full_watch.seconds();
    EXPECT_TRUE(samdp::harness::all_passed(full))
        << samdp::harness::render_verification_report(full);
    EXPECT_LT(full_s, 900.0);

    std::cout << "[criterion] end-to-end verify: quick " << quick.size() << " checks in "
              << quick_s << "s (budget 60s), full in " << full_s << "s (budget 900s)\n";
}

}  // namespace
