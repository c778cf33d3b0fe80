#include "samdp/improvement.hpp"

#include "samdp/generators.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace samdp;

namespace {

AgentPolicy<double> random_policy(std::mt19937_64& rng, Index ns, Index na) {
    AgentPolicy<double> pi(ns, na);
    for (Index s = 0; s < ns; ++s) pi.row(s) = testsup::random_simplex(rng, na).transpose();
    return pi;
}

TEST(SoftPolicyImprovement, IdentityAdversaryHandSoftmax) {
    QTable<double> q(1, 2);
    q << 1.0, 0.0;
    const auto pm = PerturbationMapd::identity(1);
    const auto nu = identity_adversary(pm);
    const auto pi = soft_policy_improvement(q, pm, nu, 1.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(pi(0, 0), e / (1.0 + e), 1e-5);
    EXPECT_NEAR(pi(0, 1), 1.0 / (1.0 + e), 1e-5);
    EXPECT_NEAR(pi.row(0).sum(), 1.0, 1e-12);
}

TEST(SoftPolicyImprovement, ConstantRowGivesUniform) {
    QTable<double> q = QTable<double>::Constant(2, 3, 4.0);
    const auto pm = PerturbationMapd::identity(2);
    const auto pi = soft_policy_improvement(q, pm, identity_adversary(pm), 0.7);
    for (Index s = 0; s < 2; ++s)
        for (Index a = 0; a < 3; ++a) EXPECT_NEAR(pi(s, a), 1.0 / 3.0, 1e-12);
}

TEST(SoftPolicyImprovement, ZeroTemperatureIsGreedy) {
    QTable<double> q(2, 3);
    q << 0.5, 2.0, 1.0,  //
        3.0, 3.0, -1.0;  // tie between actions 0 and 1: lowest index wins
    const auto pm = PerturbationMapd::identity(2);
    const auto pi = soft_policy_improvement(q, pm, identity_adversary(pm), 0.0);
    EXPECT_DOUBLE_EQ(pi(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(pi(1, 0), 1.0);
}

TEST(SoftPolicyImprovement, RowShiftInvariant) {
    std::mt19937_64 rng(8);
    QTable<double> q(3, 3);
    for (Index s = 0; s < 3; ++s) q.row(s) = testsup::random_vector(rng, 3, -2, 2).transpose();
    const auto pm = PerturbationMapd::identity(3);
    const auto nu = identity_adversary(pm);
    const auto a = soft_policy_improvement(q, pm, nu, 0.5);
    QTable<double> shifted = q;
    shifted.row(1).array() += 77.0;
    const auto b = soft_policy_improvement(shifted, pm, nu, 0.5);
    EXPECT_LT((a.row(1) - b.row(1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SoftPolicyImprovement, ZeroRegularizerCoefficientIsExactlyUnregularized) {
    std::mt19937_64 rng(12);
    const auto mdp = generate_random(3, 5, 3, 3, 0.9);
    QTable<double> q(5, 3);
    for (Index s = 0; s < 5; ++s) q.row(s) = testsup::random_vector(rng, 3, -4, 4).transpose();
    const auto nu = prior_adversary(mdp.perturbation);
    const auto plain = soft_policy_improvement(q, mdp.perturbation, nu, 0.4);
    const auto reg0 = soft_policy_improvement(q, mdp.perturbation, nu, 0.4, 0.0);
    EXPECT_EQ(plain, reg0);
}

TEST(SoftPolicyImprovement, RegularizerSmoothsAcrossNeighborhoods) {
    const auto mdp = generate_fog_bridges(1.0);
    std::mt19937_64 rng(44);
    QTable<double> q(mdp.n_states, mdp.n_actions);
    for (Index s = 0; s < mdp.n_states; ++s)
        q.row(s) = testsup::random_vector(rng, mdp.n_actions, -1, 1).transpose();
    const auto nu = prior_adversary(mdp.perturbation);
    const auto plain = soft_policy_improvement(q, mdp.perturbation, nu, 0.3, 0.0);
    const auto reg = soft_policy_improvement(q, mdp.perturbation, nu, 0.3, 10.0);
    EXPECT_LE(robust_regularizer(reg, mdp.perturbation).mean,
              robust_regularizer(plain, mdp.perturbation).mean + 1e-12);
}

TEST(SoftPolicyImprovement, IdentityAdversaryReducesToPerStateSoftmax) {
    std::mt19937_64 rng(31);
    const auto mdp = generate_random(77, 5, 3, 3, 0.85);
    QTable<double> q(5, 3);
    for (Index s = 0; s < 5; ++s) q.row(s) = testsup::random_vector(rng, 3, -4, 4).transpose();
    const auto pi = soft_policy_improvement(q, mdp.perturbation, identity_adversary(mdp.perturbation),
                                            0.6);
    for (Index s = 0; s < 5; ++s) {
        const VectorX<double> expected = softmax_row(q.row(s).transpose(), 0.6);
        EXPECT_LT((pi.row(s).transpose() - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ImprovementAudit, IdentityAdversaryBattery) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto mdp = generate_random(seed, 5, 3, 3, 0.9);
        std::mt19937_64 rng(seed * 7 + 1);
        const auto pi_old = random_policy(rng, 5, 3);
        const auto nu = identity_adversary(mdp.perturbation);
        const double alpha_ent = 0.3;
        const auto eval = evaluate_fixed_pair(mdp, pi_old, nu, alpha_ent);
        const auto pi_new = soft_policy_improvement(eval.q, mdp.perturbation, nu, alpha_ent);
        const auto audit = improvement_audit(mdp, nu, pi_old, pi_new, alpha_ent);
        EXPECT_GE(audit.min_gap, -1e-8) << "seed " << seed;
        EXPECT_FALSE(audit.regression) << "seed " << seed;
    }
}

TEST(ImprovementAudit, SoftAdversaryBatteryReported) {
    double worst_kl = std::numeric_limits<double>::infinity();
    double worst_eps = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto mdp = generate_random(seed, 5, 3, 3, 0.9);
        std::mt19937_64 rng(seed * 11 + 3);
        const auto pi_old = random_policy(rng, 5, 3);
        const double alpha_ent = 0.3;

        const auto clean = evaluate_fixed_pair(mdp, pi_old, identity_adversary(mdp.perturbation),
                                               alpha_ent);
        const auto v = state_obs_value(clean.q, pi_old, mdp.perturbation, alpha_ent);

        const auto nu_kl = kl_soft_adversary(v, mdp.perturbation, 1.0);
        const auto eval_kl = evaluate_fixed_pair(mdp, pi_old, nu_kl, alpha_ent);
        const auto pi_kl = soft_policy_improvement(eval_kl.q, mdp.perturbation, nu_kl, alpha_ent);
        worst_kl = std::min(worst_kl,
                            improvement_audit(mdp, nu_kl, pi_old, pi_kl, alpha_ent).min_gap);

        const auto nu_eps = epsilon_worst_adversary(v, mdp.perturbation, 0.5);
        const auto eval_eps = evaluate_fixed_pair(mdp, pi_old, nu_eps, alpha_ent);
        const auto pi_eps = soft_policy_improvement(eval_eps.q, mdp.perturbation, nu_eps, alpha_ent);
        worst_eps = std::min(worst_eps,
                             improvement_audit(mdp, nu_eps, pi_old, pi_eps, alpha_ent).min_gap);
    }
    RecordProperty("worst_kl_gap", std::to_string(worst_kl));
    RecordProperty("worst_eps_gap", std::to_string(worst_eps));
    std::cout << "soft-adversary audit gaps: kl " << worst_kl << ", eps " << worst_eps << "\n";
    EXPECT_GE(worst_kl, -1e-8);
    EXPECT_GE(worst_eps, -1e-8);
}

TEST(ImprovementAudit, SamePolicyGapIsZero) {
    const auto mdp = generate_random(5, 4, 2, 2, 0.9);
    std::mt19937_64 rng(9);
    const auto pi = random_policy(rng, 4, 2);
    const auto audit = improvement_audit(mdp, identity_adversary(mdp.perturbation), pi, pi, 0.2);
    EXPECT_NEAR(audit.min_gap, 0.0, 1e-10);
}

TEST(ImprovementAudit, DegradedPolicyIsFlagged) {
    const auto mdp = generate_random(15, 4, 3, 2, 0.9);
    std::mt19937_64 rng(2);
    const auto pi_old = random_policy(rng, 4, 3);
    const auto nu = identity_adversary(mdp.perturbation);
    const auto eval = evaluate_fixed_pair(mdp, pi_old, nu, 0.0);

    // shove all mass onto each state's worst action
    AgentPolicy<double> degraded = AgentPolicy<double>::Zero(4, 3);
    for (Index s = 0; s < 4; ++s) degraded(s, argmin_lowest(eval.q.row(s).transpose())) = 1.0;
    const auto audit = improvement_audit(mdp, nu, pi_old, degraded, 0.0);
    EXPECT_LT(audit.min_gap, 0.0);
    EXPECT_TRUE(audit.regression);
}

TEST(RobustRegularizer, ObservationIndependentPolicyIsZero) {
    const auto mdp = generate_fog_bridges(1.0);
    const auto pi = uniform_policy<double>(mdp.n_states, mdp.n_actions);
    const auto rep = robust_regularizer(pi, mdp.perturbation);
    EXPECT_EQ(rep.per_state.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(rep.mean, 0.0);
}

TEST(RobustRegularizer, SingletonNeighborhoodsAreZero) {
    std::mt19937_64 rng(77);
    const auto pm = PerturbationMapd::identity(4);
    const auto pi = random_policy(rng, 4, 3);
    EXPECT_EQ(robust_regularizer(pi, pm).mean, 0.0);
}

TEST(RobustRegularizer, HandKlValue) {
    AgentPolicy<double> pi(2, 2);
    pi << 0.9, 0.1,  //
        0.5, 0.5;
    PerturbationMapd pm = PerturbationMapd::identity(2);
    pm.neighbors[0] = {0, 1};
    pm.prior[0] = VectorX<double>::Constant(2, 0.5);
    const auto rep = robust_regularizer(pi, pm);
    const double expected = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
    EXPECT_NEAR(rep.per_state(0), expected, 1e-5);
    EXPECT_NEAR(rep.per_state(0), 0.36806, 1e-5);
    EXPECT_EQ(rep.per_state(1), 0.0);
}

TEST(RobustRegularizer, SupportMismatchReportsInfinity) {
    AgentPolicy<double> pi(2, 2);
    pi << 0.9, 0.1,  //
        1.0, 0.0;  // reference row has a zero where the state's row is positive
    PerturbationMapd pm = PerturbationMapd::identity(2);
    pm.neighbors[0] = {0, 1};
    pm.prior[0] = VectorX<double>::Constant(2, 0.5);
    const auto rep = robust_regularizer(pi, pm);
    EXPECT_TRUE(std::isinf(rep.per_state(0)));
}

}  // namespace
