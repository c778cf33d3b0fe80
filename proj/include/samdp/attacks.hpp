#pragma once

#include "samdp/best_response.hpp"

#include <functional>
#include <map>
#include <string>

namespace samdp {

/// Uniform substitution over each state's neighbor list.
template <typename Scalar>
AdversaryPolicy<Scalar> attack_uniform(const PerturbationMap<Scalar>& perturb) {
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s)
        nu[s] = VectorX<Scalar>::Constant(perturb.degree(s), Scalar(1) / Scalar(perturb.degree(s)));
    return nu;
}

/**
 * Max-action-difference attack: per state, the point mass on the
 * observation maximizing KL(pi(.|s) || pi(.|obs)). Infinite divergences win
 * the max; ties go to the lowest neighbor index, so an
 * observation-independent policy yields the identity adversary (the state
 * itself always sits at index 0).
 */
template <typename Scalar>
AdversaryPolicy<Scalar> attack_mad(const AgentPolicy<Scalar>& pi,
                                   const PerturbationMap<Scalar>& perturb) {
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) {
        VectorX<Scalar> div(perturb.degree(s));
        for (Index j = 0; j < perturb.degree(s); ++j)
            div(j) = kl_between_rows(pi.row(s), pi.row(perturb.neighbors[s][j]));
        nu[s] = VectorX<Scalar>::Zero(perturb.degree(s));
        nu[s](argmax_lowest(div)) = Scalar(1);
    }
    return nu;
}

/**
 * Greedy one-step value minimization: point mass on the observation
 * minimizing E_{pi(.|obs)}[q_clean(s,.)] plus the optional entropy term.
 * Exact tabular stand-in for a gradient attack on the critic.
 */
template <typename Scalar>
AdversaryPolicy<Scalar> attack_min_v(const AgentPolicy<Scalar>& pi, const QTable<Scalar>& q_clean,
                                     const PerturbationMap<Scalar>& perturb, Scalar alpha_ent) {
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) {
        VectorX<Scalar> v(perturb.degree(s));
        for (Index j = 0; j < perturb.degree(s); ++j) {
            const Index obs = perturb.neighbors[s][j];
            v(j) = pi.row(obs).dot(q_clean.row(s)) + alpha_ent * entropy(pi.row(obs));
        }
        nu[s] = VectorX<Scalar>::Zero(perturb.degree(s));
        nu[s](argmin_lowest(v)) = Scalar(1);
    }
    return nu;
}

/**
 * Exact optimal adversary: dynamic programming on the adversary's induced
 * MDP against the frozen policy; the true worst case, the benchmark every
 * heuristic attack is measured against.
 */
template <typename Scalar>
AdversaryPolicy<Scalar> attack_optimal(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                                       Scalar tol = Scalar(1e-12)) {
    if (!(tol > Scalar(0))) throw std::invalid_argument("attack_optimal: tol must be > 0");
    return solve_adversary_mdp(mdp, pi, tol).nu;
}

/// Attacked return and value table of the frozen policy under an adversary.
template <typename Scalar>
PairEvaluation<Scalar> evaluate_under_attack(const TabularSaMdp<Scalar>& mdp,
                                             const AgentPolicy<Scalar>& pi,
                                             const AdversaryPolicy<Scalar>& nu) {
    return joint_value(mdp, pi, nu);
}

/**
 * Name-keyed attack registry for the command line. Each entry builds its
 * adversary from the frozen policy; min_v first evaluates the policy's
 * clean Q exactly.
 */
template <typename Scalar>
using AttackFn = std::function<AdversaryPolicy<Scalar>(const TabularSaMdp<Scalar>&,
                                                       const AgentPolicy<Scalar>&, Scalar alpha_ent)>;

template <typename Scalar>
const std::map<std::string, AttackFn<Scalar>>& attack_registry() {
    static const std::map<std::string, AttackFn<Scalar>> registry = {
        {"uniform",
         [](const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>&, Scalar) {
             return attack_uniform(mdp.perturbation);
         }},
        {"mad",
         [](const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi, Scalar) {
             return attack_mad(pi, mdp.perturbation);
         }},
        {"min_v",
         [](const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi, Scalar alpha_ent) {
             const auto clean = evaluate_fixed_pair(mdp, pi, identity_adversary(mdp.perturbation),
                                                    alpha_ent);
             return attack_min_v(pi, clean.q, mdp.perturbation, alpha_ent);
         }},
        {"optimal", [](const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi, Scalar) {
             return attack_optimal(mdp, pi);
         }},
    };
    return registry;
}

}  // namespace samdp
