#pragma once

#include "samdp/evaluation.hpp"
#include "samdp/improvement.hpp"

#include <stdexcept>

namespace samdp {

template <typename Scalar>
struct AdversaryBestResponse {
    AdversaryPolicy<Scalar> nu;   // deterministic, one point mass per state
    VTable<Scalar> value;         // adversary's value, i.e. -V of the induced pair
    Scalar j_against = 0;         // J[nu, pi], the agent's return under the response
};

/**
 * Exact best response of the adversary to a frozen policy. The adversary's
 * problem is a plain MDP: states s, actions = neighbor choices, reward
 * c(s, obs) = E_{a ~ pi(.|obs)}[-r(s,a)], transitions rolled through the
 * agent's action at the shown observation. Solved by Howard policy
 * iteration with exact linear-solve evaluation, so the returned greedy
 * adversary is optimal to solver precision. Ties go to the lowest neighbor
 * index; a switch must beat the incumbent by a strict margin so the
 * iteration terminates.
 */
template <typename Scalar>
AdversaryBestResponse<Scalar> solve_adversary_mdp(const TabularSaMdp<Scalar>& mdp,
                                                  const AgentPolicy<Scalar>& pi,
                                                  Scalar switch_margin = Scalar(1e-13),
                                                  int max_iters = 1000) {
    const Index ns = mdp.n_states, na = mdp.n_actions;
    const auto& pm = mdp.perturbation;

    // Per (s, neighbor j): adversary reward and induced next-state row.
    std::vector<VectorX<Scalar>> cost(ns);
    std::vector<MatrixX<Scalar>> next(ns);  // degree(s) x ns
    for (Index s = 0; s < ns; ++s) {
        const Index m = pm.degree(s);
        cost[s].resize(m);
        next[s] = MatrixX<Scalar>::Zero(m, ns);
        for (Index j = 0; j < m; ++j) {
            const Index obs = pm.neighbors[s][j];
            Scalar c = 0;
            for (Index a = 0; a < na; ++a) {
                const Scalar pa = pi(obs, a);
                if (pa == Scalar(0)) continue;
                c -= pa * mdp.reward(s, a);
                next[s].row(j) += pa * mdp.transition_row(s, a);
            }
            cost[s](j) = c;
        }
    }

    std::vector<Index> choice(ns, 0);
    VectorX<Scalar> value = VectorX<Scalar>::Zero(ns);
    for (int it = 0; it < max_iters; ++it) {
        MatrixX<Scalar> chain(ns, ns);
        VectorX<Scalar> c_vec(ns);
        for (Index s = 0; s < ns; ++s) {
            chain.row(s) = next[s].row(choice[s]);
            c_vec(s) = cost[s](choice[s]);
        }
        const MatrixX<Scalar> system = MatrixX<Scalar>::Identity(ns, ns) - mdp.gamma * chain;
        value = Eigen::PartialPivLU<MatrixX<Scalar>>(system).solve(c_vec);

        bool changed = false;
        for (Index s = 0; s < ns; ++s) {
            const VectorX<Scalar> q = cost[s] + mdp.gamma * (next[s] * value);
            const Index cand = argmax_lowest(q);
            if (cand != choice[s] && q(cand) > q(choice[s]) + switch_margin) {
                choice[s] = cand;
                changed = true;
            }
        }
        if (!changed) break;
    }

    AdversaryBestResponse<Scalar> out;
    out.nu.resize(ns);
    for (Index s = 0; s < ns; ++s) {
        out.nu[s] = VectorX<Scalar>::Zero(pm.degree(s));
        out.nu[s](choice[s]) = Scalar(1);
    }
    out.value = value;
    out.j_against = -mdp.initial_dist.dot(value);
    return out;
}

template <typename Scalar>
struct AgentBestResponse {
    AgentPolicy<Scalar> pi;
    Scalar j_soft = 0;   // the maximized objective (includes the entropy bonus)
    Scalar j_plain = 0;  // plain discounted return of the final policy
    int passes = 0;
};

/**
 * Monotone best-response search for the agent under a fixed adversary.
 * Because overlapping neighborhoods make the agent's problem partially
 * observed, single-sweep greedy updates carry no guarantee; instead each
 * proposed row change is evaluated exactly and accepted only when the
 * (entropy-augmented) return strictly improves, so the returned policy's
 * objective never falls below the initial policy's. Proposals: the full
 * aggregated greedy/softmax policy, then row-by-row candidates
 * (deterministic rows when alpha_ent = 0, the aggregated softmax row
 * otherwise).
 */
template <typename Scalar>
AgentBestResponse<Scalar> agent_best_response(const TabularSaMdp<Scalar>& mdp,
                                              const AdversaryPolicy<Scalar>& nu, Scalar alpha_ent,
                                              const AgentPolicy<Scalar>& pi_init, int max_passes = 200,
                                              Scalar accept_margin = Scalar(1e-12)) {
    const Index ns = mdp.n_states, na = mdp.n_actions;
    AgentBestResponse<Scalar> out;
    out.pi = pi_init;
    Scalar best = evaluate_fixed_pair(mdp, out.pi, nu, alpha_ent).j;

    auto try_accept = [&](const AgentPolicy<Scalar>& cand) {
        const Scalar j = evaluate_fixed_pair(mdp, cand, nu, alpha_ent).j;
        if (j > best + accept_margin) {
            out.pi = cand;
            best = j;
            return true;
        }
        return false;
    };

    for (int pass = 0; pass < max_passes; ++pass) {
        out.passes = pass + 1;
        bool improved = false;

        const auto eval = evaluate_fixed_pair(mdp, out.pi, nu, alpha_ent);
        improved |= try_accept(soft_policy_improvement(eval.q, mdp.perturbation, nu, alpha_ent));

        for (Index o = 0; o < ns; ++o) {
            const auto base = evaluate_fixed_pair(mdp, out.pi, nu, alpha_ent);
            if (alpha_ent > Scalar(0)) {
                const auto target = observation_q(base.q, mdp.perturbation, nu);
                AgentPolicy<Scalar> cand = out.pi;
                cand.row(o) = softmax_row(target.row(o).transpose(), alpha_ent).transpose();
                improved |= try_accept(cand);
            } else {
                for (Index a = 0; a < na; ++a) {
                    if (out.pi(o, a) == Scalar(1)) continue;
                    AgentPolicy<Scalar> cand = out.pi;
                    cand.row(o).setZero();
                    cand(o, a) = Scalar(1);
                    improved |= try_accept(cand);
                }
            }
        }
        if (!improved) break;
    }
    out.j_soft = best;
    out.j_plain = joint_value(mdp, out.pi, nu).j;
    return out;
}

}  // namespace samdp
