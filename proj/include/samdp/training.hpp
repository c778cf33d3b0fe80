#pragma once

#include "samdp/best_response.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace samdp {

/// Per-round parameter schedule. Endpoints are hit exactly: value(0) = start
/// and value(rounds-1) = end, constant thereafter.
template <typename Scalar>
struct Schedule {
    enum class Kind { kConstant, kLinear, kGeometric };
    Kind kind = Kind::kConstant;
    Scalar start = 0;
    Scalar end = 0;
    int rounds = 1;

    static Schedule constant(Scalar v) { return {Kind::kConstant, v, v, 1}; }
    static Schedule linear(Scalar s, Scalar e, int r) { return {Kind::kLinear, s, e, r}; }
    static Schedule geometric(Scalar s, Scalar e, int r) { return {Kind::kGeometric, s, e, r}; }

    void check() const {
        if (rounds < 1) throw std::invalid_argument("Schedule: rounds must be >= 1");
        if (kind == Kind::kGeometric && !(start > Scalar(0) && end > Scalar(0)))
            throw std::invalid_argument("Schedule: geometric endpoints must be positive");
    }

    Scalar at(int t) const {
        if (kind == Kind::kConstant || rounds <= 1 || t >= rounds - 1) return kind == Kind::kConstant ? start : end;
        if (t <= 0) return start;
        const Scalar frac = Scalar(t) / Scalar(rounds - 1);
        if (kind == Kind::kLinear) return start + (end - start) * frac;
        return start * std::pow(end / start, frac);
    }
};

template <typename Scalar>
struct TrainConfig {
    SolverKind solver = SolverKind::kKl;
    SoftParams<Scalar> params;
    int eval_sweeps_per_round = 100;
    int improvement_rounds = 20;
    std::optional<Schedule<Scalar>> kappa_schedule;       // defaults to params.kappa_worst
    std::optional<Schedule<Scalar>> alpha_attk_schedule;  // defaults to params.alpha_attk
    Scalar regularizer_coeff = Scalar(0);
    Scalar behavior_adv_ratio = Scalar(1);  // consumed by the Monte-Carlo evaluation path only

    void check() const {
        params.check();
        if (eval_sweeps_per_round < 1 || improvement_rounds < 1)
            throw std::invalid_argument("TrainConfig: counts must be >= 1");
        if (kappa_schedule) kappa_schedule->check();
        if (alpha_attk_schedule) alpha_attk_schedule->check();
        if (!(regularizer_coeff >= Scalar(0)))
            throw std::invalid_argument("TrainConfig: regularizer_coeff must be >= 0");
        if (!(behavior_adv_ratio >= Scalar(0) && behavior_adv_ratio <= Scalar(1)))
            throw std::invalid_argument("TrainConfig: behavior_adv_ratio must lie in [0,1]");
    }
};

template <typename Scalar>
struct RoundRecord {
    int round = 0;
    Scalar clean_j = 0;       // J against the identity adversary
    Scalar worst_j = 0;       // J against the exact optimal adversary
    Scalar residual = 0;      // sup-norm residual of the last evaluation sweep
    Scalar regularizer = 0;   // mean of the per-state max-KL consistency term
    Scalar policy_delta = 0;  // max-row total variation from the previous policy
    Scalar kappa = 0;
    Scalar alpha_attk = 0;
};

template <typename Scalar>
struct TrainResult {
    AgentPolicy<Scalar> pi;
    QTable<Scalar> q;
    AdversaryPolicy<Scalar> nu;
    std::vector<RoundRecord<Scalar>> history;
    Scalar initial_j = 0;
    bool converged_early = false;
};

template <typename Scalar>
Scalar max_row_total_variation(const AgentPolicy<Scalar>& a, const AgentPolicy<Scalar>& b) {
    Scalar worst = 0;
    for (Index s = 0; s < a.rows(); ++s) worst = std::max(worst, total_variation(a.row(s), b.row(s)));
    return worst;
}

/**
 * Virtual-alternative training loop, exact-DP form: repeated soft
 * worst-case evaluation sweeps, adversary extraction straight from the
 * current Q (no adversary learner), then max-entropy improvement with that
 * adversary held fixed. Schedules move kappa and the attack temperature per
 * round; the loop stops early once successive policies differ by less than
 * 1e-9 total variation. Deterministic in (mdp, cfg).
 */
template <typename Scalar>
TrainResult<Scalar> valt_train(const TabularSaMdp<Scalar>& mdp, const TrainConfig<Scalar>& cfg) {
    cfg.check();
    const Scalar policy_stop_tv = Scalar(1e-9);
    TrainResult<Scalar> result;
    result.pi = uniform_policy<Scalar>(mdp.n_states, mdp.n_actions);
    result.q = QTable<Scalar>::Zero(mdp.n_states, mdp.n_actions);
    const auto identity_nu = identity_adversary(mdp.perturbation);
    result.initial_j = joint_value(mdp, result.pi, identity_nu).j;

    for (int round = 0; round < cfg.improvement_rounds; ++round) {
        SoftParams<Scalar> params = cfg.params;
        if (cfg.kappa_schedule) params.kappa_worst = cfg.kappa_schedule->at(round);
        if (cfg.alpha_attk_schedule) params.alpha_attk = cfg.alpha_attk_schedule->at(round);

        Scalar residual = 0;
        for (int sweep = 0; sweep < cfg.eval_sweeps_per_round; ++sweep) {
            QTable<Scalar> next = soft_worst_bellman_agent(result.q, mdp, result.pi, params, cfg.solver);
            residual = sup_diff(next, result.q);
            result.q = std::move(next);
        }

        const auto v = state_obs_value(result.q, result.pi, mdp.perturbation, params.alpha_ent);
        result.nu = extract_adversary(v, mdp.perturbation, params, cfg.solver);
        AgentPolicy<Scalar> pi_new = soft_policy_improvement(
            result.q, mdp.perturbation, result.nu, params.alpha_ent, cfg.regularizer_coeff);

        RoundRecord<Scalar> rec;
        rec.round = round;
        rec.clean_j = joint_value(mdp, pi_new, identity_nu).j;
        rec.worst_j = solve_adversary_mdp(mdp, pi_new).j_against;
        rec.residual = residual;
        rec.regularizer = robust_regularizer(pi_new, mdp.perturbation).mean;
        rec.policy_delta = max_row_total_variation(pi_new, result.pi);
        rec.kappa = params.kappa_worst;
        rec.alpha_attk = params.alpha_attk;
        result.history.push_back(rec);

        result.pi = std::move(pi_new);
        if (rec.policy_delta < policy_stop_tv) {
            result.converged_early = true;
            break;
        }
    }
    return result;
}

/**
 * Variational route to the analytical adversary: exponentiated-gradient
 * steps on the KL fit objective, step size 0.5 on the temperature-scaled
 * loss, logits reset to uniform every reset_period steps (0 disables
 * resets). Converges geometrically to the analytical reweighting; exists to
 * exercise that equivalence, not to replace the closed form.
 */
template <typename Scalar>
AdversaryPolicy<Scalar> valt_soft_variational_fit(const QTable<Scalar>& q,
                                                  const AgentPolicy<Scalar>& pi,
                                                  const PerturbationMap<Scalar>& perturb,
                                                  const SoftParams<Scalar>& params, int steps,
                                                  int reset_period = 0) {
    if (steps < 1) throw std::invalid_argument("valt_soft_variational_fit: steps must be >= 1");
    const Scalar step_size = Scalar(0.5);
    const auto v = state_obs_value(q, pi, perturb, params.alpha_ent);
    const Index ns = perturb.n_states();
    RowsOverNeighbors<Scalar> logits(ns);
    for (Index s = 0; s < ns; ++s) logits[s] = VectorX<Scalar>::Zero(perturb.degree(s));

    auto current = [&](Index s) { return softmax_row(logits[s], Scalar(1)); };

    for (int t = 1; t <= steps; ++t) {
        for (Index s = 0; s < ns; ++s) {
            const VectorX<Scalar> nu = current(s);
            for (Index j = 0; j < perturb.degree(s); ++j) {
                const Scalar grad = std::log(nu(j)) - std::log(perturb.prior[s](j)) +
                                    v[s](j) / params.alpha_attk;
                logits[s](j) -= step_size * grad;
            }
        }
        if (reset_period > 0 && t % reset_period == 0)
            for (Index s = 0; s < ns; ++s) logits[s].setZero();
    }

    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) nu[s] = current(s);
    return nu;
}

/**
 * Idealized alternating training: exact adversary best response (policy
 * iteration on the adversary's MDP), then a monotone agent response under
 * the frozen adversary. Each round records J right after the adversary move
 * (worst_j) and right after the agent move (clean_j), so the best-response
 * contract is auditable from the history: worst_j[t] <= clean_j[t-1] and
 * clean_j[t] >= worst_j[t]. Cycling across rounds is expected and simply
 * shows up in the history.
 */
template <typename Scalar>
TrainResult<Scalar> atla_train(const TabularSaMdp<Scalar>& mdp, const SoftParams<Scalar>& params,
                               int outer_rounds) {
    if (outer_rounds < 1) throw std::invalid_argument("atla_train: outer_rounds must be >= 1");
    TrainResult<Scalar> result;
    result.pi = uniform_policy<Scalar>(mdp.n_states, mdp.n_actions);
    result.nu = identity_adversary(mdp.perturbation);
    result.initial_j = joint_value(mdp, result.pi, result.nu).j;

    for (int round = 0; round < outer_rounds; ++round) {
        const auto response = solve_adversary_mdp(mdp, result.pi);
        result.nu = response.nu;
        const Scalar j_after_adv = response.j_against;

        const auto agent = agent_best_response(mdp, result.nu, params.alpha_ent, result.pi);
        result.pi = agent.pi;

        RoundRecord<Scalar> rec;
        rec.round = round;
        rec.worst_j = j_after_adv;
        rec.clean_j = joint_value(mdp, result.pi, result.nu).j;
        rec.regularizer = robust_regularizer(result.pi, mdp.perturbation).mean;
        rec.policy_delta = Scalar(0);
        rec.kappa = params.kappa_worst;
        rec.alpha_attk = params.alpha_attk;
        result.history.push_back(rec);
    }
    const auto eval = evaluate_fixed_pair(mdp, result.pi, result.nu, params.alpha_ent);
    result.q = eval.q;
    return result;
}

/**
 * Max-entropy value iteration on the unperturbed model; the clean,
 * non-robust baseline. alpha_ent = 0 degenerates to classical value
 * iteration with a greedy policy.
 */
template <typename Scalar>
TrainResult<Scalar> vanilla_soft_vi(const TabularSaMdp<Scalar>& mdp, Scalar alpha_ent, Scalar tol,
                                    int max_iters = 100000) {
    if (!(tol > Scalar(0))) throw std::invalid_argument("vanilla_soft_vi: tol must be > 0");
    const Index ns = mdp.n_states, na = mdp.n_actions;
    VectorX<Scalar> value = VectorX<Scalar>::Zero(ns);
    QTable<Scalar> q = QTable<Scalar>::Zero(ns, na);
    Scalar residual = 0;
    for (int it = 0; it < max_iters; ++it) {
        for (Index s = 0; s < ns; ++s)
            for (Index a = 0; a < na; ++a)
                q(s, a) = mdp.reward(s, a) + mdp.gamma * mdp.transition_row(s, a).dot(value);
        VectorX<Scalar> next(ns);
        for (Index s = 0; s < ns; ++s)
            next(s) = alpha_ent > Scalar(0) ? soft_max_counting(q.row(s).transpose(), alpha_ent)
                                            : q.row(s).maxCoeff();
        residual = (next - value).cwiseAbs().maxCoeff();
        value = std::move(next);
        if (residual < tol) break;
    }

    TrainResult<Scalar> result;
    result.q = q;
    result.pi.resize(ns, na);
    for (Index s = 0; s < ns; ++s) {
        if (alpha_ent > Scalar(0)) {
            result.pi.row(s) = softmax_row(q.row(s).transpose(), alpha_ent).transpose();
        } else {
            result.pi.row(s).setZero();
            result.pi(s, argmax_lowest(q.row(s).transpose())) = Scalar(1);
        }
    }
    result.nu = identity_adversary(mdp.perturbation);
    RoundRecord<Scalar> rec;
    rec.round = 0;
    rec.clean_j = joint_value(mdp, result.pi, result.nu).j;
    rec.worst_j = solve_adversary_mdp(mdp, result.pi).j_against;
    rec.residual = residual;
    rec.regularizer = robust_regularizer(result.pi, mdp.perturbation).mean;
    result.history.push_back(rec);
    result.initial_j = rec.clean_j;
    result.converged_early = residual < tol;
    return result;
}

/**
 * Distance of a (pi, nu) pair from the Nash condition on the plain return:
 * how much the agent could still gain against nu, and how much the
 * adversary could still take from pi, both through exact responses. Both
 * gaps are nonnegative up to solver precision.
 */
template <typename Scalar>
struct EquilibriumGap {
    Scalar agent_gap = 0;
    Scalar adversary_gap = 0;
};

template <typename Scalar>
EquilibriumGap<Scalar> equilibrium_gap(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                                       const AdversaryPolicy<Scalar>& nu, Scalar alpha_ent = Scalar(0)) {
    const Scalar j = joint_value(mdp, pi, nu).j;
    EquilibriumGap<Scalar> gap;
    gap.agent_gap = agent_best_response(mdp, nu, alpha_ent, pi).j_plain - j;
    gap.adversary_gap = j - solve_adversary_mdp(mdp, pi).j_against;
    return gap;
}

}  // namespace samdp
