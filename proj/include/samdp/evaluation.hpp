#pragma once

#include "samdp/adversary.hpp"
#include "samdp/model.hpp"

#include <Eigen/LU>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>

namespace samdp {

/**
 * The soft inner value at one state: the minimized objective
 * E_nu[v] + alpha_attk * D_f(nu || prior) for the kl/alpha solvers, and the
 * plain substituted expectation E_nu[v] for the eps/hard/prior solvers
 * (their distributions are fixed shapes, so the penalty adds nothing the
 * operator needs). The entropy bonus is carried inside v by
 * state_obs_value: it is the expected action entropy at the shown
 * observation. The observation entropy itself lives in the divergence
 * penalty; with a uniform prior an explicit observation-entropy bonus and
 * the KL penalty differ only by a constant, so adding one separately would
 * double-count.
 */
template <typename Scalar>
Scalar inner_worst_value(const VectorX<Scalar>& v, const VectorX<Scalar>& prior,
                         const SoftParams<Scalar>& params, SolverKind solver) {
    switch (effective_solver(solver, params)) {
        case SolverKind::kKl:
            return soft_min(v, prior, params.alpha_attk);
        case SolverKind::kAlpha: {
            const Scalar lambda = adv_detail::solve_dual_multiplier(v, prior, params.alpha_attk,
                                                                    params.divergence, Index(0));
            VectorX<Scalar> nu(v.size());
            for (Index j = 0; j < v.size(); ++j)
                nu(j) = prior(j) *
                        conjugate_derivative((-v(j) - lambda) / params.alpha_attk, params.divergence);
            nu /= nu.sum();
            return nu.dot(v) + params.alpha_attk * f_divergence(nu, prior, params.divergence);
        }
        case SolverKind::kEps:
            return params.kappa_worst * v.minCoeff() +
                   (Scalar(1) - params.kappa_worst) * v.mean();
        case SolverKind::kHard:
            return v.minCoeff();
        case SolverKind::kPrior:
            return prior.dot(v);
    }
    throw std::logic_error("inner_worst_value: unknown solver");
}

/// Mirrored inner value for the adversary side: the maximized objective over
/// the same family, equal to -inner_worst_value(-w) solver by solver.
template <typename Scalar>
Scalar inner_best_value(const VectorX<Scalar>& w, const VectorX<Scalar>& prior,
                        const SoftParams<Scalar>& params, SolverKind solver) {
    return -inner_worst_value<Scalar>((-w).eval(), prior, params, solver);
}

/**
 * Soft worst-case Bellman backup for the agent:
 * (T q)(s,a) = r(s,a) + gamma * sum_{s'} F(s'|s,a) * V(s'), where V(s') is
 * the solver's inner value over the observation rows of s'.
 */
template <typename Scalar>
QTable<Scalar> soft_worst_bellman_agent(const QTable<Scalar>& q, const TabularSaMdp<Scalar>& mdp,
                                        const AgentPolicy<Scalar>& pi, const SoftParams<Scalar>& params,
                                        SolverKind solver) {
    const Index ns = mdp.n_states, na = mdp.n_actions;
    const auto v = state_obs_value(q, pi, mdp.perturbation, params.alpha_ent);
    VectorX<Scalar> inner(ns);
    for (Index s = 0; s < ns; ++s)
        inner(s) = inner_worst_value(v[s], mdp.perturbation.prior[s], params, solver);
    QTable<Scalar> out(ns, na);
    for (Index s = 0; s < ns; ++s)
        for (Index a = 0; a < na; ++a)
            out(s, a) = mdp.reward(s, a) + mdp.gamma * mdp.transition_row(s, a).dot(inner);
    return out;
}

/**
 * Mirror backup for the adversary on Q(s, observation) rows:
 * (T qa)(s,obs) = c(s,obs) + gamma * E_{a ~ pi(.|obs)} E_{s' ~ F} [ W(s') ],
 * with c(s,obs) = E_{a ~ pi(.|obs)}[-r(s,a)] and W the maximized inner value
 * of w = qa - alpha_ent * H(pi) rows.
 */
template <typename Scalar>
AdvQTable<Scalar> soft_opt_bellman_adversary(const AdvQTable<Scalar>& qa,
                                             const TabularSaMdp<Scalar>& mdp,
                                             const AgentPolicy<Scalar>& pi,
                                             const SoftParams<Scalar>& params, SolverKind solver) {
    const Index ns = mdp.n_states, na = mdp.n_actions;
    const auto& pm = mdp.perturbation;
    VectorX<Scalar> policy_entropy(ns);
    for (Index o = 0; o < ns; ++o) policy_entropy(o) = entropy(pi.row(o));

    VectorX<Scalar> inner(ns);
    for (Index s = 0; s < ns; ++s) {
        VectorX<Scalar> w(pm.degree(s));
        for (Index j = 0; j < pm.degree(s); ++j)
            w(j) = qa[s](j) - params.alpha_ent * policy_entropy(pm.neighbors[s][j]);
        inner(s) = inner_best_value(w, pm.prior[s], params, solver);
    }

    AdvQTable<Scalar> out(ns);
    for (Index s = 0; s < ns; ++s) {
        out[s].resize(pm.degree(s));
        for (Index j = 0; j < pm.degree(s); ++j) {
            const Index obs = pm.neighbors[s][j];
            Scalar cost = 0, future = 0;
            for (Index a = 0; a < na; ++a) {
                const Scalar pa = pi(obs, a);
                if (pa == Scalar(0)) continue;
                cost -= pa * mdp.reward(s, a);
                future += pa * mdp.transition_row(s, a).dot(inner);
            }
            out[s](j) = cost + mdp.gamma * future;
        }
    }
    return out;
}

struct FixedPointReport {
    int iterations = 0;
    double final_residual = 0;
    bool converged = false;
};

struct FixedPointConfig {
    double tolerance = 1e-10;
    int max_iters = 10000;
};

template <typename Scalar>
Scalar sup_diff(const MatrixX<Scalar>& a, const MatrixX<Scalar>& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

template <typename Scalar>
Scalar sup_diff(const RowsOverNeighbors<Scalar>& a, const RowsOverNeighbors<Scalar>& b) {
    Scalar d = 0;
    for (std::size_t s = 0; s < a.size(); ++s) d = std::max(d, (a[s] - b[s]).cwiseAbs().maxCoeff());
    return d;
}

/// Iterates table = op(table) until the sup-norm residual drops below
/// tolerance or max_iters is hit; non-convergence is a flag, not an error.
template <typename Table, typename Op>
FixedPointReport fixed_point(Table& table, Op&& op, const FixedPointConfig& cfg = {}) {
    if (!(cfg.tolerance > 0) || cfg.max_iters < 1)
        throw std::invalid_argument("fixed_point: tolerance and max_iters must be positive");
    FixedPointReport report;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        Table next = op(table);
        const double residual = double(sup_diff(next, table));
        table = std::move(next);
        report.iterations = it;
        report.final_residual = residual;
        if (residual < cfg.tolerance) {
            report.converged = true;
            break;
        }
    }
    return report;
}

template <typename Scalar>
std::function<QTable<Scalar>(const QTable<Scalar>&)> make_agent_operator(
    const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi, const SoftParams<Scalar>& params,
    SolverKind solver) {
    return [&mdp, pi, params, solver](const QTable<Scalar>& q) {
        return soft_worst_bellman_agent(q, mdp, pi, params, solver);
    };
}

template <typename Scalar>
std::function<AdvQTable<Scalar>(const AdvQTable<Scalar>&)> make_adversary_operator(
    const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi, const SoftParams<Scalar>& params,
    SolverKind solver) {
    return [&mdp, pi, params, solver](const AdvQTable<Scalar>& qa) {
        return soft_opt_bellman_adversary(qa, mdp, pi, params, solver);
    };
}

template <typename Scalar>
AdvQTable<Scalar> zero_adv_table(const PerturbationMap<Scalar>& pm) {
    AdvQTable<Scalar> qa(pm.n_states());
    for (Index s = 0; s < pm.n_states(); ++s) qa[s] = VectorX<Scalar>::Zero(pm.degree(s));
    return qa;
}

template <typename Scalar>
MatrixX<Scalar> shift_table(const MatrixX<Scalar>& t, Scalar c) {
    return (t.array() + c).matrix();
}

template <typename Scalar>
RowsOverNeighbors<Scalar> shift_table(const RowsOverNeighbors<Scalar>& t, Scalar c) {
    RowsOverNeighbors<Scalar> out = t;
    for (auto& row : out) row.array() += c;
    return out;
}

/**
 * Empirical Lipschitz constant of an operator in the sup norm: the largest
 * ratio ||T(Q1)-T(Q2)|| / ||Q1-Q2|| over seeded random pairs with entries in
 * [-50, 50], plus one constant-offset pair per random table. The offset pair
 * attains the operators' supremum (they commute with constant shifts up to
 * the gamma factor), so a sound operator measures gamma exactly and an
 * inflated one is caught. Identical pairs are excluded by construction.
 */
template <typename Scalar, typename Op, typename MakeTable>
Scalar contraction_probe(Op&& op, MakeTable&& random_table, int n_pairs, std::uint64_t seed) {
    if (n_pairs < 1) throw std::invalid_argument("contraction_probe: n_pairs must be >= 1");
    std::mt19937_64 rng(seed);
    Scalar worst = 0;
    for (int k = 0; k < n_pairs; ++k) {
        auto q1 = random_table(rng);
        auto q2 = random_table(rng);
        Scalar denom = sup_diff<Scalar>(q1, q2);
        while (denom == Scalar(0)) {  // essentially impossible, but keep the ratio well-defined
            q2 = random_table(rng);
            denom = sup_diff<Scalar>(q1, q2);
        }
        const Scalar num = sup_diff<Scalar>(op(q1), op(q2));
        worst = std::max(worst, num / denom);

        const auto shifted = shift_table(q1, Scalar(1));
        worst = std::max(worst, sup_diff<Scalar>(op(q1), op(shifted)));
    }
    return worst;
}

namespace eval_detail {

template <typename Scalar>
Scalar uniform_between(std::mt19937_64& rng, Scalar lo, Scalar hi) {
    const Scalar u = Scalar((static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53);
    return lo + (hi - lo) * u;
}

}  // namespace eval_detail

template <typename Scalar>
auto random_q_sampler(Index n_states, Index n_actions, Scalar lo = Scalar(-50),
                      Scalar hi = Scalar(50)) {
    return [=](std::mt19937_64& rng) {
        QTable<Scalar> q(n_states, n_actions);
        for (Index s = 0; s < n_states; ++s)
            for (Index a = 0; a < n_actions; ++a) q(s, a) = eval_detail::uniform_between(rng, lo, hi);
        return q;
    };
}

template <typename Scalar>
auto random_adv_table_sampler(const PerturbationMap<Scalar>& pm, Scalar lo = Scalar(-50),
                              Scalar hi = Scalar(50)) {
    return [&pm, lo, hi](std::mt19937_64& rng) {
        AdvQTable<Scalar> qa(pm.n_states());
        for (Index s = 0; s < pm.n_states(); ++s) {
            qa[s].resize(pm.degree(s));
            for (Index j = 0; j < pm.degree(s); ++j) qa[s](j) = eval_detail::uniform_between(rng, lo, hi);
        }
        return qa;
    };
}

/// Agent-side Lipschitz measurement for the configured solver.
template <typename Scalar>
Scalar contraction_probe_agent(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                               const SoftParams<Scalar>& params, SolverKind solver, int n_pairs,
                               std::uint64_t seed) {
    return contraction_probe<Scalar>(make_agent_operator(mdp, pi, params, solver),
                                     random_q_sampler<Scalar>(mdp.n_states, mdp.n_actions), n_pairs,
                                     seed);
}

template <typename Scalar>
Scalar contraction_probe_adversary(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                                   const SoftParams<Scalar>& params, SolverKind solver, int n_pairs,
                                   std::uint64_t seed) {
    return contraction_probe<Scalar>(make_adversary_operator(mdp, pi, params, solver),
                                     random_adv_table_sampler<Scalar>(mdp.perturbation), n_pairs, seed);
}

/**
 * Runs both fixed points from zero initialization and returns the sup-norm
 * defect of V_adversary = -V_agent, the shared-fixed-point property of the
 * operator pair. Throws when either iteration fails to converge.
 */
template <typename Scalar>
Scalar symmetry_check(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                      const SoftParams<Scalar>& params, SolverKind solver,
                      const FixedPointConfig& cfg = {}) {
    QTable<Scalar> q = QTable<Scalar>::Zero(mdp.n_states, mdp.n_actions);
    const auto rep_q = fixed_point(q, make_agent_operator(mdp, pi, params, solver), cfg);
    AdvQTable<Scalar> qa = zero_adv_table(mdp.perturbation);
    const auto rep_qa = fixed_point(qa, make_adversary_operator(mdp, pi, params, solver), cfg);
    if (!rep_q.converged || !rep_qa.converged)
        throw std::runtime_error("symmetry_check: fixed-point iteration did not converge");

    const auto v = state_obs_value(q, pi, mdp.perturbation, params.alpha_ent);
    VectorX<Scalar> policy_entropy(mdp.n_states);
    for (Index o = 0; o < mdp.n_states; ++o) policy_entropy(o) = entropy(pi.row(o));

    Scalar defect = 0;
    for (Index s = 0; s < mdp.n_states; ++s) {
        const Scalar v_agent = inner_worst_value(v[s], mdp.perturbation.prior[s], params, solver);
        VectorX<Scalar> w(mdp.perturbation.degree(s));
        for (Index j = 0; j < mdp.perturbation.degree(s); ++j)
            w(j) = qa[s](j) - params.alpha_ent * policy_entropy(mdp.perturbation.neighbors[s][j]);
        const Scalar v_adv = inner_best_value(w, mdp.perturbation.prior[s], params, solver);
        defect = std::max(defect, std::abs(v_agent + v_adv));
    }
    return defect;
}

template <typename Scalar>
struct PairEvaluation {
    QTable<Scalar> q;
    VTable<Scalar> v;
    Scalar j = 0;
};

/**
 * Exact policy evaluation of the Markov chain induced by adversary then
 * policy, optionally with the entropy bonus inside the backup. Solves
 * (I - gamma P) V = r via a direct LU factorization and raises on an
 * unexpectedly large solve residual (cannot happen for gamma < 1).
 */
template <typename Scalar>
PairEvaluation<Scalar> evaluate_fixed_pair(const TabularSaMdp<Scalar>& mdp,
                                           const AgentPolicy<Scalar>& pi,
                                           const AdversaryPolicy<Scalar>& nu, Scalar alpha_ent) {
    const Index ns = mdp.n_states, na = mdp.n_actions;
    const auto& pm = mdp.perturbation;

    MatrixX<Scalar> action_weight = MatrixX<Scalar>::Zero(ns, na);  // pi compose nu at true states
    VectorX<Scalar> entropy_bonus = VectorX<Scalar>::Zero(ns);
    VectorX<Scalar> policy_entropy(ns);
    for (Index o = 0; o < ns; ++o) policy_entropy(o) = entropy(pi.row(o));
    for (Index s = 0; s < ns; ++s)
        for (Index j = 0; j < pm.degree(s); ++j) {
            const Scalar w = nu[s](j);
            if (w == Scalar(0)) continue;
            const Index obs = pm.neighbors[s][j];
            action_weight.row(s) += w * pi.row(obs);
            entropy_bonus(s) += w * alpha_ent * policy_entropy(obs);
        }

    MatrixX<Scalar> chain = MatrixX<Scalar>::Zero(ns, ns);
    VectorX<Scalar> r_eff(ns);
    for (Index s = 0; s < ns; ++s) {
        Scalar r = 0;
        for (Index a = 0; a < na; ++a) {
            const Scalar w = action_weight(s, a);
            if (w == Scalar(0)) continue;
            chain.row(s) += w * mdp.transition_row(s, a);
            r += w * mdp.reward(s, a);
        }
        r_eff(s) = r;
    }

    const MatrixX<Scalar> system =
        MatrixX<Scalar>::Identity(ns, ns) - mdp.gamma * chain;
    const VectorX<Scalar> rhs = r_eff + entropy_bonus;
    Eigen::PartialPivLU<MatrixX<Scalar>> lu(system);
    VectorX<Scalar> v = lu.solve(rhs);
    const Scalar residual = (system * v - rhs).cwiseAbs().maxCoeff();
    if (!(residual < Scalar(1e-10) * std::max(Scalar(1), rhs.cwiseAbs().maxCoeff())))
        throw std::runtime_error("evaluate_fixed_pair: linear solve residual too large");

    PairEvaluation<Scalar> out;
    out.v = v;
    out.j = mdp.initial_dist.dot(v);
    out.q.resize(ns, na);
    for (Index s = 0; s < ns; ++s)
        for (Index a = 0; a < na; ++a)
            out.q(s, a) = mdp.reward(s, a) + mdp.gamma * mdp.transition_row(s, a).dot(v);
    return out;
}

/// Plain discounted return of the (nu, pi) pair: V and J = <initial_dist, V>.
template <typename Scalar>
PairEvaluation<Scalar> joint_value(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                                   const AdversaryPolicy<Scalar>& nu) {
    return evaluate_fixed_pair(mdp, pi, nu, Scalar(0));
}

/// Normalized discounted state visitation (1-gamma) * sum_t gamma^t P(s_t = s),
/// solved exactly through the transposed chain system; sums to one.
template <typename Scalar>
VectorX<Scalar> discounted_visitation(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                                      const AdversaryPolicy<Scalar>& nu) {
    const Index ns = mdp.n_states, na = mdp.n_actions;
    const auto& pm = mdp.perturbation;
    MatrixX<Scalar> chain = MatrixX<Scalar>::Zero(ns, ns);
    for (Index s = 0; s < ns; ++s)
        for (Index j = 0; j < pm.degree(s); ++j) {
            const Scalar w = nu[s](j);
            if (w == Scalar(0)) continue;
            const Index obs = pm.neighbors[s][j];
            for (Index a = 0; a < na; ++a) {
                const Scalar pa = pi(obs, a);
                if (pa != Scalar(0)) chain.row(s) += w * pa * mdp.transition_row(s, a);
            }
        }
    const MatrixX<Scalar> system =
        MatrixX<Scalar>::Identity(ns, ns) - mdp.gamma * chain.transpose();
    VectorX<Scalar> rho = Eigen::PartialPivLU<MatrixX<Scalar>>(system).solve(mdp.initial_dist);
    rho *= (Scalar(1) - mdp.gamma);
    return rho;
}

/// Seeded Monte-Carlo estimate of J for a fixed (nu, pi) pair; the sampling
/// oracle behind the exact linear-solve evaluators.
template <typename Scalar>
struct RolloutEstimate {
    Scalar mean = 0;
    Scalar std_error = 0;
    long episodes = 0;
};

template <typename Scalar>
Index sample_categorical(std::mt19937_64& rng, const VectorX<Scalar>& probs) {
    const Scalar u = eval_detail::uniform_between(rng, Scalar(0), Scalar(1));
    Scalar acc = 0;
    for (Index i = 0; i < probs.size(); ++i) {
        acc += probs(i);
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

template <typename Scalar>
RolloutEstimate<Scalar> simulate_return(const TabularSaMdp<Scalar>& mdp, const AgentPolicy<Scalar>& pi,
                                        const AdversaryPolicy<Scalar>& nu, std::uint64_t seed,
                                        long total_steps, int horizon = 0,
                                        Scalar behavior_adv_ratio = Scalar(1)) {
    if (horizon <= 0)
        horizon = static_cast<int>(std::ceil(std::log(1e-12) / std::log(double(mdp.gamma))));
    std::mt19937_64 rng(seed);
    const auto& pm = mdp.perturbation;
    Scalar sum = 0, sum_sq = 0;
    long episodes = 0;
    for (long used = 0; used + horizon <= total_steps || episodes == 0; used += horizon) {
        Index s = sample_categorical(rng, mdp.initial_dist);
        Scalar ret = 0, discount = 1;
        for (int t = 0; t < horizon; ++t) {
            Index obs = s;
            if (behavior_adv_ratio >= Scalar(1) ||
                eval_detail::uniform_between(rng, Scalar(0), Scalar(1)) < behavior_adv_ratio)
                obs = pm.neighbors[s][sample_categorical(rng, nu[s])];
            const Index a = sample_categorical(rng, VectorX<Scalar>(pi.row(obs).transpose()));
            ret += discount * mdp.reward(s, a);
            discount *= mdp.gamma;
            s = sample_categorical(rng, VectorX<Scalar>(mdp.transition_row(s, a).transpose()));
        }
        sum += ret;
        sum_sq += ret * ret;
        ++episodes;
    }
    RolloutEstimate<Scalar> est;
    est.episodes = episodes;
    est.mean = sum / Scalar(episodes);
    if (episodes > 1) {
        const Scalar var = (sum_sq - sum * sum / Scalar(episodes)) / Scalar(episodes - 1);
        est.std_error = std::sqrt(std::max(var, Scalar(0)) / Scalar(episodes));
    }
    return est;
}

}  // namespace samdp
