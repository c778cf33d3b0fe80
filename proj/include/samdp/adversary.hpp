#pragma once

#include "samdp/divergence.hpp"
#include "samdp/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace samdp {

/// Which inner minimization backs a soft Bellman operator or extraction.
enum class SolverKind { kKl, kAlpha, kEps, kHard, kPrior };

inline const char* to_string(SolverKind k) {
    switch (k) {
        case SolverKind::kKl: return "kl";
        case SolverKind::kAlpha: return "alpha";
        case SolverKind::kEps: return "eps";
        case SolverKind::kHard: return "hard";
        case SolverKind::kPrior: return "prior";
    }
    return "?";
}

/**
 * Coefficient bundle for the soft operators: entropy weight, attack
 * temperature, divergence family, and the worst-observation atom mass used
 * by the epsilon solver. alpha_attk = 0 is the request for the
 * alpha_attk -> 0 limit: the dispatch layer routes it to the hard-worst
 * path instead of evaluating a singular formula.
 */
template <typename Scalar>
struct SoftParams {
    Scalar alpha_ent = Scalar(0);
    Scalar alpha_attk = Scalar(1);
    DivergenceSpec<Scalar> divergence = DivergenceSpec<Scalar>::kl();
    Scalar kappa_worst = Scalar(1);

    void check() const {
        if (!(alpha_ent >= Scalar(0))) throw std::invalid_argument("SoftParams: alpha_ent must be >= 0");
        if (!(alpha_attk >= Scalar(0))) throw std::invalid_argument("SoftParams: alpha_attk must be >= 0");
        if (!(kappa_worst >= Scalar(0) && kappa_worst <= Scalar(1)))
            throw std::invalid_argument("SoftParams: kappa_worst must lie in [0,1]");
        if (!spec_is_solvable())
            throw std::invalid_argument("SoftParams: alpha divergence requires alpha < 1");
    }
    bool spec_is_solvable() const {
        return divergence.is_kl() || divergence.alpha < Scalar(1) + Scalar(1e-12);
    }
};

using SoftParamsd = SoftParams<double>;

/// Per-(state, observation) value rows aligned with neighbors(s).
template <typename Scalar>
using StateObsValue = RowsOverNeighbors<Scalar>;

/**
 * V(s, obs) = E_{a ~ pi(.|obs)}[ q(s, a) ] + alpha_ent * H(pi(.|obs)):
 * what the agent is worth at true state s when shown obs instead.
 */
template <typename Scalar>
StateObsValue<Scalar> state_obs_value(const QTable<Scalar>& q, const AgentPolicy<Scalar>& pi,
                                      const PerturbationMap<Scalar>& perturb, Scalar alpha_ent) {
    const Index ns = perturb.n_states();
    if (q.rows() != ns || pi.rows() != ns || q.cols() != pi.cols())
        throw std::invalid_argument("state_obs_value: shape mismatch");
    VectorX<Scalar> policy_entropy(ns);
    for (Index o = 0; o < ns; ++o) policy_entropy(o) = entropy(pi.row(o));
    StateObsValue<Scalar> v(ns);
    for (Index s = 0; s < ns; ++s) {
        const auto& nb = perturb.neighbors[s];
        v[s].resize(perturb.degree(s));
        for (Index j = 0; j < perturb.degree(s); ++j) {
            const Index obs = nb[j];
            v[s](j) = pi.row(obs).dot(q.row(s)) + alpha_ent * policy_entropy(obs);
        }
    }
    return v;
}

/**
 * Analytical KL-penalized adversary: each row is the prior reweighted by
 * exp(-v/alpha_attk) and renormalized, the closed-form minimizer of
 * E_nu[v] + alpha_attk * KL(nu || prior).
 */
template <typename Scalar>
AdversaryPolicy<Scalar> kl_soft_adversary(const StateObsValue<Scalar>& v,
                                          const PerturbationMap<Scalar>& perturb, Scalar alpha_attk) {
    if (!(alpha_attk > Scalar(0)))
        throw std::invalid_argument("kl_soft_adversary: alpha_attk must be > 0");
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) nu[s] = softmin_reweight(v[s], perturb.prior[s], alpha_attk);
    return nu;
}

namespace adv_detail {

/**
 * Solves sum_j p_j * (f*)'((-v_j - lambda)/alpha) = 1 for lambda by bisection.
 * The row sum is strictly decreasing in lambda, exploding at the domain
 * boundary lambda_lo = max(-v) - alpha/(1-a) and vanishing as lambda grows,
 * so the root is bracketed by lambda_lo and a geometrically grown upper end.
 */
template <typename Scalar>
Scalar solve_dual_multiplier(const VectorX<Scalar>& v, const VectorX<Scalar>& p, Scalar alpha_attk,
                             const DivergenceSpec<Scalar>& spec, Index row, int max_iters = 200) {
    const Scalar a = spec.alpha;
    const Scalar neg_v_max = (-v).maxCoeff();
    const bool kl_limit = div_detail::near(a, Scalar(1));

    auto row_sum = [&](Scalar lambda) -> Scalar {
        Scalar s = 0;
        for (Index j = 0; j < v.size(); ++j) {
            const Scalar y = (-v(j) - lambda) / alpha_attk;
            if (!kl_limit && !(Scalar(1) + (a - Scalar(1)) * y > Scalar(0)))
                return std::numeric_limits<Scalar>::infinity();
            s += p(j) * conjugate_derivative(y, spec);
        }
        return s;
    };

    // The row sum is strictly decreasing in lambda, blowing up at the
    // conjugate's domain bound max(-v) - alpha_attk/(1-a) and vanishing as
    // lambda grows. Bisection only ever evaluates strictly inside the
    // bracket, so the lower end may sit on the pole itself; the KL limit has
    // no pole and any point far below the root serves.
    Scalar lo = kl_limit ? neg_v_max - alpha_attk * Scalar(40)
                         : neg_v_max - alpha_attk / (Scalar(1) - a);
    Scalar step = std::max(alpha_attk, Scalar(1));
    Scalar hi = lo + step;
    int grow = 0;
    while (!(row_sum(hi) < Scalar(1))) {
        hi += step;
        step *= Scalar(2);
        if (++grow > 200)
            throw std::runtime_error("dual_adversary: upper bracket growth failed on row " +
                                     std::to_string(static_cast<long long>(row)));
    }

    Scalar mid = hi;
    Scalar residual = std::numeric_limits<Scalar>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        mid = Scalar(0.5) * (lo + hi);
        const Scalar s = row_sum(mid);
        residual = std::abs(s - Scalar(1));
        if (residual <= Scalar(1e-10)) return mid;
        (s > Scalar(1) ? lo : hi) = mid;
    }
    if (residual > Scalar(1e-8))
        throw std::runtime_error("dual_adversary: bisection did not converge on row " +
                                 std::to_string(static_cast<long long>(row)) + ", residual " +
                                 std::to_string(double(residual)));
    return mid;
}

}  // namespace adv_detail

/**
 * Dual-form soft adversary for an alpha divergence (alpha < 1): each row is
 * prior_j * (f*)'((-v_j - lambda*)/alpha_attk) with lambda* found by
 * bisection so the row normalizes. The complementary-slackness term is zero
 * on the prior's support for alpha < 1, so no entry is clipped.
 */
template <typename Scalar>
AdversaryPolicy<Scalar> dual_adversary(const StateObsValue<Scalar>& v,
                                       const PerturbationMap<Scalar>& perturb, Scalar alpha_attk,
                                       const DivergenceSpec<Scalar>& spec) {
    if (!(alpha_attk > Scalar(0)))
        throw std::invalid_argument("dual_adversary: alpha_attk must be > 0");
    if (spec.is_kl() || !(spec.alpha < Scalar(1) + Scalar(1e-12)))
        throw std::invalid_argument("dual_adversary: requires an alpha divergence with alpha <= 1");
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) {
        const auto& p = perturb.prior[s];
        const Scalar lambda = adv_detail::solve_dual_multiplier(v[s], p, alpha_attk, spec, s);
        VectorX<Scalar> row(p.size());
        for (Index j = 0; j < p.size(); ++j)
            row(j) = p(j) * conjugate_derivative((-v[s](j) - lambda) / alpha_attk, spec);
        nu[s] = row / row.sum();
    }
    return nu;
}

/**
 * Epsilon-worst approximation: an atom of mass kappa_worst on the row
 * minimizer (lowest neighbor index on ties) plus a uniform remainder
 * (1-kappa)/m over all m neighbors. Rows sum to 1 exactly.
 */
template <typename Scalar>
AdversaryPolicy<Scalar> epsilon_worst_adversary(const StateObsValue<Scalar>& v,
                                                const PerturbationMap<Scalar>& perturb,
                                                Scalar kappa_worst) {
    if (!(kappa_worst >= Scalar(0) && kappa_worst <= Scalar(1)))
        throw std::invalid_argument("epsilon_worst_adversary: kappa_worst must lie in [0,1]");
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) {
        const Index m = perturb.degree(s);
        nu[s] = VectorX<Scalar>::Constant(m, (Scalar(1) - kappa_worst) / Scalar(m));
        nu[s](argmin_lowest(v[s])) += kappa_worst;
    }
    return nu;
}

/// Point mass on the per-row minimizer; the kappa = 1 / alpha_attk -> 0 oracle.
template <typename Scalar>
AdversaryPolicy<Scalar> hard_worst_adversary(const StateObsValue<Scalar>& v,
                                             const PerturbationMap<Scalar>& perturb) {
    const Index ns = perturb.n_states();
    AdversaryPolicy<Scalar> nu(ns);
    for (Index s = 0; s < ns; ++s) {
        nu[s] = VectorX<Scalar>::Zero(perturb.degree(s));
        nu[s](argmin_lowest(v[s])) = Scalar(1);
    }
    return nu;
}

/// The prior itself, unchanged; the alpha_attk -> infinity limit.
template <typename Scalar>
AdversaryPolicy<Scalar> prior_adversary(const PerturbationMap<Scalar>& perturb) {
    return perturb.prior;
}

/// Temperature-dependent solvers fall back to the hard-worst oracle when the
/// alpha_attk -> 0 limit is requested.
template <typename Scalar>
SolverKind effective_solver(SolverKind solver, const SoftParams<Scalar>& params) {
    const bool tempered = solver == SolverKind::kKl || solver == SolverKind::kAlpha;
    return tempered && !(params.alpha_attk > Scalar(0)) ? SolverKind::kHard : solver;
}

/**
 * Extraction used by the training loop: maps the configured solver to its
 * adversary distribution for the given value rows.
 */
template <typename Scalar>
AdversaryPolicy<Scalar> extract_adversary(const StateObsValue<Scalar>& v,
                                          const PerturbationMap<Scalar>& perturb,
                                          const SoftParams<Scalar>& params, SolverKind solver) {
    switch (effective_solver(solver, params)) {
        case SolverKind::kKl: return kl_soft_adversary(v, perturb, params.alpha_attk);
        case SolverKind::kAlpha: return dual_adversary(v, perturb, params.alpha_attk, params.divergence);
        case SolverKind::kEps: return epsilon_worst_adversary(v, perturb, params.kappa_worst);
        case SolverKind::kHard: return hard_worst_adversary(v, perturb);
        case SolverKind::kPrior: return prior_adversary(perturb);
    }
    throw std::logic_error("extract_adversary: unknown solver");
}

}  // namespace samdp
