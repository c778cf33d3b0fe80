#pragma once

#include "samdp/math.hpp"

#include <string>
#include <vector>

namespace samdp {

/// One dense row per state over that state's neighbor list (jagged layout).
template <typename Scalar>
using RowsOverNeighbors = std::vector<VectorX<Scalar>>;

/// Agent action-values Q(s, a), states by rows.
template <typename Scalar>
using QTable = MatrixX<Scalar>;

/// Adversary action-values Q(s, observation) over neighbors(s).
template <typename Scalar>
using AdvQTable = RowsOverNeighbors<Scalar>;

template <typename Scalar>
using VTable = VectorX<Scalar>;

/// Stochastic map from observations to action distributions, one row per observation.
/// Observations share the state index space.
template <typename Scalar>
using AgentPolicy = MatrixX<Scalar>;

/// Stochastic map from true states to observations, stored sparsely over neighbors(s).
template <typename Scalar>
using AdversaryPolicy = RowsOverNeighbors<Scalar>;

/**
 * Per-state perturbation neighborhoods with a prior over each.
 *
 * neighbors[s] lists the observations the adversary may substitute for s;
 * entry 0 is always s itself, which fixes every tie-break in the library.
 * prior[s] is a probability row over neighbors[s], positive everywhere on it.
 */
template <typename Scalar>
struct PerturbationMap {
    std::vector<std::vector<Index>> neighbors;
    RowsOverNeighbors<Scalar> prior;

    Index n_states() const { return static_cast<Index>(neighbors.size()); }
    Index degree(Index s) const { return static_cast<Index>(neighbors[s].size()); }

    static PerturbationMap identity(Index n_states) {
        PerturbationMap m;
        m.neighbors.resize(n_states);
        m.prior.resize(n_states);
        for (Index s = 0; s < n_states; ++s) {
            m.neighbors[s] = {s};
            m.prior[s] = VectorX<Scalar>::Ones(1);
        }
        return m;
    }
};

/**
 * Finite state-adversarial MDP. Observations are state indices, the true
 * dynamics are untouched by the adversary; only what the agent sees moves.
 *
 * transition is stacked (s * n_actions + a) rows by next-state columns,
 * reward is states by actions, both dense.
 */
template <typename Scalar>
struct TabularSaMdp {
    Index n_states = 0;
    Index n_actions = 0;
    MatrixX<Scalar> transition;
    MatrixX<Scalar> reward;
    Scalar gamma = Scalar(0.9);
    VectorX<Scalar> initial_dist;
    PerturbationMap<Scalar> perturbation;

    auto transition_row(Index s, Index a) const { return transition.row(s * n_actions + a); }
};

using TabularSaMdpd = TabularSaMdp<double>;
using PerturbationMapd = PerturbationMap<double>;

namespace detail {
inline std::string index_str(Index i) { return std::to_string(static_cast<long long>(i)); }
}  // namespace detail

/// Probability tolerance used by every stochasticity invariant in the library.
inline constexpr double kProbTol = 1e-9;

/**
 * Checks every structural invariant and returns one message per violation;
 * an empty report means the model is valid. Never throws, never mutates.
 */
template <typename Scalar>
std::vector<std::string> validate(const TabularSaMdp<Scalar>& mdp) {
    using detail::index_str;
    std::vector<std::string> report;
    const Index ns = mdp.n_states, na = mdp.n_actions;
    if (ns < 1) report.push_back("n_states must be >= 1");
    if (na < 1) report.push_back("n_actions must be >= 1");
    if (!(mdp.gamma > Scalar(0) && mdp.gamma < Scalar(1)))
        report.push_back("gamma must lie strictly inside (0,1)");
    if (!report.empty()) return report;

    if (mdp.transition.rows() != ns * na || mdp.transition.cols() != ns)
        report.push_back("transition must be (n_states*n_actions) x n_states");
    if (mdp.reward.rows() != ns || mdp.reward.cols() != na)
        report.push_back("reward must be n_states x n_actions");
    if (mdp.initial_dist.size() != ns) report.push_back("initial_dist must have n_states entries");
    if (!report.empty()) return report;

    if (!all_finite(mdp.reward)) report.push_back("reward contains non-finite entries");

    for (Index s = 0; s < ns; ++s) {
        for (Index a = 0; a < na; ++a) {
            const auto row = mdp.transition_row(s, a);
            if (!all_finite(row) || row.minCoeff() < Scalar(0)) {
                report.push_back("transition row (s=" + index_str(s) + ",a=" + index_str(a) +
                                 ") has a negative or non-finite entry");
                continue;
            }
            if (std::abs(double(row.sum()) - 1.0) > kProbTol)
                report.push_back("transition row (s=" + index_str(s) + ",a=" + index_str(a) +
                                 ") sums to " + std::to_string(double(row.sum())));
        }
    }

    if (mdp.initial_dist.minCoeff() < Scalar(0) ||
        std::abs(double(mdp.initial_dist.sum()) - 1.0) > kProbTol)
        report.push_back("initial_dist is not a probability distribution");

    const auto& pm = mdp.perturbation;
    if (pm.n_states() != ns || static_cast<Index>(pm.prior.size()) != ns) {
        report.push_back("perturbation map must cover every state");
        return report;
    }
    for (Index s = 0; s < ns; ++s) {
        const auto& nb = pm.neighbors[s];
        if (nb.empty()) {
            report.push_back("neighbor list of state " + index_str(s) + " is empty");
            continue;
        }
        if (nb.front() != s)
            report.push_back("neighbor list of state " + index_str(s) +
                             " must contain the state itself at index 0");
        for (Index j = 0; j < static_cast<Index>(nb.size()); ++j) {
            if (nb[j] < 0 || nb[j] >= ns)
                report.push_back("neighbor list of state " + index_str(s) +
                                 " references out-of-range state " + index_str(nb[j]));
            for (Index k = j + 1; k < static_cast<Index>(nb.size()); ++k)
                if (nb[j] == nb[k])
                    report.push_back("neighbor list of state " + index_str(s) +
                                     " contains duplicate entry " + index_str(nb[j]));
        }
        const auto& pr = pm.prior[s];
        if (pr.size() != static_cast<Index>(nb.size())) {
            report.push_back("prior of state " + index_str(s) + " does not match its neighbor list");
            continue;
        }
        if (pr.minCoeff() <= Scalar(0))
            report.push_back("prior of state " + index_str(s) +
                             " must be positive on the whole neighbor list");
        if (std::abs(double(pr.sum()) - 1.0) > kProbTol)
            report.push_back("prior of state " + index_str(s) + " sums to " +
                             std::to_string(double(pr.sum())));
    }
    return report;
}

/// Row-stochastic check used when accepting externally supplied policies.
template <typename Scalar>
bool is_valid_policy(const AgentPolicy<Scalar>& pi, Index n_states, Index n_actions) {
    if (pi.rows() != n_states || pi.cols() != n_actions) return false;
    for (Index s = 0; s < n_states; ++s) {
        if (pi.row(s).minCoeff() < Scalar(0)) return false;
        if (std::abs(double(pi.row(s).sum()) - 1.0) > kProbTol) return false;
    }
    return true;
}

template <typename Scalar>
bool is_valid_adversary(const AdversaryPolicy<Scalar>& nu, const PerturbationMap<Scalar>& pm) {
    if (static_cast<Index>(nu.size()) != pm.n_states()) return false;
    for (Index s = 0; s < pm.n_states(); ++s) {
        if (nu[s].size() != pm.degree(s)) return false;
        if (nu[s].minCoeff() < Scalar(0)) return false;
        if (std::abs(double(nu[s].sum()) - 1.0) > kProbTol) return false;
    }
    return true;
}

/// Uniform policy over actions for every observation.
template <typename Scalar>
AgentPolicy<Scalar> uniform_policy(Index n_states, Index n_actions) {
    return AgentPolicy<Scalar>::Constant(n_states, n_actions, Scalar(1) / Scalar(n_actions));
}

/// Point mass on the state itself (no perturbation).
template <typename Scalar>
AdversaryPolicy<Scalar> identity_adversary(const PerturbationMap<Scalar>& pm) {
    AdversaryPolicy<Scalar> nu(pm.n_states());
    for (Index s = 0; s < pm.n_states(); ++s) {
        nu[s] = VectorX<Scalar>::Zero(pm.degree(s));
        nu[s](0) = Scalar(1);  // index 0 is s itself
    }
    return nu;
}

}  // namespace samdp
