#pragma once

#include "samdp/model.hpp"

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace samdp {

namespace detail {

/// Deterministic uniform double in (0,1); avoids distribution objects so the
/// stream is pinned to mt19937_64's standardized output.
inline double next_unit(std::mt19937_64& rng) {
    // 53 random bits, shifted into (0,1]; the +1 keeps log() finite.
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

inline Index next_index(std::mt19937_64& rng, Index bound) {
    return static_cast<Index>(rng() % static_cast<std::uint64_t>(bound));
}

}  // namespace detail

/**
 * Seeded random SA-MDP: transition rows from a flat Dirichlet, rewards
 * uniform in [-1,1], each neighborhood = the state plus (neighborhood_size-1)
 * distinct others, uniform prior, uniform initial distribution.
 * Pure in its arguments: equal inputs give bit-identical models.
 */
template <typename Scalar = double>
TabularSaMdp<Scalar> generate_random(std::uint64_t seed, Index n_states, Index n_actions,
                                     Index neighborhood_size, Scalar gamma) {
    if (n_states < 1 || n_actions < 1) throw std::invalid_argument("generate_random: sizes must be >= 1");
    if (neighborhood_size < 1 || neighborhood_size > n_states)
        throw std::invalid_argument("generate_random: neighborhood_size must be in [1, n_states]");
    if (!(gamma > Scalar(0) && gamma < Scalar(1)))
        throw std::invalid_argument("generate_random: gamma must lie in (0,1)");

    std::mt19937_64 rng(seed);
    TabularSaMdp<Scalar> mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.transition.resize(n_states * n_actions, n_states);
    mdp.reward.resize(n_states, n_actions);
    mdp.initial_dist = VectorX<Scalar>::Constant(n_states, Scalar(1) / Scalar(n_states));

    for (Index s = 0; s < n_states; ++s)
        for (Index a = 0; a < n_actions; ++a) {
            VectorX<Scalar> row(n_states);
            for (Index t = 0; t < n_states; ++t)
                row(t) = Scalar(-std::log(detail::next_unit(rng)));
            mdp.transition.row(s * n_actions + a) = row.transpose() / row.sum();
        }

    for (Index s = 0; s < n_states; ++s)
        for (Index a = 0; a < n_actions; ++a)
            mdp.reward(s, a) = Scalar(2.0 * detail::next_unit(rng) - 1.0);

    mdp.perturbation.neighbors.resize(n_states);
    mdp.perturbation.prior.resize(n_states);
    for (Index s = 0; s < n_states; ++s) {
        std::vector<Index> others;
        others.reserve(n_states - 1);
        for (Index t = 0; t < n_states; ++t)
            if (t != s) others.push_back(t);
        // partial Fisher-Yates, then sorted for a stable on-disk appearance
        for (Index i = 0; i + 1 < neighborhood_size; ++i)
            std::swap(others[i], others[i + detail::next_index(rng, static_cast<Index>(others.size()) - i)]);
        others.resize(neighborhood_size - 1);
        std::sort(others.begin(), others.end());

        auto& nb = mdp.perturbation.neighbors[s];
        nb.push_back(s);
        nb.insert(nb.end(), others.begin(), others.end());
        mdp.perturbation.prior[s] =
            VectorX<Scalar>::Constant(neighborhood_size, Scalar(1) / Scalar(neighborhood_size));
    }
    return mdp;
}

/**
 * Two-bridges gridworld. A start cell faces a ravine crossed by either a
 * short narrow bridge (two segments, each with crumbling left/right edges)
 * or a long wide bridge (four safe segments). Stepping outward or forward
 * from an edge cell drops into the ravine.
 *
 * State indexing (frozen, relied on by tests):
 *   0 start
 *   1 C1, 2 L1, 3 R1   narrow segment 1: center, left edge, right edge
 *   4 C2, 5 L2, 6 R2   narrow segment 2
 *   7..10 W1..W4       wide bridge segments
 *   11 goal (absorbing), 12 ravine (absorbing)
 * Actions: 0 forward, 1 left, 2 right.
 * Rewards: -0.02 per move, +1.0 for the move that reaches the goal,
 * -1.0 for any move that drops into the ravine; absorbing states yield 0.
 *
 * Fog widens the narrow-bridge neighborhoods:
 *   fog 0        every neighborhood is the singleton {s};
 *   fog in (0, 0.5)  centers additionally see their left edge, edges see the center;
 *   fog >= 0.5   centers see both edges (the maximal documented neighborhoods).
 * Priors are uniform over each neighborhood; gamma = 0.95; start is the
 * only initial state.
 */
template <typename Scalar = double>
TabularSaMdp<Scalar> generate_fog_bridges(Scalar fog_level) {
    constexpr Index kStart = 0;
    constexpr Index kC1 = 1, kL1 = 2, kR1 = 3;
    constexpr Index kC2 = 4, kL2 = 5, kR2 = 6;
    constexpr Index kW1 = 7, kW2 = 8, kW3 = 9, kW4 = 10;
    constexpr Index kGoal = 11, kRavine = 12;
    constexpr Index kNumStates = 13, kNumActions = 3;
    constexpr Index kForward = 0, kLeft = 1, kRight = 2;

    const Scalar step_cost = Scalar(-0.02);
    const Scalar goal_reward = Scalar(1.0);
    const Scalar fall_penalty = Scalar(-1.0);

    TabularSaMdp<Scalar> mdp;
    mdp.n_states = kNumStates;
    mdp.n_actions = kNumActions;
    mdp.gamma = Scalar(0.95);
    mdp.transition = MatrixX<Scalar>::Zero(kNumStates * kNumActions, kNumStates);
    mdp.reward = MatrixX<Scalar>::Constant(kNumStates, kNumActions, step_cost);
    mdp.initial_dist = VectorX<Scalar>::Zero(kNumStates);
    mdp.initial_dist(kStart) = Scalar(1);

    auto arc = [&](Index s, Index a, Index t, Scalar r) {
        mdp.transition(s * kNumActions + a, t) = Scalar(1);
        mdp.reward(s, a) = r;
    };
    auto move = [&](Index s, Index a, Index t) { arc(s, a, t, step_cost); };
    auto fall = [&](Index s, Index a) { arc(s, a, kRavine, fall_penalty); };

    move(kStart, kForward, kC1);
    move(kStart, kLeft, kW1);
    move(kStart, kRight, kStart);

    // narrow bridge: centers advance, edges must recover inward or drop
    move(kC1, kForward, kC2);
    move(kC1, kLeft, kL1);
    move(kC1, kRight, kR1);
    fall(kL1, kForward);
    fall(kL1, kLeft);
    move(kL1, kRight, kC1);
    fall(kR1, kForward);
    move(kR1, kLeft, kC1);
    fall(kR1, kRight);

    arc(kC2, kForward, kGoal, goal_reward);
    move(kC2, kLeft, kL2);
    move(kC2, kRight, kR2);
    fall(kL2, kForward);
    fall(kL2, kLeft);
    move(kL2, kRight, kC2);
    fall(kR2, kForward);
    move(kR2, kLeft, kC2);
    fall(kR2, kRight);

    // wide bridge: no hazard, just longer
    move(kW1, kForward, kW2);
    move(kW1, kLeft, kW1);
    move(kW1, kRight, kW1);
    move(kW2, kForward, kW3);
    move(kW2, kLeft, kW2);
    move(kW2, kRight, kW2);
    move(kW3, kForward, kW4);
    move(kW3, kLeft, kW3);
    move(kW3, kRight, kW3);
    arc(kW4, kForward, kGoal, goal_reward);
    move(kW4, kLeft, kW4);
    move(kW4, kRight, kW4);

    for (Index a = 0; a < kNumActions; ++a) {
        arc(kGoal, a, kGoal, Scalar(0));
        arc(kRavine, a, kRavine, Scalar(0));
    }

    mdp.perturbation = PerturbationMap<Scalar>::identity(kNumStates);
    auto set_neighbors = [&](Index s, std::vector<Index> nb) {
        const Index m = static_cast<Index>(nb.size());
        mdp.perturbation.neighbors[s] = std::move(nb);
        mdp.perturbation.prior[s] = VectorX<Scalar>::Constant(m, Scalar(1) / Scalar(m));
    };
    if (fog_level > Scalar(0)) {
        const bool heavy = fog_level >= Scalar(0.5);
        if (heavy) {
            set_neighbors(kC1, {kC1, kL1, kR1});
            set_neighbors(kC2, {kC2, kL2, kR2});
        } else {
            set_neighbors(kC1, {kC1, kL1});
            set_neighbors(kC2, {kC2, kL2});
        }
        set_neighbors(kL1, {kL1, kC1});
        set_neighbors(kR1, {kR1, kC1});
        set_neighbors(kL2, {kL2, kC2});
        set_neighbors(kR2, {kR2, kC2});
    }
    return mdp;
}

namespace fog_bridges {
// Frozen indices of the layout above, exported for tests and docs.
inline constexpr Index kStart = 0;
inline constexpr Index kNarrowCenter1 = 1, kNarrowLeft1 = 2, kNarrowRight1 = 3;
inline constexpr Index kNarrowCenter2 = 4, kNarrowLeft2 = 5, kNarrowRight2 = 6;
inline constexpr Index kWide1 = 7, kWide2 = 8, kWide3 = 9, kWide4 = 10;
inline constexpr Index kGoal = 11, kRavine = 12;
inline constexpr Index kActionForward = 0, kActionLeft = 1, kActionRight = 2;
}  // namespace fog_bridges

}  // namespace samdp
