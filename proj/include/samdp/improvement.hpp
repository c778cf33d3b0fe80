#pragma once

#include "samdp/evaluation.hpp"

#include <limits>
#include <stdexcept>

namespace samdp {

/**
 * Per-observation aggregation of agent action-values under a fixed
 * adversary. An observation o may have been produced by any state whose
 * neighborhood contains o; the row is the Bayes posterior mix of those
 * states' Q rows, with weights proportional to nu_fix(o|s) under a uniform
 * prior over the candidate states. When no candidate emits o under nu_fix,
 * the weights fall back to uniform over the candidates. With the identity
 * adversary this reduces to q(o, .) exactly.
 */
template <typename Scalar>
MatrixX<Scalar> observation_q(const QTable<Scalar>& q, const PerturbationMap<Scalar>& perturb,
                              const AdversaryPolicy<Scalar>& nu_fix) {
    const Index ns = q.rows(), na = q.cols();
    MatrixX<Scalar> out = MatrixX<Scalar>::Zero(ns, na);
    VectorX<Scalar> mass = VectorX<Scalar>::Zero(ns);
    std::vector<std::vector<Index>> candidates(ns);
    for (Index s = 0; s < ns; ++s)
        for (Index j = 0; j < perturb.degree(s); ++j) {
            const Index obs = perturb.neighbors[s][j];
            candidates[obs].push_back(s);
            const Scalar w = nu_fix[s](j);
            out.row(obs) += w * q.row(s);
            mass(obs) += w;
        }
    for (Index o = 0; o < ns; ++o) {
        if (mass(o) > Scalar(0)) {
            out.row(o) /= mass(o);
        } else {
            out.row(o).setZero();
            for (Index s : candidates[o]) out.row(o) += q.row(s);
            out.row(o) /= Scalar(candidates[o].size());  // every o is its own neighbor
        }
    }
    return out;
}

/**
 * Max-entropy policy improvement against a fixed adversary: each
 * observation row becomes softmax(observation_q / alpha_ent), log-sum-exp
 * stabilized. alpha_ent = 0 routes to the greedy argmax with the lowest
 * action index winning ties.
 *
 * reg_coeff > 0 smooths the aggregated values across each observation's
 * neighborhood before the softmax (value-consensus form of the policy
 * consistency regularizer); coefficient 0 reproduces the unregularized
 * improvement exactly.
 */
template <typename Scalar>
AgentPolicy<Scalar> soft_policy_improvement(const QTable<Scalar>& q,
                                            const PerturbationMap<Scalar>& perturb,
                                            const AdversaryPolicy<Scalar>& nu_fix, Scalar alpha_ent,
                                            Scalar reg_coeff = Scalar(0)) {
    if (!(alpha_ent >= Scalar(0)))
        throw std::invalid_argument("soft_policy_improvement: alpha_ent must be >= 0");
    if (!(reg_coeff >= Scalar(0)))
        throw std::invalid_argument("soft_policy_improvement: reg_coeff must be >= 0");
    const Index ns = q.rows(), na = q.cols();
    MatrixX<Scalar> target = observation_q(q, perturb, nu_fix);
    if (reg_coeff > Scalar(0)) {
        MatrixX<Scalar> smoothed(ns, na);
        for (Index o = 0; o < ns; ++o) {
            Eigen::RowVectorX<Scalar> acc = Eigen::RowVectorX<Scalar>::Zero(na);
            for (Index j = 0; j < perturb.degree(o); ++j) acc += target.row(perturb.neighbors[o][j]);
            smoothed.row(o) =
                (target.row(o) + reg_coeff * acc / Scalar(perturb.degree(o))) / (Scalar(1) + reg_coeff);
        }
        target = std::move(smoothed);
    }

    AgentPolicy<Scalar> pi(ns, na);
    for (Index o = 0; o < ns; ++o) {
        if (alpha_ent > Scalar(0)) {
            pi.row(o) = softmax_row(target.row(o).transpose(), alpha_ent).transpose();
        } else {
            pi.row(o).setZero();
            pi(o, argmax_lowest(target.row(o).transpose())) = Scalar(1);
        }
    }
    return pi;
}

template <typename Scalar>
struct ImprovementAudit {
    Scalar min_gap = 0;        // min over (s,a) of Q_new - Q_old
    Scalar mean_gap = 0;
    bool regression = false;   // true when min_gap < -tolerance
};

/**
 * Verifies the improvement guarantee under a FIXED adversary: evaluates
 * both policies exactly (entropy-augmented backup, no inner minimization)
 * and reports the elementwise minimum of Q_new - Q_old. The audit reports;
 * it never assumes the theorem holds for the aggregation in use.
 */
template <typename Scalar>
ImprovementAudit<Scalar> improvement_audit(const TabularSaMdp<Scalar>& mdp,
                                           const AdversaryPolicy<Scalar>& nu_fix,
                                           const AgentPolicy<Scalar>& pi_old,
                                           const AgentPolicy<Scalar>& pi_new, Scalar alpha_ent,
                                           Scalar tolerance = Scalar(1e-8)) {
    const auto old_eval = evaluate_fixed_pair(mdp, pi_old, nu_fix, alpha_ent);
    const auto new_eval = evaluate_fixed_pair(mdp, pi_new, nu_fix, alpha_ent);
    const MatrixX<Scalar> gap = new_eval.q - old_eval.q;
    ImprovementAudit<Scalar> audit;
    audit.min_gap = gap.minCoeff();
    audit.mean_gap = gap.mean();
    audit.regression = audit.min_gap < -tolerance;
    return audit;
}

/**
 * Exact policy-consistency regularizer: per state, the maximum
 * KL(pi(.|s) || pi(.|obs)) over the state's neighbor list, and the mean of
 * those maxima. A support mismatch contributes +inf to its state rather
 * than throwing.
 */
template <typename Scalar>
struct RegularizerReport {
    VTable<Scalar> per_state;
    Scalar mean = 0;
};

template <typename Scalar>
RegularizerReport<Scalar> robust_regularizer(const AgentPolicy<Scalar>& pi,
                                             const PerturbationMap<Scalar>& perturb) {
    const Index ns = pi.rows();
    RegularizerReport<Scalar> report;
    report.per_state = VTable<Scalar>::Zero(ns);
    for (Index s = 0; s < ns; ++s) {
        Scalar worst = 0;
        for (Index j = 0; j < perturb.degree(s); ++j)
            worst = std::max(worst, kl_between_rows(pi.row(s), pi.row(perturb.neighbors[s][j])));
        report.per_state(s) = worst;
    }
    report.mean = report.per_state.mean();
    return report;
}

}  // namespace samdp
