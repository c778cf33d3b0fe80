#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace samdp {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Shannon entropy of a probability row, natural log, 0*log(0) = 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& row) {
    using Scalar = typename Derived::Scalar;
    Scalar h = 0;
    for (Index i = 0; i < row.size(); ++i) {
        const Scalar p = row(i);
        if (p > Scalar(0)) h -= p * std::log(p);
    }
    return h;
}

/// KL divergence between two probability rows; +inf when the first row puts
/// mass where the second has none.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar kl_between_rows(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    if (a.size() != b.size()) throw std::invalid_argument("kl_between_rows: size mismatch");
    Scalar d = 0;
    for (Index i = 0; i < a.size(); ++i) {
        const Scalar p = a(i);
        if (p <= Scalar(0)) continue;
        if (b(i) <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
        d += p * (std::log(p) - std::log(b(i)));
    }
    return d;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar total_variation(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
    return typename DerivedA::Scalar(0.5) * (a - b).template lpNorm<1>();
}

/**
 * Weight-tempered soft minimum: -t * log(sum_i w_i * exp(-v_i / t)).
 *
 * Evaluated as v_min - t*log1p(sum_i w_i*expm1(-(v_i - v_min)/t)), which keeps
 * full relative precision both for very large t (where the value approaches
 * the weighted mean) and very small t (where it approaches the minimum).
 * Weights must form a probability row; the form renormalizes their sum to
 * exactly one, so a row summing to 1 +- eps costs nothing even at huge t.
 */
template <typename DerivedV, typename DerivedW>
typename DerivedV::Scalar soft_min(const Eigen::MatrixBase<DerivedV>& values,
                                   const Eigen::MatrixBase<DerivedW>& weights,
                                   typename DerivedV::Scalar temperature) {
    using Scalar = typename DerivedV::Scalar;
    if (values.size() != weights.size()) throw std::invalid_argument("soft_min: size mismatch");
    if (!(temperature > Scalar(0))) throw std::invalid_argument("soft_min: temperature must be > 0");
    const Scalar vmin = values.minCoeff();
    Scalar s = 0;
    for (Index i = 0; i < values.size(); ++i)
        s += weights(i) * std::expm1(-(values(i) - vmin) / temperature);
    return vmin - temperature * std::log1p(s);
}

/// Mirror of soft_min: +t * log(sum_i w_i * exp(+v_i / t)).
template <typename DerivedV, typename DerivedW>
typename DerivedV::Scalar soft_max(const Eigen::MatrixBase<DerivedV>& values,
                                   const Eigen::MatrixBase<DerivedW>& weights,
                                   typename DerivedV::Scalar temperature) {
    return -soft_min((-values).eval(), weights, temperature);
}

/// Counting-measure log-sum-exp, t * log(sum_i exp(v_i / t)), stabilized by
/// the maximum; the max-entropy value-iteration backup over actions.
template <typename Derived>
typename Derived::Scalar soft_max_counting(const Eigen::MatrixBase<Derived>& values,
                                           typename Derived::Scalar temperature) {
    using Scalar = typename Derived::Scalar;
    if (!(temperature > Scalar(0)))
        throw std::invalid_argument("soft_max_counting: temperature must be > 0");
    const Scalar vmax = values.maxCoeff();
    Scalar s = 0;
    for (Index i = 0; i < values.size(); ++i) s += std::exp((values(i) - vmax) / temperature);
    return vmax + temperature * std::log(s);
}

/// Boltzmann reweighting of a prior toward low values:
/// out_i proportional to w_i * exp(-v_i / t), normalized. Stabilized by the row minimum.
template <typename DerivedV, typename DerivedW>
VectorX<typename DerivedV::Scalar> softmin_reweight(const Eigen::MatrixBase<DerivedV>& values,
                                                    const Eigen::MatrixBase<DerivedW>& weights,
                                                    typename DerivedV::Scalar temperature) {
    using Scalar = typename DerivedV::Scalar;
    if (values.size() != weights.size())
        throw std::invalid_argument("softmin_reweight: size mismatch");
    if (!(temperature > Scalar(0)))
        throw std::invalid_argument("softmin_reweight: temperature must be > 0");
    const Scalar vmin = values.minCoeff();
    VectorX<Scalar> out(values.size());
    for (Index i = 0; i < values.size(); ++i)
        out(i) = weights(i) * std::exp(-(values(i) - vmin) / temperature);
    const Scalar z = out.sum();
    out /= z;
    return out;
}

/// Index of the smallest entry, lowest index winning ties.
template <typename Derived>
Index argmin_lowest(const Eigen::MatrixBase<Derived>& values) {
    Index best = 0;
    for (Index i = 1; i < values.size(); ++i)
        if (values(i) < values(best)) best = i;
    return best;
}

template <typename Derived>
Index argmax_lowest(const Eigen::MatrixBase<Derived>& values) {
    Index best = 0;
    for (Index i = 1; i < values.size(); ++i)
        if (values(i) > values(best)) best = i;
    return best;
}

/// Row-wise softmax of logits at the given temperature, stabilized by the row max.
template <typename Derived>
VectorX<typename Derived::Scalar> softmax_row(const Eigen::MatrixBase<Derived>& logits,
                                              typename Derived::Scalar temperature) {
    using Scalar = typename Derived::Scalar;
    if (!(temperature > Scalar(0))) throw std::invalid_argument("softmax_row: temperature must be > 0");
    const Scalar m = logits.maxCoeff();
    VectorX<Scalar> out(logits.size());
    for (Index i = 0; i < logits.size(); ++i) out(i) = std::exp((logits(i) - m) / temperature);
    out /= out.sum();
    return out;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace samdp
