#pragma once

#include "samdp/math.hpp"

#include <cmath>
#include <stdexcept>

namespace samdp {

/**
 * Divergence family used for the soft constraint. KL is a dedicated branch
 * with generator f(x) = x*log(x); the alpha family uses
 *
 *   f_a(x) = ((x^a - 1) - a(x - 1)) / (a(a - 1)),
 *
 * whose a -> 1 limit is KL and a -> 0 limit is reverse KL. Those two
 * endpoints are evaluated through closed-form limit branches rather than the
 * singular formula. The dual-form solver requires a < 1.
 */
template <typename Scalar>
struct DivergenceSpec {
    enum class Kind { kKl, kAlpha };
    Kind kind = Kind::kKl;
    Scalar alpha = Scalar(1);

    static DivergenceSpec kl() { return {Kind::kKl, Scalar(1)}; }
    static DivergenceSpec alpha_family(Scalar a) { return {Kind::kAlpha, a}; }
    bool is_kl() const { return kind == Kind::kKl; }
};

using DivergenceSpecd = DivergenceSpec<double>;

namespace div_detail {

template <typename Scalar>
bool near(Scalar a, Scalar b) {
    return std::abs(a - b) < Scalar(1e-12);
}

/// f_a(x) with the a in {0,1} limit branches.
template <typename Scalar>
Scalar alpha_generator(Scalar x, Scalar a) {
    if (near(a, Scalar(1))) return x * std::log(x) - (x - Scalar(1));
    if (near(a, Scalar(0))) return (x - Scalar(1)) - std::log(x);
    return ((std::pow(x, a) - Scalar(1)) - a * (x - Scalar(1))) / (a * (a - Scalar(1)));
}

template <typename Scalar>
Scalar alpha_generator_prime(Scalar x, Scalar a) {
    if (near(a, Scalar(1))) return std::log(x);
    if (near(a, Scalar(0))) return Scalar(1) - Scalar(1) / x;
    return (std::pow(x, a - Scalar(1)) - Scalar(1)) / (a - Scalar(1));
}

}  // namespace div_detail

/// Derivative of the divergence generator, (f)'(x) for x > 0. KL branch uses
/// f(x) = x*log(x), so f'(x) = log(x) + 1.
template <typename Scalar>
Scalar generator_derivative(Scalar x, const DivergenceSpec<Scalar>& spec) {
    if (!(x > Scalar(0))) throw std::invalid_argument("generator_derivative: x must be > 0");
    if (spec.is_kl()) return std::log(x) + Scalar(1);
    return div_detail::alpha_generator_prime(x, spec.alpha);
}

/**
 * Derivative of the convex conjugate, (f*)'(y) = (f')^{-1}(y).
 *
 * KL branch: exp(y - 1). Alpha branch: (1 + (a-1)y)^{1/(a-1)}, defined on
 * (1-a)y < 1; the a -> 1 limit is exp(y) and the a -> 0 limit 1/(1-y).
 */
template <typename Scalar>
Scalar conjugate_derivative(Scalar y, const DivergenceSpec<Scalar>& spec) {
    if (spec.is_kl()) return std::exp(y - Scalar(1));
    const Scalar a = spec.alpha;
    if (div_detail::near(a, Scalar(1))) return std::exp(y);
    const Scalar base = Scalar(1) + (a - Scalar(1)) * y;
    if (!(base > Scalar(0)))
        throw std::domain_error("conjugate_derivative: (1-alpha)*y >= 1 is outside the domain");
    if (div_detail::near(a, Scalar(0))) return Scalar(1) / base;
    return std::pow(base, Scalar(1) / (a - Scalar(1)));
}

/**
 * f-divergence D_f(nu || p) = sum_i p_i * f(nu_i / p_i) between rows on a
 * shared support, with the 0*log(0) = 0 convention. Throws when nu places
 * mass outside p's support.
 */
template <typename DerivedN, typename DerivedP>
typename DerivedN::Scalar f_divergence(const Eigen::MatrixBase<DerivedN>& nu,
                                       const Eigen::MatrixBase<DerivedP>& p,
                                       const DivergenceSpec<typename DerivedN::Scalar>& spec) {
    using Scalar = typename DerivedN::Scalar;
    if (nu.size() != p.size()) throw std::invalid_argument("f_divergence: size mismatch");
    Scalar d = 0;
    for (Index i = 0; i < nu.size(); ++i) {
        const Scalar n = nu(i), w = p(i);
        if (w <= Scalar(0)) {
            if (n > Scalar(0))
                throw std::invalid_argument("f_divergence: nu puts mass outside the prior's support");
            continue;
        }
        if (n <= Scalar(0)) {
            // f(0), finite for KL (0) and for alpha in (0,1); +inf otherwise.
            if (spec.is_kl()) continue;
            const Scalar a = spec.alpha;
            if (div_detail::near(a, Scalar(1))) {
                d += w;  // f_1(0) = 1
            } else if (a > Scalar(0) && a < Scalar(1)) {
                d += w / a;  // f_a(0) = 1/a
            } else {
                return std::numeric_limits<Scalar>::infinity();
            }
            continue;
        }
        d += w * (spec.is_kl() ? (n / w) * std::log(n / w)
                               : div_detail::alpha_generator(n / w, spec.alpha));
    }
    return d;
}

}  // namespace samdp
