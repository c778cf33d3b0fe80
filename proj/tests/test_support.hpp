#pragma once

#include "samdp/model.hpp"

#include <cstdint>
#include <random>

// Shared helpers for the test suites: deterministic random draws and small
// independent oracles kept away from the library code they check.
namespace testsup {

inline double unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * unit(rng);
}

inline samdp::VectorX<double> random_simplex(std::mt19937_64& rng, samdp::Index n) {
    samdp::VectorX<double> x(n);
    for (samdp::Index i = 0; i < n; ++i) x(i) = -std::log(unit(rng));
    return x / x.sum();
}

inline samdp::VectorX<double> random_vector(std::mt19937_64& rng, samdp::Index n, double lo,
                                            double hi) {
    samdp::VectorX<double> x(n);
    for (samdp::Index i = 0; i < n; ++i) x(i) = uniform(rng, lo, hi);
    return x;
}

}  // namespace testsup
