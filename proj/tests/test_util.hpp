#pragma once

#include "uot/types.hpp"

#include <random>

namespace uot_test {

// Deterministic problem generator for the unit tests. Costs and masses are
// uniform on [lo, hi]; balanced instances rescale b to match the mass of a.
struct Rng {
    std::mt19937_64 engine;

    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine);
    }

    uot::Vector histogram(uot::Index n, double lo = 0.2, double hi = 1.2) {
        uot::Vector v(n);
        for (uot::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    uot::Matrix costs(uot::Index n, uot::Index m, double lo = 0.05, double hi = 1.0) {
        uot::Matrix C(n, m);
        for (uot::Index i = 0; i < n; ++i)
            for (uot::Index j = 0; j < m; ++j) C(i, j) = uniform(lo, hi);
        return C;
    }

    uot::Vector vec(uot::Index k, double lo = -1.0, double hi = 1.0) {
        uot::Vector v(k);
        for (uot::Index i = 0; i < k; ++i) v[i] = uniform(lo, hi);
        return v;
    }
};

inline void balance(const uot::Vector& a, uot::Vector& b) { b *= a.sum() / b.sum(); }

}  // namespace uot_test
