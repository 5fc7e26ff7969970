#pragma once

#include <vector>

#include <catch2/catch.hpp>

#include "vosmem/core.hpp"

namespace testutil {

inline vosmem::Tensor rand_tensor(std::vector<int> shape, uint64_t seed,
                                  float lo = -1.0f, float hi = 1.0f) {
    vosmem::Tensor t(std::move(shape));
    vosmem::SplitMix64 rng(seed);
    for (long long i = 0; i < t.numel(); ++i) t[static_cast<size_t>(i)] = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const vosmem::Tensor& a, const vosmem::Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (long long i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[static_cast<size_t>(i)]) -
                                 b[static_cast<size_t>(i)]));
    return m;
}

}  // namespace testutil
