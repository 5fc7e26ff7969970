#pragma once

#include "vosmem/core.hpp"
#include "vosmem/numerics.hpp"
#include "vosmem/pixel_memory.hpp"

namespace vosmem {

constexpr double kPoolEps = 1e-7;

// Object queries are seeded at video start and stay fixed; the object memory
// S is recomputed from bank statistics whenever needed.
struct ObjectState {
    int object_id = 0;
    Tensor queries;        // N x C
    Tensor object_memory;  // N x C
};

struct PoolingMasks {
    Tensor weights;  // N x P, entries in [0, 1]
};

struct PoolStats {
    Tensor sums;     // N x C
    Tensor weights;  // N
};

// S[q] = sum_i W[q,i] U[i] / max(sum_i W[q,i], eps). Zero-mass rows yield the
// zero vector.
inline Tensor mask_pool(const Tensor& features, const Tensor& weights) {
    require(features.rank() == 2 && weights.rank() == 2, "mask_pool: rank-2 operands required");
    const int m = features.extent(0), c = features.extent(1);
    require(weights.extent(1) == m, "mask_pool: W columns must match feature rows");
    const int n = weights.extent(0);

    Tensor out({n, c});
    std::vector<double> acc(static_cast<size_t>(c));
    for (int q = 0; q < n; ++q) {
        std::fill(acc.begin(), acc.end(), 0.0);
        double mass = 0.0;
        for (int i = 0; i < m; ++i) {
            const double wq = weights.at(q, i);
            mass += wq;
            if (wq == 0.0) continue;
            const float* row = features.data() + static_cast<size_t>(i) * c;
            for (int j = 0; j < c; ++j) acc[static_cast<size_t>(j)] += wq * row[j];
        }
        const double denom = std::max(mass, kPoolEps);
        for (int j = 0; j < c; ++j)
            out.at(q, j) = static_cast<float>(acc[static_cast<size_t>(j)] / denom);
    }
    return out;
}

// Unnormalized numerators and masses, stored per memory frame so the object
// summary can be accumulated incrementally.
inline PoolStats pool_stats(const Tensor& features, const Tensor& weights) {
    require(features.rank() == 2 && weights.rank() == 2, "pool_stats: rank-2 operands required");
    const int m = features.extent(0), c = features.extent(1);
    require(weights.extent(1) == m, "pool_stats: W columns must match feature rows");
    const int n = weights.extent(0);

    PoolStats st{Tensor({n, c}), Tensor({n})};
    std::vector<double> acc(static_cast<size_t>(c));
    for (int q = 0; q < n; ++q) {
        std::fill(acc.begin(), acc.end(), 0.0);
        double mass = 0.0;
        for (int i = 0; i < m; ++i) {
            const double wq = weights.at(q, i);
            mass += wq;
            if (wq == 0.0) continue;
            const float* row = features.data() + static_cast<size_t>(i) * c;
            for (int j = 0; j < c; ++j) acc[static_cast<size_t>(j)] += wq * row[j];
        }
        for (int j = 0; j < c; ++j) st.sums.at(q, j) = static_cast<float>(acc[static_cast<size_t>(j)]);
        st.weights.at(q) = static_cast<float>(mass);
    }
    return st;
}

// N/2 fixed smooth windows over the grid (seeded Gaussian bumps, positive
// everywhere). Foreground rows modulate the soft mask, background rows its
// complement, both with the same window set.
inline PoolingMasks derive_pooling_masks(const Tensor& soft_mask, int n,
                                         uint64_t seed = 0x9e1dULL) {
    require(n >= 2 && n % 2 == 0, "derive_pooling_masks: N must be an even value >= 2");
    require(soft_mask.rank() == 1 || soft_mask.rank() == 2,
            "derive_pooling_masks: mask must be rank 1 or 2");
    const int h = soft_mask.rank() == 2 ? soft_mask.extent(0) : 1;
    const int w = soft_mask.rank() == 2 ? soft_mask.extent(1) : soft_mask.extent(0);
    const int p = h * w;
    const int half = n / 2;

    SplitMix64 rng(derive_seed(seed, "pool.windows") ^
                   (static_cast<uint64_t>(h) << 32 | static_cast<uint64_t>(w)) ^
                   (static_cast<uint64_t>(n) << 16));
    const double sigma = std::max(1.0, (h + w) / 3.0);
    std::vector<double> windows(static_cast<size_t>(half) * p);
    for (int q = 0; q < half; ++q) {
        const double cy = rng.unit() * h;
        const double cx = rng.unit() * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dy = (y + 0.5) - cy, dx = (x + 0.5) - cx;
                windows[static_cast<size_t>(q) * p + y * w + x] =
                    std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
            }
        }
    }

    PoolingMasks pm{Tensor({n, p})};
    for (int q = 0; q < half; ++q) {
        for (int i = 0; i < p; ++i) {
            const double win = windows[static_cast<size_t>(q) * p + i];
            const double mval = soft_mask[static_cast<size_t>(i)];
            pm.weights.at(q, i) = static_cast<float>(win * mval);
            pm.weights.at(half + q, i) = static_cast<float>(win * (1.0 - mval));
        }
    }
    return pm;
}

// Object summary over every in-bank frame, accumulated from the per-frame
// pooled statistics. Equivalent to mask-pooling the concatenated features.
inline Tensor object_summary(const MemoryBank& bank, int object_id) {
    const MemoryFrame* first = nullptr;
    for (const auto& f : bank.frames()) {
        if (f.pooled_sums.count(object_id)) {
            first = &f;
            break;
        }
    }
    require(first != nullptr, "object_summary: no statistics for object id in bank");

    const Tensor& s0 = first->pooled_sums.at(object_id);
    const int n = s0.extent(0), c = s0.extent(1);
    std::vector<double> sums(static_cast<size_t>(n) * c, 0.0);
    std::vector<double> mass(static_cast<size_t>(n), 0.0);
    for (const auto& f : bank.frames()) {
        auto its = f.pooled_sums.find(object_id);
        require(its != f.pooled_sums.end(), "object_summary: frame missing object statistics");
        const Tensor& ps = its->second;
        const Tensor& pw = f.pooled_weights.at(object_id);
        require(ps.extent(0) == n && ps.extent(1) == c, "object_summary: statistics extent mismatch");
        for (int q = 0; q < n; ++q) {
            mass[static_cast<size_t>(q)] += pw.at(q);
            for (int j = 0; j < c; ++j)
                sums[static_cast<size_t>(q) * c + j] += ps.at(q, j);
        }
    }

    Tensor out({n, c});
    for (int q = 0; q < n; ++q) {
        const double denom = std::max(mass[static_cast<size_t>(q)], kPoolEps);
        for (int j = 0; j < c; ++j)
            out.at(q, j) = static_cast<float>(sums[static_cast<size_t>(q) * c + j] / denom);
    }
    return out;
}

}  // namespace vosmem
