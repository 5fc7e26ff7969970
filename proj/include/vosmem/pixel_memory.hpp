#pragma once

#include <map>

#include "vosmem/core.hpp"
#include "vosmem/numerics.hpp"

namespace vosmem {

struct MemoryConfig {
    int max_mem_frames = 15;
    int min_mem_frames = 14;
    int top_k = 30;

    void validate() const {
        require(min_mem_frames >= 1 && min_mem_frames <= max_mem_frames,
                "MemoryConfig: need 1 <= min_mem_frames <= max_mem_frames");
        require(top_k >= 1, "MemoryConfig: top_k must be >= 1");
    }
};

// Videos below 200 frames get the short-video parameters, everything else
// (200 included) the long-video ones.
constexpr int kLongVideoFrameThreshold = 200;

inline MemoryConfig route_hyperparams(int num_frames) {
    require(num_frames >= 1, "route_hyperparams: num_frames must be >= 1");
    if (num_frames < kLongVideoFrameThreshold) return {15, 14, 30};
    return {45, 40, 40};
}

// One segmented frame's worth of memory: shared keys, per-object values and
// the pooling statistics consumed by the object-memory module.
struct MemoryFrame {
    int frame_index = 0;
    Tensor keys;                          // M x Ck
    std::map<int, Tensor> values;         // object id -> M x Cv
    std::map<int, Tensor> pooled_sums;    // object id -> N x C
    std::map<int, Tensor> pooled_weights; // object id -> N
};

class MemoryBank {
public:
    const std::vector<MemoryFrame>& frames() const { return frames_; }
    int size() const { return static_cast<int>(frames_.size()); }
    int permanent_count() const { return permanent_count_; }
    int non_permanent_count() const { return size() - permanent_count_; }
    bool empty() const { return frames_.empty(); }

    bool contains_frame(int frame_index) const {
        for (const auto& f : frames_)
            if (f.frame_index == frame_index) return true;
        return false;
    }

    void add_frame(MemoryFrame mf, bool permanent) {
        require(frames_.empty() || mf.frame_index > frames_.back().frame_index,
                "MemoryBank: frame indices must be strictly increasing");
        const int rows = mf.keys.extent(0);
        for (const auto& [id, v] : mf.values)
            require(v.extent(0) == rows, "MemoryBank: keys/values row mismatch");
        if (permanent) {
            require(size() == permanent_count_,
                    "MemoryBank: permanent frames may only be added during initialization");
            ++permanent_count_;
        }
        frames_.push_back(std::move(mf));
    }

    // Drops oldest non-permanent frames once the non-permanent count exceeds
    // max_mem_frames, down to min_mem_frames. The permanent prefix is never
    // touched.
    void evict(const MemoryConfig& cfg) {
        cfg.validate();
        if (non_permanent_count() <= cfg.max_mem_frames) return;
        const int excess = non_permanent_count() - cfg.min_mem_frames;
        frames_.erase(frames_.begin() + permanent_count_,
                      frames_.begin() + permanent_count_ + excess);
    }

private:
    std::vector<MemoryFrame> frames_;
    int permanent_count_ = 0;
};

// Final projection of the readout: R0 = concat(attended value, query feature)
// mapped through one linear layer.
struct ReadoutWeights {
    Tensor proj;  // (Cv + Cq) x C
    Tensor bias;  // C

    static ReadoutWeights seeded(int cv, int cq, int c, uint64_t seed) {
        ReadoutWeights w;
        w.proj = seeded_uniform({cv + cq, c}, derive_seed(seed, "readout.proj"),
                                std::sqrt(3.0f / (cv + cq)));
        w.bias = Tensor({c});
        return w;
    }

    // Passes the attended value through unchanged; the query feature is ignored.
    static ReadoutWeights identity(int cv, int cq) {
        ReadoutWeights w;
        w.proj = Tensor({cv + cq, cv});
        for (int i = 0; i < cv; ++i) w.proj.at(i, i) = 1.0f;
        w.bias = Tensor({cv});
        return w;
    }
};

// Test hook: kept memory positions and attention weights per query row.
struct ReadTrace {
    std::vector<std::vector<std::pair<int, double>>> rows;
};

// Attention readout over the whole bank. Affinities are scaled dot products
// over all memory positions (frames concatenated in insertion order); each
// query row keeps its top_k largest (ties to the lower position index),
// softmaxes over the kept set and averages the values.
inline Tensor read_memory(const MemoryBank& bank, const Tensor& query_keys, int object_id,
                          const Tensor& query_feats, const MemoryConfig& cfg,
                          const ReadoutWeights& rw, ReadTrace* trace = nullptr) {
    require(!bank.empty(), "read_memory: memory bank is empty");
    require(query_keys.rank() == 2, "read_memory: query keys must be P x Ck");
    require(query_feats.rank() == 2, "read_memory: query features must be P x Cq");
    cfg.validate();

    const int p_rows = query_keys.extent(0);
    const int ck = query_keys.extent(1);
    require(query_feats.extent(0) == p_rows, "read_memory: query rows mismatch");

    // Concatenate keys/values across frames.
    long long m_total = 0;
    int cv = -1;
    for (const auto& f : bank.frames()) {
        require(f.keys.extent(1) == ck, "read_memory: key width mismatch");
        auto it = f.values.find(object_id);
        require(it != f.values.end(), "read_memory: unknown object id in memory bank");
        if (cv < 0) cv = it->second.extent(1);
        require(it->second.extent(1) == cv, "read_memory: value width mismatch across frames");
        m_total += f.keys.extent(0);
    }
    std::vector<float> keys(static_cast<size_t>(m_total) * ck);
    std::vector<float> values(static_cast<size_t>(m_total) * cv);
    {
        size_t koff = 0, voff = 0;
        for (const auto& f : bank.frames()) {
            const auto& v = f.values.at(object_id);
            std::copy_n(f.keys.data(), f.keys.numel(), keys.data() + koff);
            std::copy_n(v.data(), v.numel(), values.data() + voff);
            koff += static_cast<size_t>(f.keys.numel());
            voff += static_cast<size_t>(v.numel());
        }
    }

    const int m = static_cast<int>(m_total);
    const int kept_n = std::min(cfg.top_k, m);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(ck));
    const int cq = query_feats.extent(1);
    require(rw.proj.rank() == 2 && rw.proj.extent(0) == cv + cq,
            "read_memory: readout projection extent mismatch");
    const int c_out = rw.proj.extent(1);

    Tensor out({p_rows, c_out});
    if (trace) trace->rows.assign(static_cast<size_t>(p_rows), {});

    parallel_for(p_rows, [&](long long lo, long long hi) {
        std::vector<double> best_aff(static_cast<size_t>(kept_n));
        std::vector<int> best_idx(static_cast<size_t>(kept_n));
        std::vector<double> attended(static_cast<size_t>(cv));
        for (long long p = lo; p < hi; ++p) {
            const float* q = query_keys.data() + p * ck;

            // affinity and top-k selection in one pass; kept in descending
            // affinity order, ties broken by the lower memory position index
            if (kept_n == m) {
                for (int i = 0; i < m; ++i) {
                    best_aff[static_cast<size_t>(i)] =
                        dot_acc(q, keys.data() + static_cast<size_t>(i) * ck, ck) * inv_scale;
                    best_idx[static_cast<size_t>(i)] = i;
                }
            } else {
                int count = 0;
                for (int i = 0; i < m; ++i) {
                    const double a =
                        dot_acc(q, keys.data() + static_cast<size_t>(i) * ck, ck) * inv_scale;
                    if (count == kept_n && a <= best_aff[static_cast<size_t>(count - 1)]) continue;
                    int j = std::min(count, kept_n - 1);
                    while (j > 0 && best_aff[static_cast<size_t>(j - 1)] < a) {
                        best_aff[static_cast<size_t>(j)] = best_aff[static_cast<size_t>(j - 1)];
                        best_idx[static_cast<size_t>(j)] = best_idx[static_cast<size_t>(j - 1)];
                        --j;
                    }
                    best_aff[static_cast<size_t>(j)] = a;
                    best_idx[static_cast<size_t>(j)] = i;
                    if (count < kept_n) ++count;
                }
            }

            double mx = best_aff[0];
            for (int i = 1; i < kept_n; ++i) mx = std::max(mx, best_aff[static_cast<size_t>(i)]);
            double denom = 0.0;
            for (int i = 0; i < kept_n; ++i)
                denom += std::exp(best_aff[static_cast<size_t>(i)] - mx);

            std::fill(attended.begin(), attended.end(), 0.0);
            std::vector<std::pair<int, double>>* trow = nullptr;
            if (trace) {
                trow = &trace->rows[static_cast<size_t>(p)];
                trow->reserve(static_cast<size_t>(kept_n));
            }
            for (int i = 0; i < kept_n; ++i) {
                const int mi = best_idx[static_cast<size_t>(i)];
                const double wgt = std::exp(best_aff[static_cast<size_t>(i)] - mx) / denom;
                const float* vrow = values.data() + static_cast<size_t>(mi) * cv;
                for (int c = 0; c < cv; ++c) attended[static_cast<size_t>(c)] += wgt * vrow[c];
                if (trow) trow->emplace_back(mi, wgt);
            }

            // R0[p] = proj^T concat(attended, query_feats[p]) + bias
            const float* qf = query_feats.data() + p * cq;
            float* orow = out.data() + p * c_out;
            for (int c = 0; c < c_out; ++c) {
                double s = rw.bias.at(c);
                for (int i = 0; i < cv; ++i) s += attended[static_cast<size_t>(i)] * rw.proj.at(i, c);
                for (int i = 0; i < cq; ++i)
                    s += static_cast<double>(qf[i]) * rw.proj.at(cv + i, c);
                orow[c] = static_cast<float>(s);
            }
        }
    }, trace ? (p_rows + 1) : 256);
    return out;
}

}  // namespace vosmem
