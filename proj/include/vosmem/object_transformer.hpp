#pragma once

#include "vosmem/core.hpp"
#include "vosmem/numerics.hpp"

namespace vosmem {

struct AttentionWeights {
    Tensor wq, bq, wk, bk, wv, bv;  // C x C projections with biases
    Tensor wo, bo;                  // output projection
    Tensor ln_g, ln_b;              // post-residual layer norm

    static AttentionWeights seeded(int c, uint64_t seed) {
        const float bound = std::sqrt(3.0f / c);
        AttentionWeights a;
        a.wq = seeded_uniform({c, c}, derive_seed(seed, "wq"), bound);
        a.wk = seeded_uniform({c, c}, derive_seed(seed, "wk"), bound);
        a.wv = seeded_uniform({c, c}, derive_seed(seed, "wv"), bound);
        a.wo = seeded_uniform({c, c}, derive_seed(seed, "wo"), bound);
        a.bq = Tensor({c});
        a.bk = Tensor({c});
        a.bv = Tensor({c});
        a.bo = Tensor({c});
        a.ln_g = Tensor({c}, 1.0f);
        a.ln_b = Tensor({c});
        return a;
    }
};

struct FeedForwardWeights {
    Tensor w1, b1;  // C x (expand*C)
    Tensor w2, b2;  // (expand*C) x C
    Tensor ln_g, ln_b;

    static FeedForwardWeights seeded(int c, int expand, uint64_t seed) {
        const int hidden = expand * c;
        FeedForwardWeights f;
        f.w1 = seeded_uniform({c, hidden}, derive_seed(seed, "w1"), std::sqrt(3.0f / c));
        f.b1 = Tensor({hidden});
        f.w2 = seeded_uniform({hidden, c}, derive_seed(seed, "w2"), std::sqrt(3.0f / hidden));
        f.b2 = Tensor({c});
        f.ln_g = Tensor({c}, 1.0f);
        f.ln_b = Tensor({c});
        return f;
    }
};

struct BlockWeights {
    AttentionWeights query_to_readout;  // queries attend to the readout
    AttentionWeights readout_to_query;  // readout attends to the updated queries
    FeedForwardWeights ffn_query;
    FeedForwardWeights ffn_readout;
};

struct TransformerParams {
    int block_count = 3;
    int heads = 2;
    float ln_eps = 1e-5f;
    std::vector<BlockWeights> blocks;

    static TransformerParams seeded(int c, int block_count, int heads, uint64_t seed,
                                    int ffn_expand = 2) {
        require(block_count >= 0, "TransformerParams: block count must be >= 0");
        require(heads >= 1 && c % heads == 0,
                "TransformerParams: channels must divide evenly into heads");
        TransformerParams p;
        p.block_count = block_count;
        p.heads = heads;
        p.blocks.reserve(static_cast<size_t>(block_count));
        for (int l = 0; l < block_count; ++l) {
            const uint64_t ls = derive_seed(seed, "block" + std::to_string(l));
            BlockWeights b;
            b.query_to_readout = AttentionWeights::seeded(c, derive_seed(ls, "q2r"));
            b.readout_to_query = AttentionWeights::seeded(c, derive_seed(ls, "r2q"));
            b.ffn_query = FeedForwardWeights::seeded(c, ffn_expand, derive_seed(ls, "ffnq"));
            b.ffn_readout = FeedForwardWeights::seeded(c, ffn_expand, derive_seed(ls, "ffnr"));
            p.blocks.push_back(std::move(b));
        }
        return p;
    }
};

// Test hook: every attention matrix (rows x keys) produced by a block pass.
struct BlockTrace {
    std::vector<Tensor> attention;  // one (rows*heads) x keys matrix per cross-attention
};

// X0 = X + S
inline Tensor init_queries(const Tensor& queries, const Tensor& object_memory) {
    require(queries.same_shape(object_memory), "init_queries: extent mismatch");
    return add(queries, object_memory);
}

namespace detail {

// Scaled-dot-product multi-head cross attention: `from` provides queries,
// `to` provides keys and values.
inline Tensor cross_attention(const Tensor& from, const Tensor& to, const AttentionWeights& w,
                              int heads, BlockTrace* trace) {
    const int rows = from.extent(0), c = from.extent(1);
    const int keys_n = to.extent(0);
    const int d = c / heads;
    const Tensor q = linear(from, w.wq, w.bq);
    const Tensor k = linear(to, w.wk, w.bk);
    const Tensor v = linear(to, w.wv, w.bv);

    Tensor concat({rows, c});
    Tensor attn_rows = trace ? Tensor({rows * heads, keys_n}) : Tensor();
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> aff(static_cast<size_t>(keys_n));
    std::vector<double> acc(static_cast<size_t>(d));
    for (int h = 0; h < heads; ++h) {
        const int off = h * d;
        for (int i = 0; i < rows; ++i) {
            const float* qrow = q.data() + static_cast<size_t>(i) * c + off;
            double mx = -1e300;
            for (int j = 0; j < keys_n; ++j) {
                const float* krow = k.data() + static_cast<size_t>(j) * c + off;
                const double a = dot_acc(qrow, krow, d) * inv_scale;
                aff[static_cast<size_t>(j)] = a;
                mx = std::max(mx, a);
            }
            double denom = 0.0;
            for (int j = 0; j < keys_n; ++j) {
                aff[static_cast<size_t>(j)] = std::exp(aff[static_cast<size_t>(j)] - mx);
                denom += aff[static_cast<size_t>(j)];
            }
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int j = 0; j < keys_n; ++j) {
                const double wgt = aff[static_cast<size_t>(j)] / denom;
                if (trace) attn_rows.at(h * rows + i, j) = static_cast<float>(wgt);
                const float* vrow = v.data() + static_cast<size_t>(j) * c + off;
                for (int e = 0; e < d; ++e) acc[static_cast<size_t>(e)] += wgt * vrow[e];
            }
            float* orow = concat.data() + static_cast<size_t>(i) * c + off;
            for (int e = 0; e < d; ++e) orow[e] = static_cast<float>(acc[static_cast<size_t>(e)]);
        }
    }
    if (trace) trace->attention.push_back(std::move(attn_rows));
    return linear(concat, w.wo, w.bo);
}

inline Tensor feed_forward(const Tensor& x, const FeedForwardWeights& w) {
    return linear(gelu(linear(x, w.w1, w.b1)), w.w2, w.b2);
}

}  // namespace detail

// One bidirectional block. Fixed sub-step order: (a) queries cross-attend to
// the readout, (b) readout cross-attends to the updated queries, (c) per-
// stream feed-forward; every sub-step is residual + post layer norm.
inline std::pair<Tensor, Tensor> transformer_block(const Tensor& queries, const Tensor& readout,
                                                   const BlockWeights& w, int heads,
                                                   float ln_eps, BlockTrace* trace = nullptr) {
    require(queries.rank() == 2 && readout.rank() == 2, "transformer_block: rank-2 streams required");
    require(queries.extent(1) == readout.extent(1), "transformer_block: width mismatch");

    const auto& q2r = w.query_to_readout;
    Tensor x = layer_norm(add(queries, detail::cross_attention(queries, readout, q2r, heads, trace)),
                          q2r.ln_g, q2r.ln_b, ln_eps);
    const auto& r2q = w.readout_to_query;
    Tensor r = layer_norm(add(readout, detail::cross_attention(readout, x, r2q, heads, trace)),
                          r2q.ln_g, r2q.ln_b, ln_eps);
    x = layer_norm(add(x, detail::feed_forward(x, w.ffn_query)),
                   w.ffn_query.ln_g, w.ffn_query.ln_b, ln_eps);
    r = layer_norm(add(r, detail::feed_forward(r, w.ffn_readout)),
                   w.ffn_readout.ln_g, w.ffn_readout.ln_b, ln_eps);
    return {std::move(x), std::move(r)};
}

// Runs the L blocks over (X0 = X + S, R0) and returns the final readout R_L.
// L = 0 is the identity on R0.
inline Tensor transformer_forward(const Tensor& readout0, const Tensor& queries,
                                  const Tensor& object_memory, const TransformerParams& params,
                                  BlockTrace* trace = nullptr) {
    require(static_cast<int>(params.blocks.size()) == params.block_count,
            "transformer_forward: block weight count mismatch");
    if (params.block_count == 0) return readout0;
    Tensor x = init_queries(queries, object_memory);
    Tensor r = readout0;
    for (const BlockWeights& b : params.blocks) {
        auto [xn, rn] = transformer_block(x, r, b, params.heads, params.ln_eps, trace);
        x = std::move(xn);
        r = std::move(rn);
    }
    return r;
}

}  // namespace vosmem
