#pragma once

#include <future>
#include <memory>
#include <optional>

#include "vosmem/core.hpp"
#include "vosmem/decoder.hpp"
#include "vosmem/encoders.hpp"
#include "vosmem/numerics.hpp"
#include "vosmem/object_memory.hpp"
#include "vosmem/object_transformer.hpp"
#include "vosmem/pixel_memory.hpp"
#include "vosmem/tta.hpp"

namespace vosmem {

enum class EncoderMode { LearnedToy, Analytic };

struct ModelConfig {
    int c4 = 32;
    int c8 = 48;
    int c16 = 64;       // C', embedding/transformer width (256 at full scale)
    int key_dim = 32;   // Ck
    int num_queries = 8;
    int blocks = 3;     // L
    int heads = 2;
    uint64_t seed = 1;
};

// Slope of the analytic decode: logit = scale * (evidence - 0.5).
constexpr float kAnalyticLogitScale = 16.0f;

// All seeded parameters of one model instance. Shared read-only across
// concurrent video tasks and TTA variants.
struct PipelineWeights {
    ModelConfig config;
    EncoderWeights enc;
    Tensor key_proj;             // C' x Ck
    ReadoutWeights readout;      // (C' + C') x C'
    TransformerParams transformer;
    DecoderWeights dec;
    Tensor object_queries;       // N x C'
    uint64_t pooling_seed = 0;

    // analytic mode: raw-RGB keys, identity readout, no transformer blocks
    Tensor analytic_key_proj;    // 3 x 3
    ReadoutWeights analytic_readout;
    TransformerParams analytic_transformer;

    static PipelineWeights seeded(const ModelConfig& cfg) {
        require(cfg.num_queries >= 2 && cfg.num_queries % 2 == 0,
                "ModelConfig: num_queries must be an even value >= 2");
        PipelineWeights w;
        w.config = cfg;
        w.enc = EncoderWeights::seeded({cfg.c4, cfg.c8, cfg.c16, derive_seed(cfg.seed, "enc")});
        w.key_proj = seeded_uniform({cfg.c16, cfg.key_dim}, derive_seed(cfg.seed, "keys"),
                                    std::sqrt(3.0f / cfg.c16));
        w.readout = ReadoutWeights::seeded(cfg.c16, cfg.c16, cfg.c16,
                                           derive_seed(cfg.seed, "readout"));
        w.transformer = TransformerParams::seeded(cfg.c16, cfg.blocks, cfg.heads,
                                                  derive_seed(cfg.seed, "transformer"));
        w.dec = DecoderWeights::seeded(cfg.c16, cfg.c8, cfg.c4, cfg.c16,
                                       derive_seed(cfg.seed, "decoder"));
        w.object_queries = seeded_uniform({cfg.num_queries, cfg.c16},
                                          derive_seed(cfg.seed, "queries"),
                                          std::sqrt(3.0f / cfg.c16));
        w.pooling_seed = derive_seed(cfg.seed, "pooling");
        w.analytic_key_proj = seeded_uniform({3, 3}, derive_seed(cfg.seed, "analytic.keys"), 1.0f);
        w.analytic_readout = ReadoutWeights::identity(4, 3);
        w.analytic_transformer = TransformerParams::seeded(4, 0, 1, cfg.seed);
        return w;
    }
};

struct VideoTask {
    std::string video_id;
    std::vector<Tensor> frames;       // H x W x 3, values in [0, 1]
    IndexMap annotation;              // first-frame labels, contiguous ids 1..K
    ModelConfig model;
    EncoderMode mode = EncoderMode::LearnedToy;
    std::optional<MemoryConfig> memory_override;
    std::string run_id;
    std::shared_ptr<const PipelineWeights> weights;  // optional, else seeded per run

    // Test hook, observed after every insert+evict cycle.
    std::function<void(int frame_index, int bank_size, int non_permanent, bool frame0_present)>
        memory_observer;
};

namespace detail {

inline Tensor avg_pool(const Tensor& x, int k) {
    const int h = x.extent(0) / k, w = x.extent(1) / k, c = x.extent(2);
    Tensor out({h, w, c});
    std::vector<double> acc(static_cast<size_t>(c));
    const double inv = 1.0 / (static_cast<double>(k) * k);
    for (int y = 0; y < h; ++y) {
        for (int xo = 0; xo < w; ++xo) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int dy = 0; dy < k; ++dy)
                for (int dx = 0; dx < k; ++dx) {
                    const float* px = x.data() +
                        (static_cast<size_t>(y * k + dy) * x.extent(1) + (xo * k + dx)) * c;
                    for (int ch = 0; ch < c; ++ch) acc[static_cast<size_t>(ch)] += px[ch];
                }
            float* op = out.data() + (static_cast<size_t>(y) * w + xo) * c;
            for (int ch = 0; ch < c; ++ch)
                op[ch] = static_cast<float>(acc[static_cast<size_t>(ch)] * inv);
        }
    }
    return out;
}

// Per-frame features shared by every object of the frame.
struct FrameFeatures {
    FramePyramid pyr;
    int grid_h = 0, grid_w = 0;  // memory grid (stride 16, or stride 1 in analytic mode)
    Tensor keys;                 // P x Ck
    Tensor query_feats;          // P x Cq
};

inline FrameFeatures encode_frame(const Tensor& frame, const PipelineWeights& w,
                                  EncoderMode mode, int frame_index) {
    FrameFeatures f;
    if (mode == EncoderMode::LearnedToy) {
        f.pyr = encode_image(frame, w.enc, frame_index);
        f.grid_h = f.pyr.f16.extent(0);
        f.grid_w = f.pyr.f16.extent(1);
        f.query_feats = grid_to_rows(f.pyr.f16);
        f.keys = matmul(f.query_feats, w.key_proj);
        return f;
    }
    // analytic: pooled pyramid for interface parity, raw pixels as the grid
    const int h = frame.extent(0), ww = frame.extent(1);
    const int ph = std::max(16, pad_up(h, 16)), pw = std::max(16, pad_up(ww, 16));
    const Tensor padded = pad_image(frame, ph, pw);
    f.pyr.frame_index = frame_index;
    f.pyr.orig_h = h;
    f.pyr.orig_w = ww;
    f.pyr.padded_h = ph;
    f.pyr.padded_w = pw;
    f.pyr.f4 = avg_pool(padded, 4);
    f.pyr.f8 = avg_pool(padded, 8);
    f.pyr.f16 = avg_pool(padded, 16);
    f.grid_h = h;
    f.grid_w = ww;
    f.query_feats = grid_to_rows(frame);            // P x 3
    f.keys = matmul(f.query_feats, w.analytic_key_proj);
    return f;
}

// Builds the memory entry for a segmented frame: per-object values from the
// mask encoder (or raw color+mask rows in analytic mode) plus the pooling
// statistics consumed by object_summary.
inline MemoryFrame build_memory_frame(const FrameFeatures& f, int frame_index,
                                      const std::vector<int>& ids,
                                      const std::vector<Tensor>& soft_masks,
                                      const PipelineWeights& w, EncoderMode mode) {
    MemoryFrame mf;
    mf.frame_index = frame_index;
    mf.keys = f.keys;
    const int n = w.config.num_queries;
    for (size_t k = 0; k < ids.size(); ++k) {
        const Tensor& mask = soft_masks[k];  // H x W
        Tensor values;
        Tensor mask_grid;  // grid_h x grid_w, rank 2
        if (mode == EncoderMode::LearnedToy) {
            Tensor m3 = Tensor::from({mask.extent(0), mask.extent(1), 1}, mask.vec());
            m3 = pad_image(m3, f.pyr.padded_h, f.pyr.padded_w);
            const Tensor quarter = bilinear_resize(m3, f.pyr.padded_h / 4, f.pyr.padded_w / 4);
            values = grid_to_rows(encode_mask(quarter, f.pyr.f16, w.enc));
            const Tensor m16 = bilinear_resize(m3, f.grid_h, f.grid_w);
            mask_grid = Tensor::from({f.grid_h, f.grid_w}, m16.vec());
        } else {
            const int p = f.grid_h * f.grid_w;
            values = Tensor({p, 4});
            for (int i = 0; i < p; ++i) {
                values.at(i, 0) = f.query_feats.at(i, 0);
                values.at(i, 1) = f.query_feats.at(i, 1);
                values.at(i, 2) = f.query_feats.at(i, 2);
                values.at(i, 3) = mask[static_cast<size_t>(i)];
            }
            mask_grid = Tensor::from({f.grid_h, f.grid_w}, mask.vec());
        }
        const PoolingMasks pm = derive_pooling_masks(mask_grid, n, w.pooling_seed);
        PoolStats st = pool_stats(values, pm.weights);
        mf.values[ids[k]] = std::move(values);
        mf.pooled_sums[ids[k]] = std::move(st.sums);
        mf.pooled_weights[ids[k]] = std::move(st.weights);
    }
    return mf;
}

inline Tensor decode_object(const Tensor& readout, const FrameFeatures& f,
                            const PipelineWeights& w, EncoderMode mode) {
    if (mode == EncoderMode::LearnedToy) return decode(readout, f.pyr, w.dec);
    // analytic: project the attended mask-evidence channel to logits
    Tensor logits({f.grid_h, f.grid_w, 1});
    for (int i = 0; i < f.grid_h * f.grid_w; ++i)
        logits[static_cast<size_t>(i)] =
            kAnalyticLogitScale * (readout.at(i, 3) - 0.5f);
    return logits;
}

}  // namespace detail

// Streaming per-video inference: frame 0 seeds the memory permanently from
// the given annotation; every later frame reads pixel memory, runs the object
// transformer, decodes, and re-encodes its own prediction into memory.
inline std::vector<SegmentationResult> run_video(const VideoTask& task) {
    const int frame_count = static_cast<int>(task.frames.size());
    require(frame_count >= 1, "run_video: at least one frame required");
    const int h = task.frames[0].extent(0), w = task.frames[0].extent(1);
    for (const Tensor& f : task.frames)
        require(f.rank() == 3 && f.extent(2) == 3 && f.extent(0) == h && f.extent(1) == w,
                "run_video: all frames must be H x W x 3 with equal extents");
    require(task.annotation.h == h && task.annotation.w == w,
            "run_video: annotation extents must equal frame extents");
    const std::vector<int> ids = task.annotation.object_ids();
    require(!ids.empty(), "run_video: annotation has no objects");
    for (size_t i = 0; i < ids.size(); ++i)
        require(ids[i] == static_cast<int>(i) + 1,
                "run_video: labels must be the contiguous id set 1..K");

    MemoryConfig cfg = task.memory_override.value_or(route_hyperparams(frame_count));
    cfg.validate();
    std::shared_ptr<const PipelineWeights> weights =
        task.weights ? task.weights
                     : std::make_shared<const PipelineWeights>(PipelineWeights::seeded(task.model));
    const PipelineWeights& wts = *weights;
    const EncoderMode mode = task.mode;

    std::vector<SegmentationResult> results;
    results.reserve(static_cast<size_t>(frame_count));
    results.push_back(SegmentationResult::from_annotation(task.annotation, ids, task.video_id,
                                                          0, task.run_id));

    MemoryBank bank;
    const auto observe = [&](int t) {
        if (task.memory_observer)
            task.memory_observer(t, bank.size(), bank.non_permanent_count(),
                                 bank.contains_frame(0));
    };
    {
        const detail::FrameFeatures f0 = detail::encode_frame(task.frames[0], wts, mode, 0);
        bank.add_frame(detail::build_memory_frame(f0, 0, ids, results[0].probs, wts, mode),
                       /*permanent=*/true);
        bank.evict(cfg);
        observe(0);
    }

    const TransformerParams& tfm =
        mode == EncoderMode::LearnedToy ? wts.transformer : wts.analytic_transformer;
    const ReadoutWeights& rw =
        mode == EncoderMode::LearnedToy ? wts.readout : wts.analytic_readout;
    const Tensor queries = mode == EncoderMode::LearnedToy
                               ? wts.object_queries
                               : Tensor({wts.config.num_queries, 4});

    for (int t = 1; t < frame_count; ++t) {
        const detail::FrameFeatures ft = detail::encode_frame(task.frames[t], wts, mode, t);
        std::vector<Tensor> logits;
        logits.reserve(ids.size());
        for (int id : ids) {
            const Tensor r0 = read_memory(bank, ft.keys, id, ft.query_feats, cfg, rw);
            const Tensor summary = object_summary(bank, id);
            const Tensor rl = transformer_forward(r0, queries, summary, tfm);
            logits.push_back(detail::decode_object(rl, ft, wts, mode));
        }
        results.push_back(logits_to_label_map(logits, ids, task.video_id, t, task.run_id));
        bank.add_frame(detail::build_memory_frame(ft, t, ids, results.back().probs, wts, mode),
                       /*permanent=*/false);
        bank.evict(cfg);
        observe(t);
    }
    return results;
}

// TTA wrapper: run every (scale, flip) variant, map the results back to
// native space and fuse them per pixel. Frame 0 bypasses inference and is
// emitted directly from the native annotation. Variants are independent and
// run concurrently.
inline std::vector<SegmentationResult> run_video_with_tta(const VideoTask& task,
                                                          const std::vector<int>& scales,
                                                          bool flip,
                                                          std::vector<double> fusion_weights = {},
                                                          int max_parallel = 0) {
    std::vector<Variant> variants = make_variants(task.frames, scales, flip);
    if (fusion_weights.empty()) fusion_weights.assign(variants.size(), 1.0);
    require(fusion_weights.size() == variants.size(),
            "run_video_with_tta: one fusion weight per variant required");

    std::shared_ptr<const PipelineWeights> weights =
        task.weights ? task.weights
                     : std::make_shared<const PipelineWeights>(PipelineWeights::seeded(task.model));

    if (max_parallel <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        max_parallel = hw == 0 ? 1 : static_cast<int>(hw);
    }

    std::vector<std::vector<SegmentationResult>> inverted(variants.size());
    auto run_variant = [&](size_t vi) {
        const Variant& v = variants[vi];
        VideoTask vtask = task;
        vtask.frames = v.frames;
        vtask.annotation = transform_annotation(task.annotation, v.descriptor);
        vtask.weights = weights;
        std::vector<SegmentationResult> res = run_video(vtask);
        std::vector<SegmentationResult> inv;
        inv.reserve(res.size());
        for (const SegmentationResult& r : res) inv.push_back(invert_variant(r, v.descriptor));
        inverted[vi] = std::move(inv);
    };
    for (size_t start = 0; start < variants.size(); start += static_cast<size_t>(max_parallel)) {
        const size_t end = std::min(variants.size(), start + static_cast<size_t>(max_parallel));
        std::vector<std::future<void>> wave;
        for (size_t vi = start; vi < end; ++vi)
            wave.push_back(std::async(std::launch::async, run_variant, vi));
        for (auto& f : wave) f.get();
    }

    const std::vector<int> ids = task.annotation.object_ids();
    const int frame_count = static_cast<int>(task.frames.size());
    std::vector<SegmentationResult> fused;
    fused.reserve(static_cast<size_t>(frame_count));
    fused.push_back(SegmentationResult::from_annotation(task.annotation, ids, task.video_id, 0,
                                                        task.run_id));
    for (int t = 1; t < frame_count; ++t) {
        std::vector<SegmentationResult> frame_results;
        frame_results.reserve(variants.size());
        for (size_t vi = 0; vi < variants.size(); ++vi)
            frame_results.push_back(inverted[vi][static_cast<size_t>(t)]);
        fused.push_back(fuse_pixel(frame_results, fusion_weights));
    }
    return fused;
}

}  // namespace vosmem
