#pragma once

#include <map>

#include "vosmem/core.hpp"
#include "vosmem/decoder.hpp"
#include "vosmem/numerics.hpp"

namespace vosmem {

// Exact record of one augmentation, sufficient to invert it.
struct VariantDescriptor {
    int index = 0;
    int scale = 0;  // shorter-side target in pixels; 0 = native
    bool flip = false;
    int native_h = 0, native_w = 0;
    int scaled_h = 0, scaled_w = 0;

    bool is_identity() const { return !flip && scaled_h == native_h && scaled_w == native_w; }

    std::string name() const {
        std::string s = scale == 0 ? "native" : ("s" + std::to_string(scale));
        if (flip) s += "_flip";
        return s;
    }
};

inline int round_to_multiple_of_4(double x) {
    const long r = std::lround(x / 4.0);
    return static_cast<int>(std::max(1L, r)) * 4;
}

// Shorter side set to `scale`, aspect preserved, the derived side rounded to
// the nearest multiple of 4.
inline std::pair<int, int> scaled_extents(int h, int w, int scale) {
    if (scale == 0) return {h, w};
    if (h <= w) {
        const double ratio = static_cast<double>(scale) / h;
        return {scale, round_to_multiple_of_4(w * ratio)};
    }
    const double ratio = static_cast<double>(scale) / w;
    return {round_to_multiple_of_4(h * ratio), scale};
}

struct Variant {
    VariantDescriptor descriptor;
    std::vector<Tensor> frames;
};

// One variant per (scale, flip) pair, in scale order with the unflipped
// variant first.
inline std::vector<Variant> make_variants(const std::vector<Tensor>& frames,
                                          const std::vector<int>& scales, bool flip) {
    require(!scales.empty(), "make_variants: scale list must be non-empty");
    require(!frames.empty(), "make_variants: no frames");
    const int h = frames[0].extent(0), w = frames[0].extent(1);

    std::vector<Variant> out;
    for (int scale : scales) {
        const auto [sh, sw] = scaled_extents(h, w, scale);
        for (int f = 0; f < (flip ? 2 : 1); ++f) {
            Variant v;
            v.descriptor.index = static_cast<int>(out.size());
            v.descriptor.scale = scale;
            v.descriptor.flip = f == 1;
            v.descriptor.native_h = h;
            v.descriptor.native_w = w;
            v.descriptor.scaled_h = sh;
            v.descriptor.scaled_w = sw;
            v.frames.reserve(frames.size());
            for (const Tensor& frame : frames) {
                Tensor t = (sh == h && sw == w) ? frame : bilinear_resize(frame, sh, sw);
                if (v.descriptor.flip) t = hflip(t);
                v.frames.push_back(std::move(t));
            }
            out.push_back(std::move(v));
        }
    }
    return out;
}

// Carries an indexed annotation into variant space: per-object one-hot maps
// are resized bilinearly, flipped with the frames, and re-argmaxed.
inline IndexMap transform_annotation(const IndexMap& annotation, const VariantDescriptor& d) {
    if (d.is_identity()) return annotation;
    const std::vector<int> ids = annotation.object_ids();
    SegmentationResult native =
        SegmentationResult::from_annotation(annotation, ids, {}, 0, {});

    IndexMap out(d.scaled_h, d.scaled_w);
    std::vector<Tensor> scaled;
    for (const Tensor& p : native.probs) {
        Tensor grid = Tensor::from({annotation.h, annotation.w, 1}, p.vec());
        grid = bilinear_resize(grid, d.scaled_h, d.scaled_w);
        if (d.flip) grid = hflip(grid);
        scaled.push_back(std::move(grid));
    }
    for (int y = 0; y < d.scaled_h; ++y) {
        for (int x = 0; x < d.scaled_w; ++x) {
            double sum = 0.0;
            for (const Tensor& p : scaled) sum += p.at(y, x, 0);
            double best = 1.0 - sum;  // background
            int label = 0;
            for (size_t k = 0; k < scaled.size(); ++k) {
                if (scaled[k].at(y, x, 0) > best) {
                    best = scaled[k].at(y, x, 0);
                    label = ids[k];
                }
            }
            out.at(y, x) = label;
        }
    }
    return out;
}

// Maps a variant-space result back to native resolution: unflip, resize the
// probability maps, renormalize, recompute labels. The identity and the
// flip-only case stay bit-exact.
inline SegmentationResult invert_variant(const SegmentationResult& result,
                                         const VariantDescriptor& d) {
    require(result.height == d.scaled_h && result.width == d.scaled_w,
            "invert_variant: result extents do not match the descriptor");
    if (d.is_identity()) return result;

    SegmentationResult out;
    out.video_id = result.video_id;
    out.run_id = result.run_id;
    out.frame_index = result.frame_index;
    out.height = d.native_h;
    out.width = d.native_w;
    out.object_ids = result.object_ids;

    const bool resized = d.scaled_h != d.native_h || d.scaled_w != d.native_w;
    for (const Tensor& p : result.probs) {
        Tensor grid = Tensor::from({result.height, result.width, 1}, p.vec());
        if (d.flip) grid = hflip(grid);
        if (resized) grid = bilinear_resize(grid, d.native_h, d.native_w);
        out.probs.push_back(Tensor::from({d.native_h, d.native_w}, grid.vec()));
    }
    if (resized) {
        // background resized alongside the objects, then everything normalized
        Tensor bg({result.height, result.width, 1});
        for (int y = 0; y < result.height; ++y)
            for (int x = 0; x < result.width; ++x)
                bg.at(y, x, 0) = static_cast<float>(result.background_prob(y, x));
        if (d.flip) bg = hflip(bg);
        bg = bilinear_resize(bg, d.native_h, d.native_w);
        for (int y = 0; y < d.native_h; ++y) {
            for (int x = 0; x < d.native_w; ++x) {
                double sum = bg.at(y, x, 0);
                for (const Tensor& p : out.probs) sum += p.at(y, x);
                if (sum <= 0.0) continue;
                for (Tensor& p : out.probs)
                    p.at(y, x) = static_cast<float>(p.at(y, x) / sum);
            }
        }
    }
    out.recompute_labels();
    return out;
}

// Weighted soft voting: fused probability = sum(w_r * p_r) / sum(w_r) per
// pixel and object; label recomputed by argmax.
inline SegmentationResult fuse_pixel(const std::vector<SegmentationResult>& results,
                                     const std::vector<double>& weights) {
    require(!results.empty(), "fuse_pixel: at least one result required");
    require(results.size() == weights.size(), "fuse_pixel: one weight per result required");
    double wsum = 0.0;
    for (double w : weights) {
        require(w >= 0.0, "fuse_pixel: weights must be >= 0");
        wsum += w;
    }
    require(wsum > 0.0, "fuse_pixel: weights must not all be zero");
    const SegmentationResult& first = results[0];
    for (const SegmentationResult& r : results) {
        require(r.object_ids == first.object_ids, "fuse_pixel: object id sets differ");
        require(r.height == first.height && r.width == first.width,
                "fuse_pixel: extents differ");
        require(r.frame_index == first.frame_index, "fuse_pixel: frame indices differ");
    }

    SegmentationResult out;
    out.video_id = first.video_id;
    out.run_id = first.run_id;
    out.frame_index = first.frame_index;
    out.height = first.height;
    out.width = first.width;
    out.object_ids = first.object_ids;
    out.probs.assign(first.probs.size(), Tensor({first.height, first.width}));

    const size_t npix = static_cast<size_t>(first.height) * first.width;
    for (size_t k = 0; k < out.probs.size(); ++k) {
        float* dst = out.probs[k].data();
        for (size_t i = 0; i < npix; ++i) {
            double acc = 0.0;
            for (size_t r = 0; r < results.size(); ++r)
                acc += weights[r] * results[r].probs[k][i];
            dst[i] = static_cast<float>(acc / wsum);
        }
    }
    out.recompute_labels();
    return out;
}

// ----------------------------------------------------------------------------
// Score logs and video-level fusion.
// ----------------------------------------------------------------------------
struct ScoreLog {
    struct VideoEntry {
        std::string video_id;
        double j = 0.0, f = 0.0, jf = 0.0;  // 0..100
    };
    std::string run_id;
    std::vector<VideoEntry> videos;

    void validate() const {
        for (const auto& v : videos)
            require(std::abs(v.jf - 0.5 * (v.j + v.f)) <= 1e-6,
                    "ScoreLog: JF must equal (J+F)/2 for video " + v.video_id);
    }
};

// Per video, the run with the highest J&F; exact ties go to the lowest
// run_id. Every log must cover every video.
inline std::map<std::string, std::string> select_best_runs(const std::vector<ScoreLog>& logs) {
    require(!logs.empty(), "select_best_runs: no logs");
    std::vector<std::string> video_ids;
    for (const auto& log : logs)
        for (const auto& v : log.videos) video_ids.push_back(v.video_id);
    std::sort(video_ids.begin(), video_ids.end());
    video_ids.erase(std::unique(video_ids.begin(), video_ids.end()), video_ids.end());

    std::map<std::string, std::string> selection;
    for (const std::string& vid : video_ids) {
        bool found_any = false;
        double best_jf = 0.0;
        std::string best_run;
        for (const auto& log : logs) {
            bool found = false;
            for (const auto& v : log.videos) {
                if (v.video_id != vid) continue;
                found = true;
                if (!found_any || v.jf > best_jf ||
                    (v.jf == best_jf && log.run_id < best_run)) {
                    best_jf = v.jf;
                    best_run = log.run_id;
                }
                found_any = true;
                break;
            }
            require(found, "select_best_runs: log " + log.run_id + " is missing video " + vid);
        }
        selection[vid] = best_run;
    }
    return selection;
}

}  // namespace vosmem
