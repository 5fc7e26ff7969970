#pragma once

#include <string>

#include "vosmem/core.hpp"
#include "vosmem/encoders.hpp"
#include "vosmem/numerics.hpp"

namespace vosmem {

// Per-frame segmentation: indexed label map plus one soft probability map per
// object. The background probability is implied (1 - sum of object probs).
struct SegmentationResult {
    std::string video_id;
    std::string run_id;
    int frame_index = 0;
    int height = 0, width = 0;
    std::vector<int> object_ids;  // ascending
    IndexMap labels;
    std::vector<Tensor> probs;  // per object, H x W

    double background_prob(int y, int x) const {
        double s = 1.0;
        for (const Tensor& p : probs) s -= p.at(y, x);
        return s;
    }

    // Argmax over [background; objects], ties to the lower label
    // (background 0 first, then ids ascending).
    void recompute_labels() {
        labels = IndexMap(height, width);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double best = background_prob(y, x);
                int label = 0;
                for (size_t k = 0; k < probs.size(); ++k) {
                    const double p = probs[k].at(y, x);
                    if (p > best) {
                        best = p;
                        label = object_ids[k];
                    }
                }
                labels.at(y, x) = label;
            }
        }
    }

    static SegmentationResult from_annotation(const IndexMap& annotation,
                                              const std::vector<int>& ids,
                                              std::string video_id, int frame_index,
                                              std::string run_id) {
        SegmentationResult r;
        r.video_id = std::move(video_id);
        r.run_id = std::move(run_id);
        r.frame_index = frame_index;
        r.height = annotation.h;
        r.width = annotation.w;
        r.object_ids = ids;
        r.labels = annotation;
        r.probs.reserve(ids.size());
        for (int id : ids) {
            Tensor p({annotation.h, annotation.w});
            for (int y = 0; y < annotation.h; ++y)
                for (int x = 0; x < annotation.w; ++x)
                    if (annotation.at(y, x) == id) p.at(y, x) = 1.0f;
            r.probs.push_back(std::move(p));
        }
        return r;
    }
};

struct DecoderWeights {
    Tensor conv16_k, conv16_b;  // 3x3, C  -> D, at stride 16
    Tensor proj8_k, proj8_b;    // 1x1, C8 -> D
    Tensor conv8_k, conv8_b;    // 3x3, D  -> D, at stride 8
    Tensor proj4_k, proj4_b;    // 1x1, C4 -> D
    Tensor conv4_k, conv4_b;    // 3x3, D  -> 1, at stride 4

    static DecoderWeights seeded(int c, int c8, int c4, int d, uint64_t seed) {
        auto conv_init = [&](std::vector<int> shape, const char* tag) {
            const int fan_in = shape[0] * shape[1] * shape[2];
            return seeded_uniform(std::move(shape), derive_seed(seed, tag),
                                  std::sqrt(3.0f / fan_in));
        };
        DecoderWeights w;
        w.conv16_k = conv_init({3, 3, c, d}, "dec.c16");
        w.conv16_b = Tensor({d});
        w.proj8_k = conv_init({1, 1, c8, d}, "dec.p8");
        w.proj8_b = Tensor({d});
        w.conv8_k = conv_init({3, 3, d, d}, "dec.c8");
        w.conv8_b = Tensor({d});
        w.proj4_k = conv_init({1, 1, c4, d}, "dec.p4");
        w.proj4_b = Tensor({d});
        w.conv4_k = conv_init({3, 3, d, 1}, "dec.c4");
        w.conv4_b = Tensor({1});
        return w;
    }
};

// rows (h*w) x C -> h x w x C
inline Tensor rows_to_grid(const Tensor& rows, int h, int w) {
    require(rows.rank() == 2 && rows.extent(0) == h * w, "rows_to_grid: row count mismatch");
    return Tensor::from({h, w, rows.extent(1)}, rows.vec());
}

// h x w x C -> (h*w) x C
inline Tensor grid_to_rows(const Tensor& grid) {
    require(grid.rank() == 3, "grid_to_rows: rank-3 input required");
    return Tensor::from({grid.extent(0) * grid.extent(1), grid.extent(2)}, grid.vec());
}

inline Tensor crop_image(const Tensor& x, int h, int w) {
    if (x.extent(0) == h && x.extent(1) == w) return x;
    const int c = x.extent(2);
    Tensor out({h, w, c});
    for (int y = 0; y < h; ++y)
        std::copy_n(x.data() + static_cast<size_t>(y) * x.extent(1) * c,
                    static_cast<size_t>(w) * c,
                    out.data() + static_cast<size_t>(y) * w * c);
    return out;
}

// Decodes the final object readout into a full-resolution logit map:
// conv at stride 16, 2x up + projected f8 skip, conv, 2x up + projected f4
// skip, conv to one channel, bilinear to the padded input size, then crop of
// the encoder padding.
inline Tensor decode(const Tensor& readout, const FramePyramid& pyr, const DecoderWeights& w) {
    const int h16 = pyr.f16.extent(0), w16 = pyr.f16.extent(1);
    require(readout.rank() == 2 && readout.extent(0) == h16 * w16,
            "decode: readout rows must match the stride-16 grid");

    Tensor t = rows_to_grid(readout, h16, w16);
    t = gelu(conv2d(t, w.conv16_k, w.conv16_b, 1, 1));
    t = bilinear_resize(t, pyr.f8.extent(0), pyr.f8.extent(1));
    t = add(t, conv2d(pyr.f8, w.proj8_k, w.proj8_b, 1, 0));
    t = gelu(conv2d(t, w.conv8_k, w.conv8_b, 1, 1));
    t = bilinear_resize(t, pyr.f4.extent(0), pyr.f4.extent(1));
    t = add(t, conv2d(pyr.f4, w.proj4_k, w.proj4_b, 1, 0));
    t = conv2d(t, w.conv4_k, w.conv4_b, 1, 1);
    t = bilinear_resize(t, pyr.padded_h, pyr.padded_w);
    return crop_image(t, pyr.orig_h, pyr.orig_w);
}

// Per-pixel softmax over [background logit 0; object logits]; label = argmax
// with ties to the lower label.
inline SegmentationResult logits_to_label_map(const std::vector<Tensor>& per_object_logits,
                                              const std::vector<int>& object_ids,
                                              std::string video_id = {}, int frame_index = 0,
                                              std::string run_id = {}) {
    require(!per_object_logits.empty(), "logits_to_label_map: at least one object required");
    require(per_object_logits.size() == object_ids.size(),
            "logits_to_label_map: ids/logits count mismatch");
    {
        std::vector<int> sorted_ids = object_ids;
        std::sort(sorted_ids.begin(), sorted_ids.end());
        require(std::adjacent_find(sorted_ids.begin(), sorted_ids.end()) == sorted_ids.end(),
                "logits_to_label_map: duplicate object ids");
    }
    const int h = per_object_logits[0].extent(0), w = per_object_logits[0].extent(1);
    for (const Tensor& l : per_object_logits)
        require(l.extent(0) == h && l.extent(1) == w, "logits_to_label_map: extent mismatch");

    // order by ascending id
    std::vector<size_t> order(object_ids.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return object_ids[a] < object_ids[b]; });

    SegmentationResult r;
    r.video_id = std::move(video_id);
    r.run_id = std::move(run_id);
    r.frame_index = frame_index;
    r.height = h;
    r.width = w;
    r.labels = IndexMap(h, w);
    for (size_t k : order) r.object_ids.push_back(object_ids[k]);
    r.probs.assign(order.size(), Tensor({h, w}));

    const size_t kn = order.size();
    std::vector<double> ex(kn);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double mx = 0.0;  // background logit
            for (size_t k = 0; k < kn; ++k) {
                const size_t src = order[k];
                const double l = per_object_logits[src].rank() == 3
                                     ? per_object_logits[src].at(y, x, 0)
                                     : per_object_logits[src].at(y, x);
                ex[k] = l;
                mx = std::max(mx, l);
            }
            double denom = std::exp(0.0 - mx);
            for (size_t k = 0; k < kn; ++k) {
                ex[k] = std::exp(ex[k] - mx);
                denom += ex[k];
            }
            for (size_t k = 0; k < kn; ++k)
                r.probs[k].at(y, x) = static_cast<float>(ex[k] / denom);
        }
    }
    // labels always derive from the stored (float) probabilities, so that a
    // later recompute after fusion or inversion agrees with the original
    r.recompute_labels();
    return r;
}

}  // namespace vosmem
