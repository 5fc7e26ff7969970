#pragma once

#include <memory>
#include <optional>

#include "vosmem/core.hpp"
#include "vosmem/numerics.hpp"

namespace vosmem {

// Per-frame multiscale feature maps at strides 4, 8, 16 of the padded input.
struct FramePyramid {
    Tensor f4;   // (Hp/4)  x (Wp/4)  x C4
    Tensor f8;   // (Hp/8)  x (Wp/8)  x C8
    Tensor f16;  // (Hp/16) x (Wp/16) x C
    int frame_index = 0;
    int orig_h = 0, orig_w = 0;    // extents before padding
    int padded_h = 0, padded_w = 0;
};

struct EncoderConfig {
    int c4 = 32;
    int c8 = 48;
    int c16 = 64;  // C': mask/image embedding width (256 at full scale)
    uint64_t seed = 1;
};

// Seeded parameters for the image and mask encoders. Plain struct so tests
// can zero out individual weight groups.
struct EncoderWeights {
    // image path: stride-4 patch stem, two stride-2 stages, one 3x3 refine
    Tensor stem_k, stem_b, stem_ln_g, stem_ln_b;
    Tensor s2_k, s2_b, s2_ln_g, s2_ln_b;
    Tensor s3_k, s3_b, s3_ln_g, s3_ln_b;
    Tensor refine_k, refine_b, refine_ln_g, refine_ln_b;
    // mask path: 1 -> 4 -> 16 -> C'
    Tensor mask1_k, mask1_b, mask1_ln_g, mask1_ln_b;
    Tensor mask2_k, mask2_b, mask2_ln_g, mask2_ln_b;
    Tensor mask3_k, mask3_b;
    Tensor no_mask_embedding;  // C', seeded constant standing in for the learned one
    uint64_t rng_seed = 0;

    std::shared_ptr<std::atomic<long long>> encode_calls =
        std::make_shared<std::atomic<long long>>(0);

    long long encode_count() const { return encode_calls->load(); }

    int embed_dim() const { return mask3_k.extent(3); }

    // Channel walk of the mask path, derived from the kernel extents.
    std::vector<int> mask_stage_channels() const {
        return {mask1_k.extent(2), mask1_k.extent(3), mask2_k.extent(3), mask3_k.extent(3)};
    }

    static EncoderWeights seeded(const EncoderConfig& cfg) {
        auto conv_init = [&](std::vector<int> shape, const char* tag) {
            const int fan_in = shape[0] * shape[1] * shape[2];
            return seeded_uniform(std::move(shape), derive_seed(cfg.seed, tag),
                                  std::sqrt(3.0f / fan_in));
        };
        EncoderWeights w;
        w.rng_seed = cfg.seed;
        w.stem_k = conv_init({4, 4, 3, cfg.c4}, "img.stem");
        w.stem_b = Tensor({cfg.c4});
        w.stem_ln_g = Tensor({cfg.c4}, 1.0f);
        w.stem_ln_b = Tensor({cfg.c4});
        w.s2_k = conv_init({2, 2, cfg.c4, cfg.c8}, "img.s2");
        w.s2_b = Tensor({cfg.c8});
        w.s2_ln_g = Tensor({cfg.c8}, 1.0f);
        w.s2_ln_b = Tensor({cfg.c8});
        w.s3_k = conv_init({2, 2, cfg.c8, cfg.c16}, "img.s3");
        w.s3_b = Tensor({cfg.c16});
        w.s3_ln_g = Tensor({cfg.c16}, 1.0f);
        w.s3_ln_b = Tensor({cfg.c16});
        w.refine_k = conv_init({3, 3, cfg.c16, cfg.c16}, "img.refine");
        w.refine_b = Tensor({cfg.c16});
        w.refine_ln_g = Tensor({cfg.c16}, 1.0f);
        w.refine_ln_b = Tensor({cfg.c16});
        w.mask1_k = conv_init({2, 2, 1, 4}, "mask.s1");
        w.mask1_b = Tensor({4});
        w.mask1_ln_g = Tensor({4}, 1.0f);
        w.mask1_ln_b = Tensor({4});
        w.mask2_k = conv_init({2, 2, 4, 16}, "mask.s2");
        w.mask2_b = Tensor({16});
        w.mask2_ln_g = Tensor({16}, 1.0f);
        w.mask2_ln_b = Tensor({16});
        w.mask3_k = conv_init({1, 1, 16, cfg.c16}, "mask.s3");
        w.mask3_b = Tensor({cfg.c16});
        w.no_mask_embedding =
            seeded_uniform({cfg.c16}, derive_seed(cfg.seed, "mask.none"), 0.5f);
        return w;
    }
};

constexpr float kEncoderLnEps = 1e-5f;

inline int pad_up(int v, int m) { return ((v + m - 1) / m) * m; }

// Zero-pads an H x W x C tensor at the bottom/right to the given extents.
inline Tensor pad_image(const Tensor& x, int ph, int pw) {
    const int h = x.extent(0), w = x.extent(1), c = x.extent(2);
    if (ph == h && pw == w) return x;
    Tensor out({ph, pw, c});
    for (int y = 0; y < h; ++y)
        std::copy_n(x.data() + static_cast<size_t>(y) * w * c, static_cast<size_t>(w) * c,
                    out.data() + static_cast<size_t>(y) * pw * c);
    return out;
}

// Streaming image encoder: one call per frame per scale variant. The input is
// zero-padded up to a multiple of 16, and every stage kernel tiles its input
// exactly, so the pyramid extents are exact integer divisions.
inline FramePyramid encode_image(const Tensor& frame, const EncoderWeights& w,
                                 int frame_index = 0) {
    require(frame.rank() == 3 && frame.extent(2) == 3, "encode_image: RGB H x W x 3 input required");
    w.encode_calls->fetch_add(1);

    const int h = frame.extent(0), ww = frame.extent(1);
    const int ph = std::max(16, pad_up(h, 16)), pw = std::max(16, pad_up(ww, 16));
    const Tensor padded = pad_image(frame, ph, pw);

    FramePyramid pyr;
    pyr.frame_index = frame_index;
    pyr.orig_h = h;
    pyr.orig_w = ww;
    pyr.padded_h = ph;
    pyr.padded_w = pw;

    Tensor t = layer_norm(gelu(conv2d(padded, w.stem_k, w.stem_b, 4, 0)),
                          w.stem_ln_g, w.stem_ln_b, kEncoderLnEps);
    pyr.f4 = t;
    t = layer_norm(gelu(conv2d(t, w.s2_k, w.s2_b, 2, 0)), w.s2_ln_g, w.s2_ln_b, kEncoderLnEps);
    pyr.f8 = t;
    t = layer_norm(gelu(conv2d(t, w.s3_k, w.s3_b, 2, 0)), w.s3_ln_g, w.s3_ln_b, kEncoderLnEps);
    t = add(t, layer_norm(gelu(conv2d(t, w.refine_k, w.refine_b, 1, 1)),
                          w.refine_ln_g, w.refine_ln_b, kEncoderLnEps));
    pyr.f16 = t;
    return pyr;
}

// Mask encoder: 2x2/s2 conv to 4 channels, 2x2/s2 conv to 16, 1x1 conv to C',
// each downscaling stage followed by GELU and layer norm, then an elementwise
// sum with the image embedding. A missing mask adds the no-mask embedding
// instead of running the conv path.
inline Tensor encode_mask(const std::optional<Tensor>& mask, const Tensor& image_f16,
                          const EncoderWeights& w) {
    require(image_f16.rank() == 3, "encode_mask: image embedding must be h x w x C'");
    const int h16 = image_f16.extent(0), w16 = image_f16.extent(1);
    const int cprime = image_f16.extent(2);
    require(cprime == w.embed_dim(), "encode_mask: image embedding width mismatch");

    Tensor out = image_f16;
    if (!mask.has_value()) {
        for (int y = 0; y < h16; ++y)
            for (int x = 0; x < w16; ++x)
                for (int c = 0; c < cprime; ++c)
                    out.at(y, x, c) += w.no_mask_embedding.at(c);
        return out;
    }

    const Tensor& m = *mask;
    require(m.rank() == 3 && m.extent(2) == 1, "encode_mask: mask must be h x w x 1");
    require(m.extent(0) == 4 * h16 && m.extent(1) == 4 * w16,
            "encode_mask: mask extents must be exactly 4x the stride-16 grid");

    Tensor t = layer_norm(gelu(conv2d(m, w.mask1_k, w.mask1_b, 2, 0)),
                          w.mask1_ln_g, w.mask1_ln_b, kEncoderLnEps);
    t = layer_norm(gelu(conv2d(t, w.mask2_k, w.mask2_b, 2, 0)),
                   w.mask2_ln_g, w.mask2_ln_b, kEncoderLnEps);
    t = conv2d(t, w.mask3_k, w.mask3_b, 1, 0);
    return add(out, t);
}

}  // namespace vosmem
