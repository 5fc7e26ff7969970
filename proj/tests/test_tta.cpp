#include <catch2/catch.hpp>

#include "helpers.hpp"
#include "vosmem/tta.hpp"

using namespace vosmem;
using testutil::max_abs_diff;
using testutil::rand_tensor;

namespace {

SegmentationResult random_result(int h, int w, const std::vector<int>& ids, uint64_t seed) {
    SegmentationResult r;
    r.height = h;
    r.width = w;
    r.object_ids = ids;
    SplitMix64 rng(seed);
    // random per-pixel distributions over background + objects
    r.probs.assign(ids.size(), Tensor({h, w}));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            std::vector<double> raw(ids.size() + 1);
            double sum = 0.0;
            for (auto& v : raw) {
                v = rng.unit() + 1e-3;
                sum += v;
            }
            for (size_t k = 0; k < ids.size(); ++k)
                r.probs[k].at(y, x) = static_cast<float>(raw[k + 1] / sum);
        }
    r.recompute_labels();
    return r;
}

SegmentationResult hard_result(int h, int w, int id, const IndexMap& labels) {
    SegmentationResult r;
    r.height = h;
    r.width = w;
    r.object_ids = {id};
    Tensor p({h, w});
    for (int i = 0; i < h * w; ++i)
        p[static_cast<size_t>(i)] = labels.v[static_cast<size_t>(i)] == id ? 1.0f : 0.0f;
    r.probs = {std::move(p)};
    r.recompute_labels();
    return r;
}

}  // namespace

TEST_CASE("make_variants") {
    std::vector<Tensor> frames{rand_tensor({24, 32, 3}, 1, 0.0f, 1.0f)};

    SECTION("four scales with flip give eight variants") {
        const auto variants = make_variants(frames, {480, 660, 800, 1000}, true);
        CHECK(variants.size() == 8);
        for (size_t i = 0; i < variants.size(); ++i)
            CHECK(variants[i].descriptor.index == static_cast<int>(i));
    }
    SECTION("native without flip is a single identity variant") {
        const auto variants = make_variants(frames, {0}, false);
        REQUIRE(variants.size() == 1);
        CHECK(variants[0].descriptor.is_identity());
        CHECK(variants[0].frames[0] == frames[0]);
    }
    SECTION("720x1280 at scale 480 becomes 480x852") {
        const std::vector<Tensor> big{Tensor({720, 1280, 3}, 0.5f)};
        const auto variants = make_variants(big, {480}, false);
        CHECK(variants[0].descriptor.scaled_h == 480);
        CHECK(variants[0].descriptor.scaled_w == 852);
        CHECK(variants[0].frames[0].extent(0) == 480);
        CHECK(variants[0].frames[0].extent(1) == 852);
    }
    SECTION("flip variant carries flipped frames") {
        const auto variants = make_variants(frames, {0}, true);
        REQUIRE(variants.size() == 2);
        CHECK_FALSE(variants[0].descriptor.flip);
        CHECK(variants[1].descriptor.flip);
        CHECK(variants[1].frames[0] == hflip(frames[0]));
    }
    SECTION("empty scale list is a contract violation") {
        CHECK_THROWS_AS(make_variants(frames, {}, false), ContractViolation);
    }
}

TEST_CASE("invert_variant") {
    SECTION("identity descriptor returns the result unchanged") {
        const SegmentationResult r = random_result(8, 10, {1, 2}, 5);
        VariantDescriptor d;
        d.native_h = d.scaled_h = 8;
        d.native_w = d.scaled_w = 10;
        const SegmentationResult inv = invert_variant(r, d);
        CHECK(inv.probs[0] == r.probs[0]);
        CHECK(inv.probs[1] == r.probs[1]);
        CHECK(inv.labels == r.labels);
    }
    SECTION("flip descriptor applied twice restores the probabilities bit-exactly") {
        const SegmentationResult r = random_result(6, 9, {1}, 6);
        VariantDescriptor d;
        d.flip = true;
        d.native_h = d.scaled_h = 6;
        d.native_w = d.scaled_w = 9;
        // forward flip of the result, then inversion
        SegmentationResult flipped = r;
        flipped.probs[0] = Tensor::from(
            {6, 9}, hflip(Tensor::from({6, 9, 1}, r.probs[0].vec())).vec());
        flipped.recompute_labels();
        const SegmentationResult inv = invert_variant(flipped, d);
        CHECK(inv.probs[0] == r.probs[0]);
    }
    SECTION("downscale inversion keeps a constant map constant and normalized") {
        SegmentationResult half;
        half.height = 8;
        half.width = 8;
        half.object_ids = {1};
        half.probs = {Tensor({8, 8}, 0.25f)};
        half.recompute_labels();
        VariantDescriptor d;
        d.native_h = 16;
        d.native_w = 16;
        d.scaled_h = 8;
        d.scaled_w = 8;
        const SegmentationResult inv = invert_variant(half, d);
        REQUIRE(inv.height == 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                CHECK(inv.probs[0].at(y, x) == Approx(0.25).margin(1e-6));
    }
}

TEST_CASE("fuse_pixel") {
    SECTION("single result is returned byte-identically") {
        const SegmentationResult r = random_result(7, 5, {1, 3}, 10);
        const SegmentationResult fused = fuse_pixel({r}, {2.5});
        CHECK(fused.probs[0] == r.probs[0]);
        CHECK(fused.probs[1] == r.probs[1]);
        CHECK(fused.labels == r.labels);
    }
    SECTION("identical results with equal weights fuse to themselves") {
        const SegmentationResult r = random_result(6, 6, {1}, 11);
        const SegmentationResult fused = fuse_pixel({r, r}, {1.0, 1.0});
        CHECK(fused.probs[0] == r.probs[0]);
        CHECK(fused.labels == r.labels);
    }
    SECTION("weighted majority between two hard results") {
        IndexMap a(2, 2), b(2, 2);
        a.at(0, 0) = 1;  // they disagree at (0,0)
        const SegmentationResult ra = hard_result(2, 2, 1, a);
        const SegmentationResult rb = hard_result(2, 2, 1, b);
        const SegmentationResult heavy_a = fuse_pixel({ra, rb}, {2.0, 1.0});
        CHECK(heavy_a.labels.at(0, 0) == 1);
        const SegmentationResult heavy_b = fuse_pixel({ra, rb}, {1.0, 2.0});
        CHECK(heavy_b.labels.at(0, 0) == 0);
    }
    SECTION("probabilities stay normalized") {
        const SegmentationResult a = random_result(5, 5, {1, 2}, 12);
        const SegmentationResult b = random_result(5, 5, {1, 2}, 13);
        const SegmentationResult fused = fuse_pixel({a, b}, {0.7, 0.3});
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                double sum = fused.background_prob(y, x);
                for (const Tensor& p : fused.probs) sum += p.at(y, x);
                CHECK(sum == Approx(1.0).margin(1e-5));
            }
    }
    SECTION("invariant to uniform weight rescaling and to permutation") {
        const SegmentationResult a = random_result(4, 4, {1}, 14);
        const SegmentationResult b = random_result(4, 4, {1}, 15);
        const SegmentationResult c = random_result(4, 4, {1}, 16);
        const SegmentationResult f1 = fuse_pixel({a, b, c}, {1.0, 2.0, 3.0});
        const SegmentationResult f2 = fuse_pixel({a, b, c}, {0.25, 0.5, 0.75});
        CHECK(max_abs_diff(f1.probs[0], f2.probs[0]) < 1e-6);
        const SegmentationResult f3 = fuse_pixel({c, a, b}, {3.0, 1.0, 2.0});
        CHECK(max_abs_diff(f1.probs[0], f3.probs[0]) < 1e-6);
    }
    SECTION("contract violations") {
        const SegmentationResult a = random_result(4, 4, {1}, 17);
        const SegmentationResult b = random_result(4, 4, {2}, 18);
        CHECK_THROWS_AS(fuse_pixel({a, b}, {1.0, 1.0}), ContractViolation);  // id sets differ
        CHECK_THROWS_AS(fuse_pixel({a, a}, {0.0, 0.0}), ContractViolation);  // all-zero weights
        CHECK_THROWS_AS(fuse_pixel({}, {}), ContractViolation);
    }
}

TEST_CASE("score logs and video-level selection") {
    SECTION("JF must equal the mean of J and F") {
        ScoreLog log;
        log.run_id = "a";
        log.videos.push_back({"v1", 70.0, 80.0, 75.0});
        CHECK_NOTHROW(log.validate());
        log.videos.push_back({"v2", 70.0, 80.0, 76.0});
        CHECK_THROWS_AS(log.validate(), ContractViolation);
    }
    SECTION("single run wins every video") {
        ScoreLog log;
        log.run_id = "only";
        log.videos.push_back({"v1", 50, 50, 50});
        log.videos.push_back({"v2", 10, 20, 15});
        const auto sel = select_best_runs({log});
        CHECK(sel.at("v1") == "only");
        CHECK(sel.at("v2") == "only");
    }
    SECTION("the higher J&F wins per video") {
        ScoreLog a, b;
        a.run_id = "A";
        b.run_id = "B";
        a.videos.push_back({"v", 70, 70, 70});
        b.videos.push_back({"v", 75, 75, 75});
        CHECK(select_best_runs({a, b}).at("v") == "B");
        CHECK(select_best_runs({b, a}).at("v") == "B");
    }
    SECTION("exact tie goes to the lowest run id") {
        ScoreLog a, b;
        a.run_id = "runB";
        b.run_id = "runA";
        a.videos.push_back({"v", 70, 70, 70});
        b.videos.push_back({"v", 70, 70, 70});
        CHECK(select_best_runs({a, b}).at("v") == "runA");
    }
    SECTION("a log missing a video is a contract violation") {
        ScoreLog a, b;
        a.run_id = "A";
        b.run_id = "B";
        a.videos.push_back({"v1", 70, 70, 70});
        a.videos.push_back({"v2", 60, 60, 60});
        b.videos.push_back({"v1", 75, 75, 75});
        CHECK_THROWS_AS(select_best_runs({a, b}), ContractViolation);
    }
    SECTION("selection equals a brute-force per-video argmax") {
        SplitMix64 rng(20);
        std::vector<ScoreLog> logs(3);
        const std::vector<std::string> vids{"a", "b", "c", "d"};
        for (size_t r = 0; r < logs.size(); ++r) {
            logs[r].run_id = "run" + std::to_string(r);
            for (const auto& v : vids) {
                const double j = std::floor(rng.unit() * 100.0);
                logs[r].videos.push_back({v, j, j, j});
            }
        }
        const auto sel = select_best_runs(logs);
        for (const auto& v : vids) {
            double best = -1.0;
            std::string best_run;
            for (const auto& log : logs)
                for (const auto& e : log.videos)
                    if (e.video_id == v && (e.jf > best || (e.jf == best && log.run_id < best_run))) {
                        best = e.jf;
                        best_run = log.run_id;
                    }
            CHECK(sel.at(v) == best_run);
        }
    }
}
