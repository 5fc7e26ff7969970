#include <catch2/catch.hpp>

#include <filesystem>

#include "helpers.hpp"
#include "vosmem/dataset.hpp"
#include "vosmem/png_io.hpp"

using namespace vosmem;
using testutil::rand_tensor;

namespace {

std::string temp_dir() {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("vosmem_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("indexed mask PNG round trip") {
    const std::string dir = temp_dir();
    SplitMix64 rng(1);
    for (int iter = 0; iter < 5; ++iter) {
        const int h = 1 + static_cast<int>(rng.next() % 40);
        const int w = 1 + static_cast<int>(rng.next() % 40);
        IndexMap m(h, w);
        for (auto& v : m.v) v = static_cast<int32_t>(rng.next() % 4);
        const std::string path = dir + "/mask" + std::to_string(iter) + ".png";
        write_mask_png(path, m);
        CHECK(read_mask_png(path) == m);
    }
}

TEST_CASE("mask PNG writing is byte-deterministic") {
    const std::string dir = temp_dir();
    IndexMap m(12, 9);
    SplitMix64 rng(2);
    for (auto& v : m.v) v = static_cast<int32_t>(rng.next() % 3);
    write_mask_png(dir + "/a.png", m);
    write_mask_png(dir + "/b.png", m);
    CHECK(read_file_bytes(dir + "/a.png") == read_file_bytes(dir + "/b.png"));
}

TEST_CASE("palette is written but ignored on read") {
    const std::string dir = temp_dir();
    IndexMap m(4, 4);
    m.at(1, 1) = 2;
    m.at(2, 2) = 7;
    write_mask_png(dir + "/p.png", m);
    const PngImage img = decode_png(read_file_bytes(dir + "/p.png"));
    CHECK(img.indexed);
    CHECK_FALSE(img.palette.empty());
    CHECK(read_mask_png(dir + "/p.png") == m);  // raw indices, not palette colors
}

TEST_CASE("grayscale PNG reads as a mask") {
    const std::string dir = temp_dir();
    IndexMap m(3, 5);
    m.at(0, 0) = 1;
    m.at(2, 4) = 2;
    std::vector<uint8_t> px(m.v.size());
    for (size_t i = 0; i < px.size(); ++i) px[i] = static_cast<uint8_t>(m.v[i]);
    write_file_bytes(dir + "/g.png", encode_png(3, 5, 1, px.data()));
    CHECK(read_mask_png(dir + "/g.png") == m);
}

TEST_CASE("RGB frame PNG round trip") {
    const std::string dir = temp_dir();
    Tensor frame({6, 7, 3});
    SplitMix64 rng(3);
    for (long long i = 0; i < frame.numel(); ++i)
        frame[static_cast<size_t>(i)] = static_cast<float>(rng.next() % 256) / 255.0f;
    const std::string path = dir + "/f.png";
    write_frame_png(path, frame);
    const Tensor back = read_frame_png(path);
    REQUIRE(back.shape() == frame.shape());
    CHECK(testutil::max_abs_diff(back, frame) == 0.0);  // values were exact 8-bit levels
}

TEST_CASE("decode_png rejects garbage") {
    CHECK_THROWS_AS(decode_png({1, 2, 3, 4}), std::runtime_error);
}

TEST_CASE("probability sidecar") {
    const std::string dir = temp_dir();
    const std::string path = dir + "/x.prob";
    const Tensor p0 = rand_tensor({5, 4}, 9, 0.0f, 1.0f);
    const Tensor p1 = rand_tensor({5, 4}, 10, 0.0f, 1.0f);
    write_prob_sidecar(path, {p0, p1});

    SECTION("header layout is {magic, H, W, K} little-endian") {
        const std::vector<uint8_t> bytes = read_file_bytes(path);
        REQUIRE(bytes.size() == 16 + 2 * 5 * 4 * 4);
        CHECK(bytes[0] == 'P');
        CHECK(bytes[1] == 'R');
        CHECK(bytes[2] == 'B');
        CHECK(bytes[3] == '1');
        CHECK(bytes[4] == 5);  // H
        CHECK(bytes[8] == 4);  // W
        CHECK(bytes[12] == 2); // K
    }
    SECTION("values round trip bit-exactly") {
        const std::vector<Tensor> back = read_prob_sidecar(path);
        REQUIRE(back.size() == 2);
        CHECK(back[0] == p0);
        CHECK(back[1] == p1);
    }
    SECTION("corrupt files are rejected") {
        std::vector<uint8_t> bytes = read_file_bytes(path);
        bytes[0] = 'X';
        write_file_bytes(dir + "/bad.prob", bytes);
        CHECK_THROWS_AS(read_prob_sidecar(dir + "/bad.prob"), std::runtime_error);
        bytes = read_file_bytes(path);
        bytes.pop_back();
        write_file_bytes(dir + "/short.prob", bytes);
        CHECK_THROWS_AS(read_prob_sidecar(dir + "/short.prob"), std::runtime_error);
    }
}

TEST_CASE("score log JSON") {
    const std::string dir = temp_dir();
    ScoreLog log;
    log.run_id = "runX";
    log.videos.push_back({"v1", 70.5, 80.5, 75.5});
    log.videos.push_back({"v2", 100.0, 100.0, 100.0});
    const std::string path = dir + "/log.json";
    write_score_log(path, log);

    SECTION("schema keys") {
        const nlohmann::json j = score_log_to_json(log);
        CHECK(j.at("run_id") == "runX");
        CHECK(j.at("videos").size() == 2);
        CHECK(j.at("videos")[0].at("video_id") == "v1");
        CHECK(j.at("videos")[0].at("J") == 70.5);
        CHECK(j.at("videos")[0].at("F") == 80.5);
        CHECK(j.at("videos")[0].at("JF") == 75.5);
        CHECK(j.at("mean").at("JF") == Approx(87.75));
    }
    SECTION("round trip") {
        const ScoreLog back = read_score_log(path);
        CHECK(back.run_id == "runX");
        REQUIRE(back.videos.size() == 2);
        CHECK(back.videos[0].video_id == "v1");
        CHECK(back.videos[0].jf == 75.5);
    }
    SECTION("inconsistent JF is rejected on load") {
        nlohmann::json j = score_log_to_json(log);
        j["videos"][0]["JF"] = 10.0;
        CHECK_THROWS_AS(score_log_from_json(j), ContractViolation);
    }
}

TEST_CASE("run config JSON") {
    const nlohmann::json j = {
        {"max_mem_frames", 45}, {"min_mem_frames", 40}, {"top_k", 40},
        {"c4", 16}, {"c8", 24}, {"c16", 32}, {"key_dim", 16},
        {"num_queries", 4}, {"blocks", 2}, {"heads", 2}, {"seed", 77},
        {"scales", {480, 660}}, {"flip", true}, {"encoder", "analytic"}};
    const RunConfig c = run_config_from_json(j);
    CHECK(c.model.c4 == 16);
    CHECK(c.model.c16 == 32);
    CHECK(c.model.seed == 77);
    CHECK(c.scales == std::vector<int>{480, 660});
    CHECK(c.flip);
    CHECK(c.mode == EncoderMode::Analytic);
    REQUIRE(c.memory_override_for(10).has_value());
    CHECK(c.memory_override_for(10)->max_mem_frames == 45);
    CHECK(c.memory_override_for(10)->top_k == 40);

    SECTION("defaults survive an empty config") {
        const RunConfig d = run_config_from_json(nlohmann::json::object());
        CHECK(d.model.c16 == 64);
        CHECK_FALSE(d.memory_override_for(10).has_value());
        CHECK(d.mode == EncoderMode::LearnedToy);
    }
    SECTION("partial overrides layer on the routed parameters") {
        RunConfig p;
        p.top_k = 99;
        CHECK(p.memory_override_for(10)->max_mem_frames == 15);   // short-video routing
        CHECK(p.memory_override_for(10)->top_k == 99);
        CHECK(p.memory_override_for(300)->max_mem_frames == 45);  // long-video routing
        CHECK(p.memory_override_for(300)->top_k == 99);
    }
    SECTION("bad encoder name is rejected") {
        CHECK_THROWS_AS(run_config_from_json({{"encoder", "resnet"}}), std::runtime_error);
    }
}

TEST_CASE("dataset scan") {
    const std::string root = temp_dir();
    namespace dfs = std::filesystem;
    dfs::create_directories(dfs::path(root) / "JPEGImages" / "vid1");
    dfs::create_directories(dfs::path(root) / "Annotations" / "vid1");
    Tensor frame({8, 8, 3}, 0.5f);
    write_frame_png((dfs::path(root) / "JPEGImages" / "vid1" / "00001.png").string(), frame);
    write_frame_png((dfs::path(root) / "JPEGImages" / "vid1" / "00000.png").string(), frame);
    IndexMap ann(8, 8);
    ann.at(4, 4) = 1;
    write_mask_png((dfs::path(root) / "Annotations" / "vid1" / "00000.png").string(), ann);

    const std::vector<DatasetVideo> videos = scan_dataset(root);
    REQUIRE(videos.size() == 1);
    CHECK(videos[0].video_id == "vid1");
    REQUIRE(videos[0].frame_stems.size() == 2);
    CHECK(videos[0].frame_stems[0] == "00000");  // lexicographic order
    CHECK(videos[0].frame_stems[1] == "00001");
    CHECK_FALSE(videos[0].annotation_path.empty());

    SECTION("jpeg frames are listed so the loader can report them per video") {
        write_file_bytes((dfs::path(root) / "JPEGImages" / "vid1" / "00002.jpg").string(), {0xff});
        const std::vector<DatasetVideo> with_jpg = scan_dataset(root);
        CHECK(with_jpg[0].frame_paths.size() == 3);
    }
}
