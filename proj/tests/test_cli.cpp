#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "synthetic.hpp"
#include "vosmem/dataset.hpp"
#include "vosmem/png_io.hpp"

using namespace vosmem;
namespace dfs = std::filesystem;

namespace {

std::string cli() { return VOSMEM_CLI_PATH; }

int run_cli(const std::string& args) {
    const std::string cmd = cli() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_dir(const char* tag) {
    static int counter = 0;
    const auto dir = dfs::temp_directory_path() /
                     ("vosmem_cli_" + std::string(tag) + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    dfs::create_directories(dir);
    return dir.string();
}

std::string make_dataset(int frames, bool gt_all_frames = false) {
    const std::string root = temp_dir("data");
    const testutil::SquareVideo v = testutil::make_square_video(32, 32, 6, frames, 13, 4);
    dfs::create_directories(dfs::path(root) / "JPEGImages" / "toy");
    dfs::create_directories(dfs::path(root) / "Annotations" / "toy");
    char name[16];
    for (int t = 0; t < frames; ++t) {
        std::snprintf(name, sizeof name, "%05d.png", t);
        write_frame_png((dfs::path(root) / "JPEGImages" / "toy" / name).string(),
                        v.frames[static_cast<size_t>(t)]);
        if (gt_all_frames)
            write_mask_png((dfs::path(root) / "Annotations" / "toy" / name).string(),
                           v.gt[static_cast<size_t>(t)]);
    }
    if (!gt_all_frames)
        write_mask_png((dfs::path(root) / "Annotations" / "toy" / "00000.png").string(), v.gt[0]);
    return root;
}

std::map<std::string, std::vector<uint8_t>> tree_bytes(const std::string& dir) {
    std::map<std::string, std::vector<uint8_t>> files;
    for (const auto& e : dfs::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            files[dfs::relative(e.path(), dir).string()] = read_file_bytes(e.path().string());
    return files;
}

}  // namespace

TEST_CASE("cli exit codes") {
    SECTION("help exits zero") {
        CHECK(run_cli("--help") == 0);
        CHECK(run_cli("segment --help") == 0);
    }
    SECTION("invalid arguments exit 2") {
        CHECK(run_cli("") == 2);                       // missing subcommand
        CHECK(run_cli("segment") == 2);                // missing positionals
        CHECK(run_cli("segment --bogus a b") == 2);    // unknown flag
        CHECK(run_cli("frobnicate") == 2);             // unknown subcommand
        CHECK(run_cli("evaluate onlyone") == 2);       // missing positional
    }
    SECTION("invalid option values exit 2") {
        const std::string root = make_dataset(2);
        const std::string out = temp_dir("out");
        CHECK(run_cli("segment --encoder resnet " + root + " " + out) == 2);
        CHECK(run_cli("segment --flip maybe " + root + " " + out) == 2);
    }
    SECTION("missing dataset exits 2") {
        CHECK(run_cli("segment /nonexistent-root " + temp_dir("out")) == 2);
    }
}

TEST_CASE("cli segment / evaluate round trip") {
    const std::string root = make_dataset(3, /*gt_all_frames=*/true);
    const std::string out = temp_dir("seg");

    REQUIRE(run_cli("segment --encoder analytic --max-mem-frames 3 --min-mem-frames 2 --jobs 2 " +
                    root + " " + out) == 0);
    REQUIRE(dfs::is_regular_file(dfs::path(out) / "toy" / "00002.png"));

    const std::string log_path = temp_dir("logs") + "/score.json";
    REQUIRE(run_cli("evaluate --run-id cli_run --out " + log_path + " " + out + " " + root) == 0);
    const ScoreLog log = read_score_log(log_path);
    REQUIRE(log.videos.size() == 1);
    CHECK(log.run_id == "cli_run");
    // the analytic encoder propagates the synthetic square exactly
    CHECK(log.videos[0].jf == Approx(100.0).margin(1e-6));
}

TEST_CASE("cli flags override config file values") {
    const std::string root = make_dataset(2);
    const std::string cfg_dir = temp_dir("cfg");

    const std::string cfg5 = cfg_dir + "/seed5.json";
    std::ofstream(cfg5) << R"({"c4":16,"c8":24,"c16":32,"key_dim":16,"num_queries":4,"blocks":1,"seed":5})";
    const std::string cfg7 = cfg_dir + "/seed7.json";
    std::ofstream(cfg7) << R"({"c4":16,"c8":24,"c16":32,"key_dim":16,"num_queries":4,"blocks":1,"seed":7})";

    const std::string out_override = temp_dir("ov");
    const std::string out_direct = temp_dir("dr");
    const std::string out_plain5 = temp_dir("p5");
    REQUIRE(run_cli("segment --config " + cfg5 + " --seed 7 " + root + " " + out_override) == 0);
    REQUIRE(run_cli("segment --config " + cfg7 + " " + root + " " + out_direct) == 0);
    REQUIRE(run_cli("segment --config " + cfg5 + " " + root + " " + out_plain5) == 0);

    CHECK(tree_bytes(out_override) == tree_bytes(out_direct));   // flag wins
    CHECK_FALSE(tree_bytes(out_override) == tree_bytes(out_plain5));
}

TEST_CASE("cli fuse") {
    const std::string root = make_dataset(3);
    const std::string run1 = temp_dir("r1");
    const std::string run2 = temp_dir("r2");
    REQUIRE(run_cli("segment --seed 21 --save-probs " + root + " " + run1) == 0);
    REQUIRE(run_cli("segment --seed 22 --save-probs " + root + " " + run2) == 0);

    SECTION("pixel-level with degenerate weights reproduces one run") {
        const std::string fused = temp_dir("fz");
        REQUIRE(run_cli("fuse --weights 0,1 " + fused + " " + run1 + " " + run2) == 0);
        CHECK(tree_bytes(fused) == tree_bytes(run2));
    }
    SECTION("video-level selection through the CLI") {
        ScoreLog la, lb;
        la.run_id = "r1";
        la.videos.push_back({"toy", 60, 60, 60});
        lb.run_id = "r2";
        lb.videos.push_back({"toy", 90, 90, 90});
        const std::string logs = temp_dir("fl");
        write_score_log(logs + "/a.json", la);
        write_score_log(logs + "/b.json", lb);
        const std::string fused = temp_dir("fv");
        REQUIRE(run_cli("fuse --video-level --logs " + logs + "/a.json," + logs + "/b.json " +
                        fused + " " + run1 + " " + run2) == 0);
        CHECK(tree_bytes(fused) == tree_bytes(run2));
    }
}
