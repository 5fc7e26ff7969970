#pragma once

#include <filesystem>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "vosmem/core.hpp"
#include "vosmem/pipeline.hpp"
#include "vosmem/png_io.hpp"
#include "vosmem/tta.hpp"

namespace vosmem {

namespace fs = std::filesystem;

// DAVIS/MOSE-style layout:
//   <root>/JPEGImages/<video>/<frame>.png   (sorted lexicographically)
//   <root>/Annotations/<video>/<first frame>.png
struct DatasetVideo {
    std::string video_id;
    std::vector<std::string> frame_paths;
    std::vector<std::string> frame_stems;
    std::string annotation_path;  // empty when missing
};

inline std::vector<std::string> list_sorted(const fs::path& dir, const char* ext) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ext)
            out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<DatasetVideo> scan_dataset(const std::string& root) {
    const fs::path images = fs::path(root) / "JPEGImages";
    if (!fs::is_directory(images))
        throw std::runtime_error("dataset root has no JPEGImages directory: " + root);
    std::vector<std::string> video_dirs;
    for (const auto& e : fs::directory_iterator(images))
        if (e.is_directory()) video_dirs.push_back(e.path().filename().string());
    std::sort(video_dirs.begin(), video_dirs.end());

    std::vector<DatasetVideo> out;
    for (const std::string& vid : video_dirs) {
        DatasetVideo v;
        v.video_id = vid;
        for (const auto& e : fs::directory_iterator(images / vid)) {
            if (!e.is_regular_file()) continue;
            const std::string ext = e.path().extension().string();
            if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
                v.frame_paths.push_back(e.path().string());
        }
        std::sort(v.frame_paths.begin(), v.frame_paths.end());
        for (const std::string& p : v.frame_paths)
            v.frame_stems.push_back(fs::path(p).stem().string());

        if (!v.frame_stems.empty()) {
            const fs::path ann_dir = fs::path(root) / "Annotations" / vid;
            const fs::path preferred = ann_dir / (v.frame_stems.front() + ".png");
            if (fs::is_regular_file(preferred)) {
                v.annotation_path = preferred.string();
            } else {
                const std::vector<std::string> anns = list_sorted(ann_dir, ".png");
                if (!anns.empty()) v.annotation_path = anns.front();
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

// ----------------------------------------------------------------------------
// Probability sidecar: header {magic, H, W, K} as little-endian uint32,
// followed by K planes of H*W little-endian float32 (planes ordered by
// ascending object id).
// ----------------------------------------------------------------------------
constexpr uint32_t kProbSidecarMagic = 0x31425250u;  // "PRB1"

namespace detail {

inline void push_le32(std::vector<uint8_t>& out, uint32_t x) {
    out.push_back(static_cast<uint8_t>(x));
    out.push_back(static_cast<uint8_t>(x >> 8));
    out.push_back(static_cast<uint8_t>(x >> 16));
    out.push_back(static_cast<uint8_t>(x >> 24));
}

inline uint32_t read_le32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void write_prob_sidecar(const std::string& path, const std::vector<Tensor>& probs) {
    require(!probs.empty(), "write_prob_sidecar: at least one plane required");
    const int h = probs[0].extent(0), w = probs[0].extent(1);
    std::vector<uint8_t> out;
    out.reserve(16 + probs.size() * static_cast<size_t>(h) * w * 4);
    detail::push_le32(out, kProbSidecarMagic);
    detail::push_le32(out, static_cast<uint32_t>(h));
    detail::push_le32(out, static_cast<uint32_t>(w));
    detail::push_le32(out, static_cast<uint32_t>(probs.size()));
    for (const Tensor& p : probs) {
        require(p.extent(0) == h && p.extent(1) == w, "write_prob_sidecar: extent mismatch");
        for (long long i = 0; i < p.numel(); ++i) {
            uint32_t bits;
            const float v = p[static_cast<size_t>(i)];
            std::memcpy(&bits, &v, 4);
            detail::push_le32(out, bits);
        }
    }
    write_file_bytes(path, out);
}

inline std::vector<Tensor> read_prob_sidecar(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 16) throw std::runtime_error(path + ": truncated sidecar");
    if (detail::read_le32(bytes.data()) != kProbSidecarMagic)
        throw std::runtime_error(path + ": bad sidecar magic");
    const uint32_t h = detail::read_le32(bytes.data() + 4);
    const uint32_t w = detail::read_le32(bytes.data() + 8);
    const uint32_t k = detail::read_le32(bytes.data() + 12);
    const size_t plane = static_cast<size_t>(h) * w;
    if (bytes.size() != 16 + 4 * plane * k)
        throw std::runtime_error(path + ": sidecar size mismatch");
    std::vector<Tensor> probs;
    const uint8_t* p = bytes.data() + 16;
    for (uint32_t kk = 0; kk < k; ++kk) {
        Tensor t({static_cast<int>(h), static_cast<int>(w)});
        for (size_t i = 0; i < plane; ++i, p += 4) {
            const uint32_t bits = detail::read_le32(p);
            float v;
            std::memcpy(&v, &bits, 4);
            t[i] = v;
        }
        probs.push_back(std::move(t));
    }
    return probs;
}

// ----------------------------------------------------------------------------
// Score log JSON: {run_id, videos: [{video_id, J, F, JF}]}, 0-100 scale.
// ----------------------------------------------------------------------------
inline nlohmann::json score_log_to_json(const ScoreLog& log) {
    nlohmann::json j;
    j["run_id"] = log.run_id;
    j["videos"] = nlohmann::json::array();
    double js = 0.0, fsum = 0.0, jfs = 0.0;
    for (const auto& v : log.videos) {
        j["videos"].push_back({{"video_id", v.video_id}, {"J", v.j}, {"F", v.f}, {"JF", v.jf}});
        js += v.j;
        fsum += v.f;
        jfs += v.jf;
    }
    if (!log.videos.empty()) {
        const double n = static_cast<double>(log.videos.size());
        j["mean"] = {{"J", js / n}, {"F", fsum / n}, {"JF", jfs / n}};
    }
    return j;
}

inline ScoreLog score_log_from_json(const nlohmann::json& j) {
    ScoreLog log;
    log.run_id = j.at("run_id").get<std::string>();
    for (const auto& v : j.at("videos")) {
        ScoreLog::VideoEntry e;
        e.video_id = v.at("video_id").get<std::string>();
        e.j = v.at("J").get<double>();
        e.f = v.at("F").get<double>();
        e.jf = v.at("JF").get<double>();
        log.videos.push_back(std::move(e));
    }
    log.validate();
    return log;
}

inline void write_score_log(const std::string& path, const ScoreLog& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write score log: " + path);
    out << score_log_to_json(log).dump(2) << "\n";
}

inline ScoreLog read_score_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open score log: " + path);
    nlohmann::json j;
    in >> j;
    return score_log_from_json(j);
}

// ----------------------------------------------------------------------------
// Run configuration JSON. Keys mirror the memory hyperparameter names plus
// model widths, seed, scales and flip; command-line flags override file
// values.
// ----------------------------------------------------------------------------
struct RunConfig {
    ModelConfig model;
    std::optional<int> max_mem_frames, min_mem_frames, top_k;
    std::vector<int> scales;  // empty = native only
    bool flip = false;
    EncoderMode mode = EncoderMode::LearnedToy;

    // Partial overrides layer on top of the per-video routed parameters.
    std::optional<MemoryConfig> memory_override_for(int num_frames) const {
        if (!max_mem_frames && !min_mem_frames && !top_k) return std::nullopt;
        const MemoryConfig routed = route_hyperparams(num_frames);
        MemoryConfig cfg{max_mem_frames.value_or(routed.max_mem_frames),
                         min_mem_frames.value_or(routed.min_mem_frames),
                         top_k.value_or(routed.top_k)};
        cfg.validate();
        return cfg;
    }
};

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("max_mem_frames")) c.max_mem_frames = j.at("max_mem_frames").get<int>();
    if (j.contains("min_mem_frames")) c.min_mem_frames = j.at("min_mem_frames").get<int>();
    if (j.contains("top_k")) c.top_k = j.at("top_k").get<int>();
    if (j.contains("c4")) c.model.c4 = j.at("c4").get<int>();
    if (j.contains("c8")) c.model.c8 = j.at("c8").get<int>();
    if (j.contains("c16")) c.model.c16 = j.at("c16").get<int>();
    if (j.contains("key_dim")) c.model.key_dim = j.at("key_dim").get<int>();
    if (j.contains("num_queries")) c.model.num_queries = j.at("num_queries").get<int>();
    if (j.contains("blocks")) c.model.blocks = j.at("blocks").get<int>();
    if (j.contains("heads")) c.model.heads = j.at("heads").get<int>();
    if (j.contains("seed")) c.model.seed = j.at("seed").get<uint64_t>();
    if (j.contains("scales")) c.scales = j.at("scales").get<std::vector<int>>();
    if (j.contains("flip")) c.flip = j.at("flip").get<bool>();
    if (j.contains("encoder")) {
        const std::string m = j.at("encoder").get<std::string>();
        if (m == "analytic") c.mode = EncoderMode::Analytic;
        else if (m == "toy") c.mode = EncoderMode::LearnedToy;
        else throw std::runtime_error("config: encoder must be 'toy' or 'analytic'");
    }
    return c;
}

inline RunConfig read_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    return run_config_from_json(j);
}

}  // namespace vosmem
