#pragma once

#include <iostream>
#include <sstream>

#include "vosmem/dataset.hpp"
#include "vosmem/metrics.hpp"
#include "vosmem/pipeline.hpp"

namespace vosmem {

struct SegmentOptions {
    std::string input_root;
    std::string output_dir;
    RunConfig config;
    int jobs = 1;
    bool save_probs = false;
    std::string run_id = "run";
};

namespace detail {

inline void report_errors(const std::vector<std::string>& errors, std::ostream& err) {
    for (const std::string& e : errors) err << "error: " << e << "\n";
}

}  // namespace detail

// Segments every video under <input_root>/JPEGImages, writing one indexed
// mask PNG per frame (and optionally a probability sidecar) to
// <output_dir>/<video>/. Failing videos are reported; the rest still run.
// Returns 0 on full success, 1 when any video failed.
inline int cmd_segment(const SegmentOptions& opts, std::ostream& err = std::cerr) {
    const std::vector<DatasetVideo> videos = scan_dataset(opts.input_root);
    std::vector<std::string> errors;
    std::mutex errors_mutex;

    const std::vector<int> scales = opts.config.scales.empty() ? std::vector<int>{0}
                                                               : opts.config.scales;
    const auto weights = std::make_shared<const PipelineWeights>(
        PipelineWeights::seeded(opts.config.model));

    auto process = [&](const DatasetVideo& dv) {
        try {
            if (dv.frame_paths.empty())
                throw std::runtime_error(dv.video_id + ": no frames");
            if (dv.annotation_path.empty())
                throw std::runtime_error(dv.video_id + ": missing first-frame annotation");
            for (const std::string& p : dv.frame_paths)
                if (fs::path(p).extension() != ".png")
                    throw std::runtime_error(dv.video_id +
                                             ": JPEG frames are not supported, provide PNG frames");

            VideoTask task;
            task.video_id = dv.video_id;
            task.run_id = opts.run_id;
            task.model = opts.config.model;
            task.mode = opts.config.mode;
            task.memory_override =
                opts.config.memory_override_for(static_cast<int>(dv.frame_paths.size()));
            task.weights = weights;
            task.annotation = read_mask_png(dv.annotation_path);
            for (const std::string& p : dv.frame_paths) task.frames.push_back(read_frame_png(p));

            const std::vector<SegmentationResult> results =
                run_video_with_tta(task, scales, opts.config.flip);

            const fs::path out_dir = fs::path(opts.output_dir) / dv.video_id;
            fs::create_directories(out_dir);
            for (size_t t = 0; t < results.size(); ++t) {
                const std::string stem = dv.frame_stems[t];
                write_mask_png((out_dir / (stem + ".png")).string(), results[t].labels);
                if (opts.save_probs)
                    write_prob_sidecar((out_dir / (stem + ".prob")).string(), results[t].probs);
            }
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(errors_mutex);
            errors.push_back(dv.video_id + ": " + e.what());
        }
    };

    const size_t jobs = static_cast<size_t>(std::max(1, opts.jobs));
    for (size_t start = 0; start < videos.size(); start += jobs) {
        const size_t end = std::min(videos.size(), start + jobs);
        std::vector<std::future<void>> wave;
        for (size_t i = start; i < end; ++i)
            wave.push_back(std::async(std::launch::async, process, std::cref(videos[i])));
        for (auto& f : wave) f.get();
    }

    std::sort(errors.begin(), errors.end());
    detail::report_errors(errors, err);
    return errors.empty() ? 0 : 1;
}

// Scores a prediction tree against ground truth and emits a ScoreLog.
// <pred_dir>/<video>/<frame>.png against <gt>/Annotations/<video>/ (dataset
// root) or <gt>/<video>/ (plain tree). Ground truth must annotate every frame.
inline int cmd_evaluate(const std::string& pred_dir, const std::string& gt_root,
                        const std::string& out_path, const std::string& run_id,
                        ScoreLog* out_log = nullptr, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    fs::path gt_base = fs::path(gt_root) / "Annotations";
    if (!fs::is_directory(gt_base)) gt_base = gt_root;

    std::vector<std::string> video_ids;
    if (fs::is_directory(pred_dir))
        for (const auto& e : fs::directory_iterator(pred_dir))
            if (e.is_directory()) video_ids.push_back(e.path().filename().string());
    std::sort(video_ids.begin(), video_ids.end());
    if (video_ids.empty()) {
        err << "error: no predicted videos under " << pred_dir << "\n";
        return 1;
    }

    ScoreLog log;
    log.run_id = run_id;
    std::vector<std::string> errors;
    for (const std::string& vid : video_ids) {
        try {
            const std::vector<std::string> pred_files =
                list_sorted(fs::path(pred_dir) / vid, ".png");
            const std::vector<std::string> gt_files = list_sorted(gt_base / vid, ".png");
            if (gt_files.empty())
                throw std::runtime_error(vid + ": no ground-truth annotations");
            if (pred_files.size() != gt_files.size())
                throw std::runtime_error(vid + ": frame-count mismatch (pred " +
                                         std::to_string(pred_files.size()) + ", gt " +
                                         std::to_string(gt_files.size()) + ")");
            for (size_t i = 0; i < pred_files.size(); ++i)
                if (fs::path(pred_files[i]).stem() != fs::path(gt_files[i]).stem())
                    throw std::runtime_error(vid + ": frame sets differ (" +
                                             fs::path(pred_files[i]).stem().string() + " vs " +
                                             fs::path(gt_files[i]).stem().string() + ")");
            std::vector<IndexMap> pred, gt;
            for (const std::string& p : pred_files) pred.push_back(read_mask_png(p));
            for (const std::string& p : gt_files) gt.push_back(read_mask_png(p));
            const JFScore s = score_video(pred, gt);
            log.videos.push_back({vid, s.j, s.f, s.jf});
        } catch (const std::exception& e) {
            errors.push_back(e.what());
        }
    }

    const nlohmann::json j = score_log_to_json(log);
    if (out_path.empty()) out << j.dump(2) << "\n";
    else write_score_log(out_path, log);
    if (out_log) *out_log = log;

    detail::report_errors(errors, err);
    return errors.empty() ? 0 : 1;
}

struct FuseOptions {
    std::vector<std::string> run_dirs;
    std::string output_dir;
    std::vector<double> weights;         // pixel mode; empty = all 1
    bool video_level = false;
    std::vector<std::string> log_paths;  // video mode, parallel to run_dirs
};

namespace detail {

inline void fuse_video_pixelwise(const std::string& video_id, const FuseOptions& opts,
                                 const std::vector<double>& weights) {
    const std::vector<std::string> stems = [&] {
        std::vector<std::string> s;
        for (const std::string& p : list_sorted(fs::path(opts.run_dirs[0]) / video_id, ".png"))
            s.push_back(fs::path(p).stem().string());
        return s;
    }();
    if (stems.empty()) throw std::runtime_error(video_id + ": no frames in " + opts.run_dirs[0]);

    // object ids come from the first frame, which every run copies from the
    // same annotation
    std::vector<int> ids;
    for (size_t r = 0; r < opts.run_dirs.size(); ++r) {
        const fs::path first = fs::path(opts.run_dirs[r]) / video_id / (stems[0] + ".png");
        const std::vector<int> run_ids = read_mask_png(first.string()).object_ids();
        if (r == 0) ids = run_ids;
        else if (run_ids != ids)
            throw std::runtime_error(video_id + "/" + stems[0] + ": object-set mismatch between runs");
    }

    const fs::path out_dir = fs::path(opts.output_dir) / video_id;
    fs::create_directories(out_dir);
    for (size_t t = 0; t < stems.size(); ++t) {
        std::vector<SegmentationResult> results;
        for (const std::string& run : opts.run_dirs) {
            const fs::path mask_path = fs::path(run) / video_id / (stems[t] + ".png");
            const fs::path prob_path = fs::path(run) / video_id / (stems[t] + ".prob");
            if (!fs::is_regular_file(mask_path))
                throw std::runtime_error(video_id + "/" + stems[t] + ": missing in run " + run);
            if (!fs::is_regular_file(prob_path))
                throw std::runtime_error(video_id + "/" + stems[t] +
                                         ": missing probability sidecar in run " + run +
                                         " (re-run segment with --save-probs)");
            SegmentationResult r;
            r.video_id = video_id;
            r.frame_index = static_cast<int>(t);
            r.object_ids = ids;
            r.probs = read_prob_sidecar(prob_path.string());
            if (r.probs.size() != ids.size())
                throw std::runtime_error(video_id + "/" + stems[t] + ": object-set mismatch (sidecar has " +
                                         std::to_string(r.probs.size()) + " planes, expected " +
                                         std::to_string(ids.size()) + ")");
            r.height = r.probs[0].extent(0);
            r.width = r.probs[0].extent(1);
            results.push_back(std::move(r));
        }
        const SegmentationResult fused = fuse_pixel(results, weights);
        write_mask_png((out_dir / (stems[t] + ".png")).string(), fused.labels);
        write_prob_sidecar((out_dir / (stems[t] + ".prob")).string(), fused.probs);
    }
}

}  // namespace detail

// Pixel mode: weighted soft voting over stored probability sidecars, frame by
// frame. Video mode: per video, copies the run with the highest logged J&F.
inline int cmd_fuse(const FuseOptions& opts, std::ostream& err = std::cerr) {
    require(!opts.run_dirs.empty(), "fuse: at least one run directory required");
    std::vector<std::string> video_ids;
    for (const auto& e : fs::directory_iterator(opts.run_dirs[0]))
        if (e.is_directory()) video_ids.push_back(e.path().filename().string());
    std::sort(video_ids.begin(), video_ids.end());
    if (video_ids.empty()) {
        err << "error: no videos under " << opts.run_dirs[0] << "\n";
        return 1;
    }

    std::vector<std::string> errors;
    if (opts.video_level) {
        require(opts.log_paths.size() == opts.run_dirs.size(),
                "fuse: one score log per run directory required in video mode");
        std::vector<ScoreLog> logs;
        std::map<std::string, std::string> run_dir_of;
        for (size_t i = 0; i < opts.log_paths.size(); ++i) {
            logs.push_back(read_score_log(opts.log_paths[i]));
            run_dir_of[logs.back().run_id] = opts.run_dirs[i];
        }
        const std::map<std::string, std::string> selection = select_best_runs(logs);
        for (const std::string& vid : video_ids) {
            try {
                auto sel = selection.find(vid);
                if (sel == selection.end())
                    throw std::runtime_error(vid + ": not present in the score logs");
                const fs::path src = fs::path(run_dir_of.at(sel->second)) / vid;
                if (!fs::is_directory(src))
                    throw std::runtime_error(vid + ": selected run " + sel->second +
                                             " has no output directory");
                const fs::path dst = fs::path(opts.output_dir) / vid;
                fs::create_directories(dst);
                for (const auto& e : fs::directory_iterator(src))
                    if (e.is_regular_file())
                        fs::copy_file(e.path(), dst / e.path().filename(),
                                      fs::copy_options::overwrite_existing);
            } catch (const std::exception& e) {
                errors.push_back(e.what());
            }
        }
    } else {
        std::vector<double> weights = opts.weights;
        if (weights.empty()) weights.assign(opts.run_dirs.size(), 1.0);
        require(weights.size() == opts.run_dirs.size(),
                "fuse: one weight per run directory required");
        for (const std::string& vid : video_ids) {
            try {
                detail::fuse_video_pixelwise(vid, opts, weights);
            } catch (const std::exception& e) {
                errors.push_back(e.what());
            }
        }
    }

    std::sort(errors.begin(), errors.end());
    detail::report_errors(errors, err);
    return errors.empty() ? 0 : 1;
}

}  // namespace vosmem
