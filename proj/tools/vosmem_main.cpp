// vosmem: memory-based video object segmentation engine and evaluation
// toolkit. Subcommands: segment, evaluate, fuse.

#include <CLI11.hpp>

#include "vosmem/vosmem.hpp"

namespace {

std::vector<int> parse_scales(const std::string& s) {
    if (s == "native" || s.empty()) return {0};
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "native") {
            out.push_back(0);
            continue;
        }
        out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw CLI::ValidationError("--scales", "empty scale list");
    return out;
}

std::vector<double> parse_weights(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

bool parse_on_off(const std::string& s, const char* flag) {
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    throw CLI::ValidationError(flag, "expected on or off");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memory-based video object segmentation engine"};
    app.require_subcommand(1);

    // --- segment -------------------------------------------------------------
    auto* seg = app.add_subcommand("segment", "propagate first-frame annotations through videos");
    std::string seg_input, seg_output, seg_scales, seg_flip, seg_encoder, seg_config, seg_run_id = "run";
    int seg_max_mem = -1, seg_min_mem = -1, seg_top_k = -1, seg_jobs = 1;
    uint64_t seg_seed = 0;
    bool seg_save_probs = false;
    seg->add_option("input", seg_input, "dataset root (JPEGImages/ + Annotations/)")->required();
    seg->add_option("output", seg_output, "output directory")->required();
    seg->add_option("--scales", seg_scales, "comma list of shorter-side targets, or 'native'");
    seg->add_option("--flip", seg_flip, "horizontal-flip augmentation: on|off");
    seg->add_option("--seed", seg_seed, "rng seed for all model weights");
    seg->add_option("--encoder", seg_encoder, "encoder mode: toy|analytic");
    seg->add_option("--config", seg_config, "JSON config file (flags override it)");
    seg->add_option("--max-mem-frames", seg_max_mem, "memory bank capacity");
    seg->add_option("--min-mem-frames", seg_min_mem, "memory bank size after eviction");
    seg->add_option("--top-k", seg_top_k, "attention top-k");
    seg->add_option("--jobs", seg_jobs, "videos processed in parallel");
    seg->add_option("--run-id", seg_run_id, "run identifier");
    seg->add_flag("--save-probs", seg_save_probs, "write probability sidecars for pixel fusion");

    // --- evaluate ------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "score predictions with J, F and J&F");
    std::string eval_pred, eval_gt, eval_out, eval_run_id = "run";
    eval->add_option("predictions", eval_pred, "prediction tree (<dir>/<video>/<frame>.png)")->required();
    eval->add_option("ground_truth", eval_gt, "dataset root or annotation tree")->required();
    eval->add_option("--out", eval_out, "write the score log JSON here instead of stdout");
    eval->add_option("--run-id", eval_run_id, "run identifier stored in the log");

    // --- fuse ----------------------------------------------------------------
    auto* fuse = app.add_subcommand("fuse", "fuse runs pixel-wise or select per-video winners");
    std::string fuse_out, fuse_weights, fuse_logs;
    std::vector<std::string> fuse_runs;
    bool fuse_video_level = false;
    fuse->add_option("output", fuse_out, "output directory")->required();
    fuse->add_option("runs", fuse_runs, "run directories")->required()->expected(-1);
    fuse->add_option("--weights", fuse_weights, "comma list of per-run voting weights");
    fuse->add_flag("--video-level", fuse_video_level, "pick per-video winners from score logs");
    fuse->add_option("--logs", fuse_logs, "comma list of score logs, one per run (video mode)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (seg->parsed()) {
            vosmem::SegmentOptions opts;
            opts.input_root = seg_input;
            opts.output_dir = seg_output;
            opts.jobs = seg_jobs;
            opts.save_probs = seg_save_probs;
            opts.run_id = seg_run_id;
            if (!seg_config.empty()) opts.config = vosmem::read_run_config(seg_config);
            if (!seg_scales.empty()) opts.config.scales = parse_scales(seg_scales);
            if (!seg_flip.empty()) opts.config.flip = parse_on_off(seg_flip, "--flip");
            if (seg->count("--seed")) opts.config.model.seed = seg_seed;
            if (!seg_encoder.empty()) {
                if (seg_encoder == "analytic") opts.config.mode = vosmem::EncoderMode::Analytic;
                else if (seg_encoder == "toy") opts.config.mode = vosmem::EncoderMode::LearnedToy;
                else throw CLI::ValidationError("--encoder", "expected toy or analytic");
            }
            if (seg_max_mem >= 0) opts.config.max_mem_frames = seg_max_mem;
            if (seg_min_mem >= 0) opts.config.min_mem_frames = seg_min_mem;
            if (seg_top_k >= 0) opts.config.top_k = seg_top_k;
            return vosmem::cmd_segment(opts);
        }
        if (eval->parsed()) {
            return vosmem::cmd_evaluate(eval_pred, eval_gt, eval_out, eval_run_id);
        }
        if (fuse->parsed()) {
            vosmem::FuseOptions opts;
            opts.output_dir = fuse_out;
            opts.run_dirs = fuse_runs;
            opts.video_level = fuse_video_level;
            if (!fuse_weights.empty()) opts.weights = parse_weights(fuse_weights);
            if (!fuse_logs.empty()) {
                std::stringstream ss(fuse_logs);
                std::string tok;
                while (std::getline(ss, tok, ',')) opts.log_paths.push_back(tok);
            }
            return vosmem::cmd_fuse(opts);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const vosmem::ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
