// Command-line front end for the set-trained GAN pipeline: synthetic corpus
// generation, preprocessing, adversarial training, and disentanglement
// reports. One command per process; see README for the full workflow.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "setgan/setgan.hpp"

namespace fs = std::filesystem;
using namespace setgan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string g_diagnostic_dir;  // where a numeric-failure dump lands

void check_device_env() {
    const char* dev = std::getenv("SETGAN_DEVICE");
    if (dev && *dev && std::string(dev) != "cpu")
        throw std::invalid_argument(
            "SETGAN_DEVICE=" + std::string(dev) + " is not available in this build (cpu only)");
}

void write_provenance(const fs::path& artifact, const nlohmann::json& extra) {
    nlohmann::json j = extra;
    fs::path p = artifact;
    p += ".provenance.json";
    std::ofstream os(p, std::ios::trunc);
    os << j.dump(2) << '\n';
}

struct TrainArgs {
    std::string config_path;
    std::string dataset_override;
    std::string run_dir_override;
    std::string resume;
    long steps_override = -1;
    long seed_override = -1;
};

void cmd_train(const TrainArgs& args) {
    RunConfig cfg = RunConfig::load(args.config_path);
    if (!args.dataset_override.empty()) cfg.dataset = args.dataset_override;
    if (!args.run_dir_override.empty()) cfg.run_dir = args.run_dir_override;
    if (args.steps_override >= 0) cfg.train.total_steps = args.steps_override;
    if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    cfg.normalize();
    if (cfg.dataset.empty()) throw DataError("train: config has no dataset path");

    const fs::path run_dir = cfg.run_dir;
    fs::create_directories(run_dir / "checkpoints");
    g_diagnostic_dir = run_dir.string();
    cfg.save(run_dir / "config.json");

    const Dataset data = load_dataset(cfg.dataset);

    std::ofstream metrics(run_dir / "metrics.jsonl",
                          args.resume.empty() ? std::ios::trunc : std::ios::app);
    if (!metrics) throw DataError("train: cannot open metrics log");

    MetricsSink metrics_sink = [&](const StepMetrics& m) {
        nlohmann::json j{{"step", m.step},         {"d_loss", m.d_loss},
                         {"g_loss", m.g_loss},     {"d_real_mean", m.d_real_mean},
                         {"d_fake_mean", m.d_fake_mean}, {"wall_time", m.wall_time}};
        metrics << j.dump() << '\n';
        metrics.flush();
        if (!metrics) throw DataError("train: metrics write failed");
        if (m.step % 50 == 0 || m.step == 1)
            std::printf("step %6ld  d_loss %.4f  g_loss %.4f  D(real) %.3f  D(fake) %.3f\n",
                        m.step, m.d_loss, m.g_loss, m.d_real_mean, m.d_fake_mean);
    };

    CheckpointSink<float> ckpt_sink = [&](ParamStore<float>& store, const std::string& rng_state) {
        char name[64];
        std::snprintf(name, sizeof(name), "step_%06ld.ckpt", store.step);
        save_checkpoint(run_dir / "checkpoints" / name, store, rng_state);
    };

    std::optional<ParamStore<float>> resume_store;
    std::string resume_rng;
    if (!args.resume.empty()) {
        resume_store.emplace();
        const CheckpointMeta meta = load_checkpoint(args.resume, *resume_store, cfg.train.lr_g,
                                                    cfg.train.lr_d, cfg.train.beta1,
                                                    cfg.train.beta2);
        resume_rng = meta.rng_state;
        std::printf("resuming from %s at step %ld\n", args.resume.c_str(), meta.step);
    }

    ParamStore<float> final_store = train_loop<float>(
        data, cfg.layout, cfg.gen_spec(), cfg.disc_spec(), cfg.train, ckpt_sink, metrics_sink,
        resume_store ? &*resume_store : nullptr, resume_rng);

    std::printf("training finished at step %ld\n", final_store.step);
}

struct ReportArgs {
    std::string checkpoint;
    std::string kind;
    std::string out_dir;
    std::string subspace = "motion";
    std::string adapter = "synthetic";
    std::size_t rows = 6, cols = 7;
    bool shared_motion = false;
    std::size_t bins = 8, samples = 200, probes = 200, identities = 8;
    double p = 0.01;
    long seed = 20240101;
};

void cmd_report(const ReportArgs& args) {
    static const std::vector<std::string> kinds{"sample", "traverse", "sweep", "consistency",
                                                "collisions"};
    if (std::find(kinds.begin(), kinds.end(), args.kind) == kinds.end())
        throw std::invalid_argument("report: unknown kind '" + args.kind + "'");
    if (args.adapter != "synthetic" && args.adapter != "none")
        throw std::invalid_argument("report: unknown adapter '" + args.adapter + "'");

    ParamStore<float> store;
    load_checkpoint<float>(args.checkpoint, store, 2e-4, 2e-4, 0.5, 0.999);

    fs::path out = args.out_dir.empty()
                       ? fs::path(args.checkpoint).parent_path().parent_path() / "reports" /
                             args.kind
                       : fs::path(args.out_dir);
    fs::create_directories(out);

    Rng rng(static_cast<std::uint64_t>(args.seed));
    const LatentLayout layout = store.layout;
    nlohmann::json prov{{"checkpoint", args.checkpoint},
                        {"seed", args.seed},
                        {"kind", args.kind},
                        {"step", store.step},
                        {"layout",
                         {{"d_content", layout.d_content},
                          {"d_motion", layout.d_motion},
                          {"set_size", layout.set_size}}}};

    const SyntheticEmbeddingAdapter synthetic_adapter;
    const EmbeddingAdapter* adapter =
        args.adapter == "synthetic" ? &synthetic_adapter : nullptr;

    if (args.kind == "sample") {
        const GridResult g = sample_montage(store, layout, args.rows, args.cols, rng);
        save_png_gray(out / "sample.png", g.image);
        prov["codes"] = g.provenance;
        write_provenance(out / "sample.png", prov);
        std::printf("wrote %s\n", (out / "sample.png").string().c_str());
    } else if (args.kind == "traverse") {
        GridSpec spec;
        spec.rows = args.rows;
        spec.cols = args.cols;
        spec.mode = args.shared_motion ? GridMode::SharedMotion : GridMode::PerRowMotion;
        const GridResult g = traversal_grid(store, layout, spec, rng);
        const char* name = args.shared_motion ? "traverse_shared.png" : "traverse.png";
        save_png_gray(out / name, g.image);
        prov["codes"] = g.provenance;
        write_provenance(out / name, prov);
        std::printf("wrote %s\n", (out / name).string().c_str());
    } else if (args.kind == "sweep") {
        if (!adapter) throw DataError("report sweep: needs an embedding adapter");
        const Subspace sub = args.subspace == "content" ? Subspace::Content : Subspace::Motion;
        if (args.subspace != "content" && args.subspace != "motion")
            throw std::invalid_argument("report: unknown subspace '" + args.subspace + "'");
        const SweepResult r = perturbation_sweep(store, layout, sub, *adapter, args.bins,
                                                 args.samples, args.p, rng);
        const std::string stem = "sweep_" + args.subspace;
        std::ofstream rec(out / (stem + ".jsonl"), std::ios::trunc);
        rec << sweep_records(r);
        save_png_gray(out / (stem + ".png"), render_sweep_boxplot(r));
        prov["result"] = to_json(r);
        write_provenance(out / (stem + ".jsonl"), prov);
        std::printf("wrote %s\n", (out / (stem + ".jsonl")).string().c_str());
    } else if (args.kind == "consistency") {
        if (adapter) {
            const MotionConsistencyResult r = motion_consistency(
                store, layout, synthetic_motion_probe, args.identities, rng);
            nlohmann::json j{{"score", r.score},
                             {"baseline_mean", r.baseline_mean},
                             {"baseline_std", r.baseline_std},
                             {"z_score", r.z_score},
                             {"identities", r.identities},
                             {"trajectory_len", r.trajectory_len}};
            std::ofstream os(out / "consistency.json", std::ios::trunc);
            os << j.dump(2) << '\n';
            write_provenance(out / "consistency.json", prov);
            std::printf("consistency score %.4f (baseline %.4f +- %.4f, z %.2f)\n", r.score,
                        r.baseline_mean, r.baseline_std, r.z_score);
        }
        // qualitative grid either way; the only output when no oracle exists
        GridSpec spec;
        spec.rows = args.rows;
        spec.cols = args.cols;
        spec.mode = GridMode::SharedMotion;
        const GridResult g = traversal_grid(store, layout, spec, rng);
        save_png_gray(out / "consistency_grid.png", g.image);
        nlohmann::json gp = prov;
        gp["codes"] = g.provenance;
        write_provenance(out / "consistency_grid.png", gp);
        std::printf("wrote %s\n", (out / "consistency_grid.png").string().c_str());
    } else {  // collisions
        if (!adapter) throw DataError("report collisions: needs an embedding adapter");
        const CollisionReport r =
            identity_collision_search(store, layout, *adapter, args.probes, rng);
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& c : r.collisions)
            pairs.push_back({{"a", c.probe_a},
                             {"b", c.probe_b},
                             {"latent_distance", c.latent_distance},
                             {"embed_distance", c.embed_distance}});
        nlohmann::json j{{"n_probes", r.n_probes},
                         {"n_embedded", r.n_embedded},
                         {"n_far_pairs", r.n_far_pairs},
                         {"median_latent_distance", r.median_latent_distance},
                         {"rate", r.rate},
                         {"collisions", pairs}};
        std::ofstream os(out / "collisions.json", std::ios::trunc);
        os << j.dump(2) << '\n';
        write_provenance(out / "collisions.json", prov);
        std::printf("collision rate %.4f (%zu/%zu far pairs)\n", r.rate, r.collisions.size(),
                    r.n_far_pairs);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"set-trained GAN: content/motion latent disentanglement pipeline"};
    app.require_subcommand(1);

    // init-config
    std::string init_out = "config.json";
    auto* init = app.add_subcommand("init-config", "write a config file with explicit defaults");
    init->add_option("--out", init_out, "output path");
    init->callback([&] {
        RunConfig cfg;
        cfg.normalize();
        cfg.save(init_out);
        std::printf("wrote %s\n", init_out.c_str());
    });

    // synth-gen
    std::string sg_out = "synth_corpus";
    std::size_t sg_ids = 10, sg_clips = 20, sg_frames = 20, sg_side = 32;
    long sg_seed = 7;
    auto* sg = app.add_subcommand("synth-gen", "render the synthetic sprite corpus");
    sg->add_option("--out", sg_out, "output dataset root");
    sg->add_option("--identities", sg_ids, "number of content identities");
    sg->add_option("--clips", sg_clips, "clips per identity");
    sg->add_option("--frames", sg_frames, "frames per clip");
    sg->add_option("--side", sg_side, "image side, pixels");
    sg->add_option("--seed", sg_seed, "corpus seed");
    sg->callback([&] {
        Rng rng(static_cast<std::uint64_t>(sg_seed));
        const auto manifests = gen_corpus(sg_out, sg_ids, sg_clips, sg_frames, sg_side, rng);
        std::printf("rendered %zu clips under %s\n", manifests.size(), sg_out.c_str());
    });

    // prep
    std::string prep_in, prep_out, prep_detector = "sprite", prep_detections;
    PrepOptions prep_opts;
    auto* prep = app.add_subcommand("prep", "detect, smooth, crop and pack raw clips");
    prep->add_option("--input", prep_in, "raw clips root")->required();
    prep->add_option("--output", prep_out, "packed dataset root")->required();
    prep->add_option("--margin", prep_opts.margin, "crop margin (negative = aggressive)");
    prep->add_option("--smoothness", prep_opts.smoothness, "spline knot spacing, frames");
    prep->add_option("--side", prep_opts.image_side, "output image side");
    prep->add_option("--detector", prep_detector, "detector adapter: sprite | file");
    prep->add_option("--detections-dir", prep_detections,
                     "directory of <clip_id>.jsonl detection files (detector=file)");
    prep->callback([&] {
        PrepReport total;
        if (prep_detector == "sprite") {
            SpriteDetector det;
            total = prep_dataset(prep_in, prep_out, det, prep_opts);
        } else if (prep_detector == "file") {
            if (prep_detections.empty())
                throw std::invalid_argument("prep: --detections-dir required for detector=file");
            // per-clip detection files replayed behind the adapter interface
            const auto raw = discover_raw_clips(prep_in);
            std::vector<PreparedClip> prepared;
            for (const auto& rc : raw) {
                try {
                    FileDetector det(fs::path(prep_detections) / (rc.clip_id + ".jsonl"));
                    std::vector<GrayImage> frames;
                    for (const auto& p : rc.frame_paths) frames.push_back(load_png_gray(p));
                    const BBoxTrack raw_track = track_clip(frames, det);
                    const BBoxTrack smoothed = smooth_track(raw_track, prep_opts.smoothness);
                    PreparedClip pc;
                    pc.clip_id = rc.clip_id;
                    pc.source = prep_in + "/" + rc.clip_id;
                    pc.frames = crop_frames(frames, smoothed, prep_opts.margin,
                                            prep_opts.image_side);
                    pc.image_side = prep_opts.image_side;
                    pc.identity = rc.identity;
                    pc.smoothing = smoothing_report(raw_track, smoothed);
                    prepared.push_back(std::move(pc));
                } catch (const DataError& e) {
                    total.rejects.emplace_back(rc.clip_id, e.what());
                }
            }
            if (!prepared.empty()) pack_dataset(prepared, prep_out);
            total.accepted = prepared.size();
        } else {
            throw std::invalid_argument("prep: unknown detector '" + prep_detector + "'");
        }

        nlohmann::json rejects = nlohmann::json::array();
        for (const auto& [id, reason] : total.rejects)
            rejects.push_back({{"clip_id", id}, {"reason", reason}});
        fs::create_directories(prep_out);
        std::ofstream rr(fs::path(prep_out) / "rejects.json", std::ios::trunc);
        rr << rejects.dump(2) << '\n';
        std::printf("accepted %zu clips, rejected %zu\n", total.accepted, total.rejects.size());
        if (total.accepted == 0) throw DataError("prep: no clips accepted");
    });

    // train
    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "run the adversarial set-training loop");
    train->add_option("--config", train_args.config_path, "run config file")->required();
    train->add_option("--dataset", train_args.dataset_override, "override dataset path");
    train->add_option("--run-dir", train_args.run_dir_override, "override run directory");
    train->add_option("--steps", train_args.steps_override, "override total steps");
    train->add_option("--seed", train_args.seed_override, "override seed");
    train->add_option("--resume", train_args.resume, "checkpoint to resume from");
    train->callback([&] { cmd_train(train_args); });

    // report
    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "evaluation artifacts from a checkpoint");
    report->add_option("--checkpoint", report_args.checkpoint, "checkpoint file")->required();
    report->add_option("--kind", report_args.kind,
                       "sample | traverse | sweep | consistency | collisions")
        ->required();
    report->add_option("--out", report_args.out_dir, "output directory");
    report->add_option("--subspace", report_args.subspace, "sweep subspace: motion | content");
    report->add_option("--adapter", report_args.adapter, "embedding adapter: synthetic | none");
    report->add_option("--rows", report_args.rows, "grid rows");
    report->add_option("--cols", report_args.cols, "grid cols");
    report->add_flag("--shared-motion", report_args.shared_motion,
                     "use one motion anchor for all rows");
    report->add_option("--bins", report_args.bins, "sweep bins");
    report->add_option("--samples", report_args.samples, "sweep samples per bin");
    report->add_option("--probes", report_args.probes, "collision probes");
    report->add_option("--identities", report_args.identities, "consistency identities");
    report->add_option("--p", report_args.p, "tail probability for the sweep range");
    report->add_option("--seed", report_args.seed, "report seed");
    report->callback([&] { cmd_report(report_args); });

    try {
        check_device_env();
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        if (!e.diagnostic().empty()) {
            const fs::path dump =
                (g_diagnostic_dir.empty() ? fs::path(".") : fs::path(g_diagnostic_dir)) /
                "diagnostic_dump.json";
            std::ofstream os(dump, std::ios::trunc);
            os << e.diagnostic() << '\n';
            std::fprintf(stderr, "state dump written to %s\n", dump.string().c_str());
        }
        return kExitNumeric;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitOk;
}
