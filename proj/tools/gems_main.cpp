// gems: dataset synthesis, pose initialization, blur-aware training, EDI
// deblurring, rendering, and evaluation for the Gaussian-splatting motion
// deblurring pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gems/dataset.hpp"
#include "gems/edi.hpp"
#include "gems/metrics.hpp"
#include "gems/optimizer.hpp"
#include "gems/parallel.hpp"
#include "gems/renderer.hpp"
#include "gems/sfm_init.hpp"

namespace fs = std::filesystem;
using namespace gems;

namespace {

struct GlobalOpts {
    uint64_t seed = 1;
    int threads = 0;
    std::string config_path;
};

std::vector<int> parse_level_list(const std::string& csv) {
    std::vector<int> levels;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) levels.push_back(std::stoi(tok));
    }
    return levels;
}

void log_kv(const std::string& line) { std::printf("%s\n", line.c_str()); }

struct InitResult {
    std::vector<SE3Pose> poses;          // one per view, mid-exposure estimate
    std::vector<Eigen::Vector3d> cloud;
    NoiseProfile profile;
};

// The SfM stand-in: perturbs ground-truth mid-exposure poses per the measured
// error profile of the blur level (or of the deblur-then-SfM pipeline when
// EDI initialization is used) and resamples the scene as a noisy point cloud.
InitResult run_sfm_init(const Dataset& ds, int level, bool edi_based, std::size_t cloud_points,
                        double cloud_jitter, uint64_t seed) {
    InitResult out;
    out.profile = edi_based ? NoiseProfile::edi_initialized() : NoiseProfile::for_blur_level(level);
    std::vector<SE3Pose> gt_mid;
    gt_mid.reserve(ds.n_views);
    for (int v = 0; v < ds.n_views; ++v) gt_mid.push_back(ds.gt_pose(v, 0.5, level));
    out.poses = perturb_poses(gt_mid, out.profile, seed);
    out.cloud = sample_pointcloud(ds.gt_scene, cloud_points, cloud_jitter, seed + 1);
    return out;
}

void write_init_files(const std::string& out_dir, const InitResult& init) {
    fs::create_directories(out_dir);
    std::vector<TimedPose> tum;
    for (std::size_t v = 0; v < init.poses.size(); ++v)
        tum.push_back({static_cast<double>(v), init.poses[v]});
    save_tum((fs::path(out_dir) / "init_poses.tum").string(), tum);
    save_pointcloud((fs::path(out_dir) / "pointcloud.ply").string(), init.cloud);
}

int cmd_generate(const GlobalOpts& g, const ToySceneSpec& spec_in, const std::string& out_dir) {
    ToySceneSpec spec = spec_in;
    spec.seed = g.seed;
    generate_dataset(spec, out_dir);
    log_kv("stage=generate out=" + out_dir + " views=" + std::to_string(spec.n_views));
    return 0;
}

int cmd_init_poses(const GlobalOpts& g, const std::string& dataset_dir, int level, bool use_edi,
                   std::size_t cloud_points, double cloud_jitter, const std::string& out_dir) {
    const Dataset ds = load_dataset(dataset_dir);
    if (use_edi) {
        if (!ds.has_events)
            throw std::runtime_error("init-poses --edi: dataset has no events; regenerate with events");
        log_kv("stage=edi_init views=" + std::to_string(ds.n_views));
        EdiConfig cfg;
        cfg.threshold = ds.theta;
        std::vector<ImageBuffer> blurred;
        std::vector<EventStream> streams;
        for (int v = 0; v < ds.n_views; ++v) {
            blurred.push_back(ds.load_blur(v, level));
            streams.push_back(ds.events_for_view(v, level));
        }
        const auto deblurred = edi_init_views(blurred, streams, cfg);
        fs::create_directories(fs::path(out_dir) / "edi");
        for (std::size_t v = 0; v < deblurred.size(); ++v) {
            char name[64];
            std::snprintf(name, sizeof(name), "edi_%03zu.png", v);
            save_png((fs::path(out_dir) / "edi" / name).string(), deblurred[v].image);
        }
    }
    const InitResult init = run_sfm_init(ds, level, use_edi, cloud_points, cloud_jitter, g.seed);
    write_init_files(out_dir, init);
    log_kv("stage=sfm_init profile_rmse=" + std::to_string(init.profile.rmse));
    return 0;
}

struct TrainSetup {
    std::vector<ObservedView> views;
    TrainState state;
    int level;
};

TrainSetup prepare_training(const Dataset& ds, const std::string& mode, int level,
                            OptimConfig config, std::size_t cloud_points, double cloud_jitter,
                            uint64_t seed, const std::string& out_dir) {
    const bool edi_based = mode == "gems-e";
    if (edi_based && !ds.has_events)
        throw std::runtime_error("train: mode gems-e needs events; this dataset has none");

    TrainSetup setup;
    setup.level = level;

    // supervision is always the observed blurry images
    for (int v = 0; v < ds.n_views; ++v) {
        char name[32];
        std::snprintf(name, sizeof(name), "view_%03d", v);
        setup.views.push_back({SupervisionTarget(ds.load_blur(v, level)), name});
    }

    if (edi_based) {
        log_kv("stage=edi_init views=" + std::to_string(ds.n_views));
        EdiConfig ecfg;
        ecfg.threshold = ds.theta;
        std::vector<ImageBuffer> blurred;
        std::vector<EventStream> streams;
        for (int v = 0; v < ds.n_views; ++v) {
            blurred.push_back(setup.views[v].target.image);
            streams.push_back(ds.events_for_view(v, level));
        }
        const auto deblurred = edi_init_views(blurred, streams, ecfg);
        if (!out_dir.empty()) {
            fs::create_directories(fs::path(out_dir) / "edi");
            for (std::size_t v = 0; v < deblurred.size(); ++v) {
                char name[64];
                std::snprintf(name, sizeof(name), "edi_%03zu.png", v);
                save_png((fs::path(out_dir) / "edi" / name).string(), deblurred[v].image);
            }
        }
    }

    log_kv("stage=sfm_init mode=" + mode);
    const InitResult init = run_sfm_init(ds, level, edi_based, cloud_points, cloud_jitter, seed);
    if (!out_dir.empty()) write_init_files(out_dir, init);

    if (mode == "no-trajopt") config.lr_pose = 0.0;
    if (mode == "no-mcmc") {
        config.relocate_every = 0;
        config.sgld_noise = 0.0;
    }
    config.seed = seed;

    SceneModel scene = make_init_scene(init.cloud, config.n_max);
    const double window = ds.level_fraction(level) * ds.exposure;
    std::vector<Trajectory> trajectories;
    for (int v = 0; v < ds.n_views; ++v)
        trajectories.push_back(
            Trajectory::constant(config.trajectory, init.poses[v], config.control_points, window));

    setup.state = init_train_state(std::move(scene), std::move(trajectories), config);
    return setup;
}

double mid_pose_ape(const TrainState& state, const Dataset& ds, int level, bool aligned) {
    std::vector<SE3Pose> est, gt;
    for (std::size_t v = 0; v < state.trajectories.size(); ++v) {
        est.push_back(state.trajectories[v].pose_at_u(0.5));
        gt.push_back(ds.gt_pose(static_cast<int>(v), 0.5, level));
    }
    return ape(est, gt, aligned).rmse;
}

int cmd_train(const GlobalOpts& g, const std::string& dataset_dir, const std::string& mode,
              int level, OptimConfig config, std::size_t cloud_points, double cloud_jitter,
              const std::string& out_dir) {
    const Dataset ds = load_dataset(dataset_dir);
    if (level == 0) level = ds.blur_levels.empty() ? ds.burst_count : ds.blur_levels.back();
    fs::create_directories(out_dir);

    TrainSetup setup = prepare_training(ds, mode, level, config, cloud_points, cloud_jitter, g.seed,
                                        out_dir);
    log_kv("stage=train mode=" + mode + " level=" + std::to_string(level) +
           " iterations=" + std::to_string(setup.state.config.iterations));

    RunHooks hooks;
    hooks.log_every = 100;
    hooks.on_log = [&](const TrainLogRow& row) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "iter=%llu loss=%.6g psnr_blur=%.4f ape=%.6f gaussians=%zu",
                      static_cast<unsigned long long>(row.iteration), row.loss, row.blur_psnr,
                      mid_pose_ape(setup.state, ds, level, false), row.gaussians);
        log_kv(buf);
    };
    run_training(setup.state, setup.views, ds.camera, hooks);

    checkpoint_save((fs::path(out_dir) / "checkpoint.gmsk").string(), setup.state);

    fs::create_directories(fs::path(out_dir) / "test_renders");
    for (std::size_t v = 0; v < ds.test_poses.size(); ++v) {
        char name[64];
        std::snprintf(name, sizeof(name), "view_%03zu.png", v);
        save_png((fs::path(out_dir) / "test_renders" / name).string(),
                 render(setup.state.scene, ds.test_poses[v], ds.camera));
    }
    log_kv("stage=done checkpoint=" + (fs::path(out_dir) / "checkpoint.gmsk").string());
    return 0;
}

int cmd_render(const std::string& checkpoint_path, const std::string& poses_path,
               const std::string& out_dir) {
    const TrainState state = checkpoint_load(checkpoint_path);
    const std::vector<TimedPose> poses = load_tum(poses_path);
    fs::create_directories(out_dir);
    // camera intrinsics travel with the dataset, not the checkpoint; look for
    // a camera.cfg next to the pose file, else next to the checkpoint
    fs::path cam_path = fs::path(poses_path).parent_path() / "camera.cfg";
    if (!fs::exists(cam_path)) cam_path = fs::path(checkpoint_path).parent_path() / "camera.cfg";
    if (!fs::exists(cam_path))
        throw std::runtime_error("render: no camera.cfg found near poses or checkpoint");
    const Dataset ds = load_dataset(cam_path.parent_path().string());

    for (std::size_t i = 0; i < poses.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "render_%03zu.png", i);
        save_png((fs::path(out_dir) / name).string(), render(state.scene, poses[i].pose, ds.camera));
    }
    log_kv("stage=render count=" + std::to_string(poses.size()));
    return 0;
}

int cmd_edi(const std::string& blur_path, const std::string& events_path, double theta, int bins,
            double latent, double t_start, double t_end, const std::string& out_path) {
    const ImageBuffer blur = load_png(blur_path);
    EventStream loaded = load_events(events_path, theta, 0.0, 0.0);
    if (t_end <= t_start) {
        t_end = loaded.events.empty() ? 1.0 : loaded.events.back().t;
        if (t_end <= t_start) t_end = t_start + 1.0;
    }
    // keep only the exposure window; the file may span many exposures
    EventStream stream = loaded.slice(t_start, t_end);
    stream.threshold = theta;
    EdiConfig cfg;
    cfg.threshold = theta;
    cfg.bins = bins;
    cfg.latent_time = latent;
    save_png(out_path, edi_deblur(blur, stream, cfg));
    log_kv("stage=edi out=" + out_path);
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_dir, int level,
             const std::string& out_base) {
    const TrainState state = checkpoint_load(checkpoint_path);
    const Dataset ds = load_dataset(dataset_dir);
    if (level == 0) level = ds.blur_levels.empty() ? ds.burst_count : ds.blur_levels.back();

    EvalReport report;
    for (std::size_t v = 0; v < ds.test_poses.size(); ++v) {
        const ImageBuffer img = render(state.scene, ds.test_poses[v], ds.camera);
        char name[32];
        std::snprintf(name, sizeof(name), "test_%03zu", v);
        report.add_view(name, psnr(img, ds.test_images[v]), ssim(img, ds.test_images[v]));
    }
    report.finalize();

    if (state.trajectories.size() == static_cast<std::size_t>(ds.n_views)) {
        std::vector<SE3Pose> est, gt;
        for (int v = 0; v < ds.n_views; ++v) {
            est.push_back(state.trajectories[v].pose_at_u(0.5));
            gt.push_back(ds.gt_pose(v, 0.5, level));
        }
        report.has_ape = true;
        report.ape_raw = ape(est, gt, false);
        report.ape_aligned = ape(est, gt, true);
    }
    report.save(out_base);
    std::printf("%s", report.to_text().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian splatting under motion blur: synthesis, training, evaluation"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "global RNG seed");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
    app.add_option("--config", g.config_path, "optimizer config file (key = value)");

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a toy dataset");
    ToySceneSpec spec;
    std::string gen_out = "dataset";
    std::string gen_levels = "3,5,7,9,11";
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--gaussians", spec.n_gaussians, "gaussian count");
    gen->add_option("--views", spec.n_views, "training view count");
    gen->add_option("--test-views", spec.n_test_views, "test view count");
    gen->add_option("--image-size", spec.image_size, "square image size");
    gen->add_option("--focal", spec.focal, "focal length in pixels");
    gen->add_option("--bound", spec.bound, "scene half extent");
    gen->add_option("--burst", spec.burst_count, "frames per burst");
    gen->add_option("--exposure", spec.exposure, "exposure seconds");
    gen->add_option("--motion-trans", spec.motion_trans_sigma, "exposure translation sigma (m)");
    gen->add_option("--motion-rot", spec.motion_rot_sigma_deg, "exposure rotation sigma (deg)");
    gen->add_option("--blur-levels", gen_levels, "comma list of frame-averaging levels");
    gen->add_option("--theta", spec.theta, "event threshold (log units)");
    bool no_events = false;
    gen->add_flag("--no-events", no_events, "skip event generation");

    // init-poses
    auto* initp = app.add_subcommand("init-poses", "run the SfM stand-in");
    std::string ip_dataset, ip_out = "init";
    int ip_level = 0;
    bool ip_edi = false;
    std::size_t ip_cloud = 300;
    double ip_jitter = 0.05;
    initp->add_option("--dataset", ip_dataset)->required();
    initp->add_option("--blur-level", ip_level, "blur level (default: highest generated)");
    initp->add_flag("--edi", ip_edi, "initialize from EDI-deblurred images");
    initp->add_option("--cloud-points", ip_cloud);
    initp->add_option("--cloud-jitter", ip_jitter);
    initp->add_option("--out", ip_out);

    // train
    auto* tr = app.add_subcommand("train", "joint trajectory + gaussian optimization");
    std::string tr_dataset, tr_mode = "gems", tr_out = "run";
    int tr_level = 0;
    int tr_iterations = -1;
    std::size_t tr_cloud = 300;
    double tr_jitter = 0.05;
    std::string tr_trajectory;
    double tr_lr_pose = -1.0;
    int tr_n_virtual = -1;
    tr->add_option("--dataset", tr_dataset)->required();
    tr->add_option("--mode", tr_mode)->check(CLI::IsMember({"gems", "gems-e", "no-mcmc", "no-trajopt"}));
    tr->add_option("--blur-level", tr_level, "blur level (default: highest generated)");
    tr->add_option("--iterations", tr_iterations);
    tr->add_option("--trajectory", tr_trajectory)->check(CLI::IsMember({"bezier", "linear", "spline"}));
    tr->add_option("--lr-pose", tr_lr_pose);
    tr->add_option("--n-virtual", tr_n_virtual);
    tr->add_option("--cloud-points", tr_cloud);
    tr->add_option("--cloud-jitter", tr_jitter);
    tr->add_option("--out", tr_out);

    // render
    auto* rd = app.add_subcommand("render", "render poses from a checkpoint");
    std::string rd_ckpt, rd_poses, rd_out = "renders";
    rd->add_option("--checkpoint", rd_ckpt)->required();
    rd->add_option("--poses", rd_poses, "TUM pose file")->required();
    rd->add_option("--out", rd_out);

    // edi
    auto* ed = app.add_subcommand("edi", "event-based double integral deblurring");
    std::string ed_blur, ed_events, ed_out = "edi.png";
    double ed_theta = 0.2, ed_latent = 0.5, ed_t0 = 0.0, ed_t1 = 0.0;
    int ed_bins = 13;
    ed->add_option("--blur", ed_blur)->required();
    ed->add_option("--events", ed_events)->required();
    ed->add_option("--theta", ed_theta);
    ed->add_option("--bins", ed_bins);
    ed->add_option("--latent", ed_latent);
    ed->add_option("--t-start", ed_t0);
    ed->add_option("--t-end", ed_t1);
    ed->add_option("--out", ed_out);

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint against a dataset");
    std::string ev_ckpt, ev_dataset, ev_out = "report";
    int ev_level = 0;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--dataset", ev_dataset)->required();
    ev->add_option("--blur-level", ev_level);
    ev->add_option("--out", ev_out, "report base name (.txt/.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        set_thread_count(g.threads);
        if (gen->parsed()) {
            spec.blur_levels = parse_level_list(gen_levels);
            spec.events = !no_events;
            return cmd_generate(g, spec, gen_out);
        }
        if (initp->parsed()) {
            const Dataset ds = load_dataset(ip_dataset);
            if (ip_level == 0)
                ip_level = ds.blur_levels.empty() ? ds.burst_count : ds.blur_levels.back();
            return cmd_init_poses(g, ip_dataset, ip_level, ip_edi, ip_cloud, ip_jitter, ip_out);
        }
        if (tr->parsed()) {
            OptimConfig cfg;
            if (!g.config_path.empty()) cfg = load_config(g.config_path);
            if (tr_iterations >= 0) cfg.iterations = tr_iterations;
            if (!tr_trajectory.empty())
                apply_config_line(cfg, "trajectory", tr_trajectory);
            if (tr_lr_pose >= 0.0) cfg.lr_pose = tr_lr_pose;
            if (tr_n_virtual > 0) cfg.n_virtual = tr_n_virtual;
            cfg.validate();
            return cmd_train(g, tr_dataset, tr_mode, tr_level, cfg, tr_cloud, tr_jitter, tr_out);
        }
        if (rd->parsed()) return cmd_render(rd_ckpt, rd_poses, rd_out);
        if (ed->parsed()) return cmd_edi(ed_blur, ed_events, ed_theta, ed_bins, ed_latent, ed_t0,
                                         ed_t1, ed_out);
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_dataset, ev_level, ev_out);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
