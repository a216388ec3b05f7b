#include "gems/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gems/image.hpp"
#include "gems/renderer.hpp"
#include "gems/rng.hpp"

namespace fs = std::filesystem;

namespace gems {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

std::string view_name(int v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d", v);
    return buf;
}

Eigen::Vector4d random_unit_quaternion(Pcg32& rng) {
    Eigen::Vector4d q(rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian());
    return q / q.norm();
}

double view_azimuth(const ToySceneSpec& spec, int v, bool test) {
    const double arc = spec.azimuth_arc_deg * M_PI / 180.0;
    if (test) {
        // interleave test positions between the training ones
        const double step = arc / std::max(1, spec.n_test_views);
        return -0.5 * arc + (v + 0.5) * step;
    }
    const double step = spec.n_views > 1 ? arc / (spec.n_views - 1) : 0.0;
    return -0.5 * arc + v * step;
}

}  // namespace

SE3Pose orbit_pose(double azimuth_rad, double radius, double height) {
    const Eigen::Vector3d p(radius * std::sin(azimuth_rad), -radius * std::cos(azimuth_rad), height);
    const Eigen::Vector3d forward = (-p).normalized();
    const Eigen::Vector3d up(0.0, 0.0, 1.0);
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);
    Eigen::Matrix3d R;  // world-to-camera rows: x right, y down, z forward
    R.row(0) = right;
    R.row(1) = down;
    R.row(2) = forward;
    return SE3Pose(R, -R * p);
}

SceneModel make_toy_scene(const ToySceneSpec& spec) {
    Pcg32 rng(spec.seed, 0x9e3779b97f4a7c15ULL);
    SceneModel scene(spec.n_gaussians);
    for (int i = 0; i < spec.n_gaussians; ++i) {
        Gaussian3D g;
        g.mu = Eigen::Vector3d(rng.uniform(-spec.bound, spec.bound),
                               rng.uniform(-spec.bound, spec.bound),
                               rng.uniform(-spec.bound, spec.bound));
        g.q = random_unit_quaternion(rng);
        const double base = std::exp(rng.uniform(std::log(spec.scale_min), std::log(spec.scale_max)));
        for (int k = 0; k < 3; ++k) g.log_scale[k] = std::log(base) + rng.uniform(-0.3, 0.3);
        g.opacity_logit = logit(rng.uniform(spec.opacity_min, spec.opacity_max));
        g.color = Eigen::Vector3d(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0));
        scene.add(g);
    }
    return scene;
}

Camera make_toy_camera(const ToySceneSpec& spec) {
    return Camera(spec.focal, spec.focal, spec.image_size / 2.0, spec.image_size / 2.0,
                  spec.image_size, spec.image_size);
}

namespace {

// Smooth random exposure motion: control points along a random twist arc with
// small per-point jitter, anchored at the view's orbit pose.
Trajectory make_gt_motion(const ToySceneSpec& spec, const SE3Pose& anchor, Pcg32& rng) {
    const int n_ctrl = 4;
    const double rot_sigma = spec.motion_rot_sigma_deg * M_PI / 180.0;
    Twist full(Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()) * spec.motion_trans_sigma,
               Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()) * rot_sigma);
    std::vector<SE3Pose> ctrl;
    ctrl.reserve(n_ctrl);
    for (int j = 0; j < n_ctrl; ++j) {
        const double a = static_cast<double>(j) / (n_ctrl - 1);
        Twist xi = full.scaled(a);
        if (j > 0) {
            xi.rho += 0.2 * spec.motion_trans_sigma *
                      Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
            xi.omega += 0.2 * rot_sigma * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
        }
        ctrl.push_back(se3_exp(xi) * anchor);
    }
    return Trajectory::bezier(std::move(ctrl), spec.exposure);
}

void save_image_pair(const fs::path& base, const ImageBuffer& img) {
    save_png(base.string() + ".png", img);
    save_npy(base.string() + ".npy", img);
}

}  // namespace

void generate_dataset(const ToySceneSpec& spec, const std::string& dir) {
    if (spec.n_views < 1 || spec.burst_count < 1)
        throw std::invalid_argument("generate_dataset: need at least one view and one frame");
    for (int level : spec.blur_levels)
        if (level < 1 || level > spec.burst_count)
            throw std::invalid_argument("generate_dataset: blur level outside burst");

    const fs::path root(dir);
    fs::create_directories(root / "sharp");
    fs::create_directories(root / "test");
    for (int level : spec.blur_levels)
        if (level > 1) fs::create_directories(root / ("blur_" + std::to_string(level)));

    const SceneModel scene = make_toy_scene(spec);
    const Camera cam = make_toy_camera(spec);
    save_scene((root / "scene_gt.txt").string(), scene);

    Pcg32 motion_rng(spec.seed, 0x2545f4914f6cdd1dULL);
    std::vector<TimedPose> gt_samples;
    std::vector<Event> all_events;
    std::ofstream motion_out(root / "motion_gt.txt");
    if (!motion_out) throw std::runtime_error("generate_dataset: cannot write motion_gt.txt");

    for (int v = 0; v < spec.n_views; ++v) {
        const SE3Pose anchor = orbit_pose(view_azimuth(spec, v, false), spec.orbit_radius,
                                          spec.orbit_height);
        const Trajectory motion = make_gt_motion(spec, anchor, motion_rng);

        motion_out << "view " << v << " " << motion.control_count() << " " << spec.exposure << "\n";
        for (const SE3Pose& T : motion.control_points())
            motion_out << to_tum_line({0.0, T}) << "\n";

        const std::vector<TimedFrame> burst = synthesize_burst(scene, motion, cam, spec.burst_count);
        const double t_view = v * spec.view_period;

        for (int m = 0; m < spec.burst_count; ++m) {
            char frame_name[64];
            std::snprintf(frame_name, sizeof(frame_name), "%s_frame_%02d", view_name(v).c_str(), m);
            save_image_pair(root / "sharp" / frame_name, burst[m].image);
            gt_samples.push_back({t_view + burst[m].timestamp, motion.pose_at_time(burst[m].timestamp)});
        }

        std::vector<ImageBuffer> frames;
        frames.reserve(burst.size());
        for (const auto& f : burst) frames.push_back(f.image);
        for (int level : spec.blur_levels) {
            if (level <= 1) continue;
            const ImageBuffer blur = average_frames(frames, 0, level);
            save_image_pair(root / ("blur_" + std::to_string(level)) / view_name(v), blur);
        }

        if (spec.events) {
            const EventStream stream = generate_events(burst, spec.theta);
            for (Event e : stream.events) {
                e.t += t_view;
                all_events.push_back(e);
            }
        }
    }

    save_tum((root / "trajectory_gt.tum").string(), gt_samples);

    if (spec.events) {
        EventStream global;
        global.threshold = spec.theta;
        global.t_start = 0.0;
        global.t_end = spec.n_views * spec.view_period;
        global.events = std::move(all_events);  // per-view generation is already time sorted
        save_events((root / "events.txt").string(), global);
    }

    std::vector<TimedPose> test_poses;
    for (int v = 0; v < spec.n_test_views; ++v) {
        const SE3Pose pose = orbit_pose(view_azimuth(spec, v, true), spec.orbit_radius,
                                        spec.orbit_height);
        save_image_pair(root / "test" / view_name(v), render(scene, pose, cam));
        test_poses.push_back({static_cast<double>(v), pose});
    }
    save_tum((root / "test_trajectory.tum").string(), test_poses);

    std::ofstream cfg(root / "camera.cfg");
    if (!cfg) throw std::runtime_error("generate_dataset: cannot write camera.cfg");
    cfg << "width = " << cam.width << "\n";
    cfg << "height = " << cam.height << "\n";
    cfg << "fx = " << cam.fx << "\n";
    cfg << "fy = " << cam.fy << "\n";
    cfg << "cx = " << cam.cx << "\n";
    cfg << "cy = " << cam.cy << "\n";
    cfg << "n_views = " << spec.n_views << "\n";
    cfg << "n_test_views = " << spec.n_test_views << "\n";
    cfg << "burst_count = " << spec.burst_count << "\n";
    cfg << "exposure = " << spec.exposure << "\n";
    cfg << "view_period = " << spec.view_period << "\n";
    cfg << "theta = " << spec.theta << "\n";
    cfg << "events = " << (spec.events ? 1 : 0) << "\n";
    cfg << "blur_levels =";
    for (int level : spec.blur_levels) cfg << " " << level;
    cfg << "\n";
}

double Dataset::level_fraction(int level) const {
    if (level < 1 || level > burst_count)
        throw std::invalid_argument("Dataset: blur level outside burst");
    if (burst_count == 1) return 1.0;
    return static_cast<double>(level - 1) / static_cast<double>(burst_count - 1);
}

ImageBuffer Dataset::load_blur(int view, int level) const {
    if (std::find(blur_levels.begin(), blur_levels.end(), level) == blur_levels.end())
        throw std::runtime_error("Dataset: blur level " + std::to_string(level) + " not generated");
    const fs::path base = fs::path(dir) / ("blur_" + std::to_string(level)) / view_name(view);
    const fs::path npy = base.string() + ".npy";
    if (fs::exists(npy)) return load_npy(npy.string());
    return load_png(base.string() + ".png");
}

EventStream Dataset::events_for_view(int view, int level) const {
    if (!has_events)
        throw std::runtime_error("Dataset: no events were generated for this dataset");
    const double t0 = view * view_period;
    const double window = level_fraction(level) * exposure;
    if (!(window > 0.0)) throw std::runtime_error("Dataset: blur level 1 has no exposure window");
    EventStream s = global_events.slice(t0, t0 + window);
    s.threshold = theta;
    return s;
}

SE3Pose Dataset::gt_pose(int view, double u, int level) const {
    return gt_motion[view].pose_at_u(u * level_fraction(level));
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream cfg(root / "camera.cfg");
    if (!cfg) throw std::runtime_error("load_dataset: missing camera.cfg in " + dir);

    Dataset ds;
    ds.dir = dir;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0, n_test = 0, events_flag = 0;
    std::string line;
    while (std::getline(cfg, line)) {
        std::istringstream ss(line);
        std::string key, eq;
        if (!(ss >> key >> eq) || eq != "=") continue;
        if (key == "width") ss >> width;
        else if (key == "height") ss >> height;
        else if (key == "fx") ss >> fx;
        else if (key == "fy") ss >> fy;
        else if (key == "cx") ss >> cx;
        else if (key == "cy") ss >> cy;
        else if (key == "n_views") ss >> ds.n_views;
        else if (key == "n_test_views") ss >> n_test;
        else if (key == "burst_count") ss >> ds.burst_count;
        else if (key == "exposure") ss >> ds.exposure;
        else if (key == "view_period") ss >> ds.view_period;
        else if (key == "theta") ss >> ds.theta;
        else if (key == "events") ss >> events_flag;
        else if (key == "blur_levels") {
            int level;
            while (ss >> level) ds.blur_levels.push_back(level);
        }
    }
    ds.camera = Camera(fx, fy, cx, cy, width, height);
    ds.has_events = events_flag != 0;
    ds.gt_scene = load_scene((root / "scene_gt.txt").string());

    std::ifstream motion(root / "motion_gt.txt");
    if (!motion) throw std::runtime_error("load_dataset: missing motion_gt.txt in " + dir);
    while (std::getline(motion, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        int view = 0, n_ctrl = 0;
        double exposure = 0;
        if (!(ss >> tag >> view >> n_ctrl >> exposure) || tag != "view")
            throw std::runtime_error("load_dataset: malformed motion_gt.txt line: " + line);
        std::vector<SE3Pose> ctrl;
        ctrl.reserve(n_ctrl);
        for (int j = 0; j < n_ctrl; ++j) {
            if (!std::getline(motion, line))
                throw std::runtime_error("load_dataset: truncated motion_gt.txt");
            ctrl.push_back(parse_tum_line(line).pose);
        }
        ds.gt_motion.push_back(Trajectory::bezier(std::move(ctrl), exposure));
    }
    if (static_cast<int>(ds.gt_motion.size()) != ds.n_views)
        throw std::runtime_error("load_dataset: motion_gt.txt view count mismatch");

    for (int v = 0; v < n_test; ++v) {
        const fs::path base = root / "test" / view_name(v);
        const fs::path npy = base.string() + ".npy";
        ds.test_images.push_back(fs::exists(npy) ? load_npy(npy.string())
                                                 : load_png(base.string() + ".png"));
    }
    for (const TimedPose& tp : load_tum((root / "test_trajectory.tum").string()))
        ds.test_poses.push_back(tp.pose);

    if (ds.has_events) {
        ds.global_events = load_events((root / "events.txt").string(), ds.theta, 0.0,
                                       ds.n_views * ds.view_period);
    }
    return ds;
}

SceneModel make_init_scene(const std::vector<Eigen::Vector3d>& points, std::size_t capacity) {
    if (points.empty()) throw std::invalid_argument("make_init_scene: empty point cloud");
    SceneModel scene(std::max(capacity, points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        double nn = std::numeric_limits<double>::max();
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            nn = std::min(nn, (points[i] - points[j]).norm());
        }
        if (!std::isfinite(nn)) nn = 0.1;
        Gaussian3D g;
        g.mu = points[i];
        g.q = Eigen::Vector4d(1, 0, 0, 0);
        g.log_scale.setConstant(std::log(std::clamp(nn, 0.02, 0.4)));
        g.opacity_logit = logit(0.25);
        g.color = Eigen::Vector3d(0.5, 0.5, 0.5);
        scene.add(g);
    }
    return scene;
}

}  // namespace gems
