#pragma once

#include <string>
#include <vector>

#include "gems/eventsim.hpp"
#include "gems/scene.hpp"
#include "gems/trajectory.hpp"

namespace gems {

// Procedural toy scene: seeded random Gaussians in a bounded box, a camera
// orbit with per-view random exposure motion, burst rendering, blur levels by
// frame averaging, and an event stream.
struct ToySceneSpec {
    uint64_t seed = 1;
    int n_gaussians = 200;
    double bound = 1.2;  // positions uniform in [-bound, bound]^3
    double scale_min = 0.05;
    double scale_max = 0.16;
    double opacity_min = 0.4;
    double opacity_max = 0.9;

    int n_views = 20;
    int n_test_views = 4;
    double orbit_radius = 4.0;
    double orbit_height = 1.0;
    double azimuth_arc_deg = 80.0;  // total sweep

    int image_size = 64;
    double focal = 68.0;

    int burst_count = 11;
    double exposure = 0.5;     // seconds
    double view_period = 1.0;  // seconds between view starts
    double motion_trans_sigma = 0.12;  // exposure translation scale, meters
    double motion_rot_sigma_deg = 1.2;

    std::vector<int> blur_levels = {3, 5, 7, 9, 11};
    bool events = true;
    double theta = 0.2;
};

SceneModel make_toy_scene(const ToySceneSpec& spec);
Camera make_toy_camera(const ToySceneSpec& spec);
// World-to-camera pose on the orbit, looking at the origin (y down, z forward).
SE3Pose orbit_pose(double azimuth_rad, double radius, double height);

// Writes sharp bursts, blur-level images, events, ground-truth trajectories,
// scene, and camera config under dir. Layout:
//   camera.cfg  scene_gt.txt  trajectory_gt.tum  motion_gt.txt
//   sharp/view_%03d_frame_%02d.{png,npy}  blur_<k>/view_%03d.{png,npy}
//   events.txt  test/view_%03d.{png,npy}  test_trajectory.tum
void generate_dataset(const ToySceneSpec& spec, const std::string& dir);

struct Dataset {
    std::string dir;
    Camera camera;
    int burst_count = 0;
    double exposure = 0.0;
    double view_period = 0.0;
    double theta = 0.0;
    bool has_events = false;
    std::vector<int> blur_levels;
    int n_views = 0;

    SceneModel gt_scene;
    std::vector<Trajectory> gt_motion;  // per view, full exposure window
    std::vector<ImageBuffer> test_images;
    std::vector<SE3Pose> test_poses;
    EventStream global_events;

    // fraction of the exposure covered by blur level k (mean of frames 0..k-1)
    double level_fraction(int level) const;
    // observed blurry image for one view at one blur level (lossless source)
    ImageBuffer load_blur(int view, int level) const;
    // events inside the level's exposure window, shifted to window-local time
    EventStream events_for_view(int view, int level) const;
    // ground-truth pose at window-local u for the level's exposure window
    SE3Pose gt_pose(int view, double u, int level) const;
};

Dataset load_dataset(const std::string& dir);

// Optimization scene seeded from a point cloud: per-point nearest-neighbor
// scales, gray color, low opacity.
SceneModel make_init_scene(const std::vector<Eigen::Vector3d>& points, std::size_t capacity);

}  // namespace gems
