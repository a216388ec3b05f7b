#pragma once

#include <string>
#include <vector>

#include "gems/scene.hpp"
#include "gems/se3.hpp"

namespace gems {

// Stand-in for a learned SfM front end. Reproduces the measured pose-error
// distribution of the real system per blur level so downstream robustness
// stays testable; it does not look at images. This is the artifact's central
// fidelity compromise and is called out in the README.
struct NoiseProfile {
    int blur_level = 0;  // 0 = custom
    double rmse = 0.0;   // meters
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;
    double max = 0.0;
    double rot_sigma_rad = 0.0;  // per axis

    // Measured translation-error statistics per blur level.
    static NoiseProfile for_blur_level(int level);  // level in {3,5,7,9,11}
    // Initialization from event-deblurred images: scaled from the measured
    // mean APE of the deblur-then-SfM pipeline.
    static NoiseProfile edi_initialized();
    static NoiseProfile zero();
};

// Adds zero-mean Gaussian translation noise, rescaled post hoc so that the
// realized sample RMSE equals profile.rmse, plus small per-axis rotation
// noise. Deterministic under seed.
std::vector<SE3Pose> perturb_poses(const std::vector<SE3Pose>& gt, const NoiseProfile& profile,
                                   uint64_t seed);

// Systematic (low-variance) resampling of Gaussian means weighted by opacity,
// plus isotropic jitter. With zero jitter, uniform opacity and count equal to
// the scene size this returns exactly the set of means.
std::vector<Eigen::Vector3d> sample_pointcloud(const SceneModel& scene, std::size_t count,
                                               double jitter_sigma, uint64_t seed);

// PLY-style text: "ply" header with vertex count, then "x y z" lines.
void save_pointcloud(const std::string& path, const std::vector<Eigen::Vector3d>& points);
std::vector<Eigen::Vector3d> load_pointcloud(const std::string& path);

}  // namespace gems
