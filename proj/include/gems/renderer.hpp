#pragma once

#include <utility>
#include <vector>

#include "gems/image.hpp"
#include "gems/scene.hpp"
#include "gems/trajectory.hpp"

namespace gems {

inline constexpr double kAlphaMax = 0.999;           // keeps prod(1-alpha) nonzero
inline constexpr double kTransmittanceStop = 1e-4;   // early compositing stop
inline constexpr double kSupportSigmas = 3.0;        // screen-space support radius

// Per-Gaussian parameter gradients plus one 6-vector twist gradient per
// virtual pose (left-perturbation convention: pose <- exp(eps) pose).
struct RenderGradients {
    std::vector<Eigen::Vector3d> d_mu;
    std::vector<Eigen::Vector4d> d_q;
    std::vector<Eigen::Vector3d> d_log_scale;
    std::vector<double> d_opacity_logit;
    std::vector<Eigen::Vector3d> d_color;
    std::vector<Vector6d> d_pose;

    void resize(std::size_t n_gaussians, std::size_t n_poses);
};

ImageBuffer render(const SceneModel& scene, const SE3Pose& pose, const Camera& cam);

// Discrete blur synthesis: samples n poses at u_i = i/(n-1) (u = 0 for n = 1),
// renders each and returns the pixel-wise mean together with the pose list.
std::pair<ImageBuffer, std::vector<SE3Pose>> render_blurred(const SceneModel& scene,
                                                            const Trajectory& traj,
                                                            const Camera& cam, int n_virtual);

// Backward pass of mean(render(pose_i)) given dL/dB. Chains through the 1/n
// average, alpha compositing, and projection, to every Gaussian parameter and
// every virtual pose twist.
RenderGradients render_backward(const SceneModel& scene, const std::vector<SE3Pose>& virtual_poses,
                                const Camera& cam, const ImageBuffer& dL_dB);

}  // namespace gems
