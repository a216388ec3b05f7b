#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gems/se3.hpp"

namespace gems {

// One splat. Scales live in log domain and opacity in logit domain so that
// unconstrained gradient steps keep the covariance positive definite and the
// opacity inside (0, 1).
struct Gaussian3D {
    Eigen::Vector3d mu = Eigen::Vector3d::Zero();
    Eigen::Vector4d q = Eigen::Vector4d(1, 0, 0, 0);  // w, x, y, z; kept unit length
    Eigen::Vector3d log_scale = Eigen::Vector3d::Zero();
    double opacity_logit = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d(0.5, 0.5, 0.5);

    double opacity() const { return 1.0 / (1.0 + std::exp(-opacity_logit)); }
    Eigen::Vector3d scale() const { return log_scale.array().exp(); }
    Eigen::Matrix3d rotation() const;
    void normalize_quaternion();
};

// Sigma = R S S^T R^T, S = diag(exp(log_scale)).
Eigen::Matrix3d covariance3d(const Gaussian3D& g);

// Unnormalized density exp(-0.5 (x-mu)^T Sigma^{-1} (x-mu)) in (0, 1].
double evaluate_density(const Gaussian3D& g, const Eigen::Vector3d& x);

struct Camera {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    Camera() = default;
    Camera(double fx_, double fy_, double cx_, double cy_, int w, int h);
};

inline constexpr double kZNear = 0.01;         // Jacobian is singular at z = 0
inline constexpr double kCovDilation2D = 0.3;  // px^2 low-pass added to cov2d

// Camera-space projection of one Gaussian. Empty when the Gaussian lies
// behind the near plane (culled).
struct Projected2D {
    Eigen::Vector2d mean2d;
    Eigen::Matrix2d cov2d;  // includes the 0.3 px^2 dilation
    double depth;
};
std::optional<Projected2D> project(const Gaussian3D& g, const SE3Pose& pose, const Camera& cam);

class SceneModel {
public:
    SceneModel() = default;
    explicit SceneModel(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    void set_capacity(std::size_t capacity);
    std::size_t size() const { return gaussians_.size(); }

    void add(const Gaussian3D& g);
    Gaussian3D& operator[](std::size_t i) { return gaussians_[i]; }
    const Gaussian3D& operator[](std::size_t i) const { return gaussians_[i]; }
    std::vector<Gaussian3D>& gaussians() { return gaussians_; }
    const std::vector<Gaussian3D>& gaussians() const { return gaussians_; }

private:
    std::vector<Gaussian3D> gaussians_;
    std::size_t capacity_ = 0;  // 0 = unbounded
};

// Text format: header line, then one named-field record per Gaussian, 17
// significant digits. Binary variant: magic "GSPL", u32 version, u64 count,
// then 14 little-endian doubles per Gaussian.
void save_scene(const std::string& path, const SceneModel& scene, bool binary = false);
SceneModel load_scene(const std::string& path);

}  // namespace gems
