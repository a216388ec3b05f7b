#pragma once

#include <string>
#include <vector>

#include "gems/se3.hpp"

namespace gems {

// Bernstein basis weight binom(M,j) (1-u)^(M-j) u^j. Throws std::out_of_range
// for j outside [0, M].
double bernstein(int degree, int index, double u);

enum class TrajectoryKind { Bezier, Linear, CubicSpline };

// Camera motion over one exposure window, parameterized by SE(3) control
// points. Evaluation is always through normalized time u = t / exposure.
//
//   Bezier       T(u) = prod_j exp(bernstein(M,j,u) * log(T_j)), j = 0..M left to right
//   Linear       T(u) = T_0 * exp(u * log(T_0^{-1} T_1))
//   CubicSpline  cumulative-basis cubic B-spline on relative twists (>= 4 points)
//
// Control points must have rotation angle < pi (log must exist); exposure > 0.
class Trajectory {
public:
    Trajectory(TrajectoryKind kind, std::vector<SE3Pose> control_points, double exposure);

    static Trajectory bezier(std::vector<SE3Pose> control_points, double exposure) {
        return Trajectory(TrajectoryKind::Bezier, std::move(control_points), exposure);
    }
    static Trajectory linear(const SE3Pose& start, const SE3Pose& end, double exposure) {
        return Trajectory(TrajectoryKind::Linear, {start, end}, exposure);
    }
    static Trajectory cubic_spline(std::vector<SE3Pose> control_points, double exposure) {
        return Trajectory(TrajectoryKind::CubicSpline, std::move(control_points), exposure);
    }
    // All control points at the same pose: the zero-motion prior used to seed
    // optimization from a single estimated pose per view.
    static Trajectory constant(TrajectoryKind kind, const SE3Pose& pose, int control_count,
                               double exposure);

    TrajectoryKind kind() const { return kind_; }
    double exposure() const { return exposure_; }
    int control_count() const { return static_cast<int>(control_points_.size()); }
    const std::vector<SE3Pose>& control_points() const { return control_points_; }

    SE3Pose pose_at_u(double u) const;
    SE3Pose pose_at_time(double t) const;  // throws std::out_of_range outside [0, exposure]

    // d(left-perturbation of pose(u)) / d(left-perturbation of control point j),
    // one 6x6 per control point: perturbing T_j <- exp(delta) T_j moves pose(u)
    // to exp(jac[j] * delta) pose(u) to first order.
    std::vector<Matrix6d> pose_jacobians(double u) const;

    // Applies T_j <- exp(delta_j) T_j to every control point.
    void retract(const std::vector<Twist>& deltas);

private:
    TrajectoryKind kind_;
    std::vector<SE3Pose> control_points_;
    double exposure_;
};

// TUM line format: "timestamp tx ty tz qx qy qz qw", 17 significant digits.
struct TimedPose {
    double timestamp = 0.0;
    SE3Pose pose;
};

std::string to_tum_line(const TimedPose& tp);
TimedPose parse_tum_line(const std::string& line);
void save_tum(const std::string& path, const std::vector<TimedPose>& poses);
std::vector<TimedPose> load_tum(const std::string& path);

}  // namespace gems
