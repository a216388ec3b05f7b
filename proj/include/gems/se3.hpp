#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace gems {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Thrown by se3_log when the rotation angle is at or beyond pi - 1e-6, where
// the axis-angle extraction is ill-conditioned.
struct RotationNearPi : std::domain_error {
    RotationNearPi() : std::domain_error("se3_log: rotation angle too close to pi") {}
};

// 6-vector Lie algebra coordinates: translational part first, then rotational.
struct Twist {
    Eigen::Vector3d rho = Eigen::Vector3d::Zero();
    Eigen::Vector3d omega = Eigen::Vector3d::Zero();

    Twist() = default;
    Twist(const Eigen::Vector3d& rho_, const Eigen::Vector3d& omega_) : rho(rho_), omega(omega_) {}
    explicit Twist(const Vector6d& v) : rho(v.head<3>()), omega(v.tail<3>()) {}

    Vector6d vector() const {
        Vector6d v;
        v << rho, omega;
        return v;
    }
    Twist scaled(double s) const { return Twist(s * rho, s * omega); }
};

// Rigid transform x_out = R x + t. Used throughout as world-to-camera.
struct SE3Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    SE3Pose() = default;
    SE3Pose(const Eigen::Matrix3d& R, const Eigen::Vector3d& t) : rotation(R), translation(t) {}

    static SE3Pose identity() { return SE3Pose(); }

    SE3Pose inverse() const {
        return SE3Pose(rotation.transpose(), -(rotation.transpose() * translation));
    }
    SE3Pose operator*(const SE3Pose& rhs) const {
        return SE3Pose(rotation * rhs.rotation, rotation * rhs.translation + translation);
    }
    Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    // max |R^T R - I| and |det(R) - 1|; both should be ~1e-15 for healthy poses
    double orthonormality_error() const;
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);  // throws RotationNearPi

// SO(3) left Jacobian; equals the V matrix of the SE(3) exponential.
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& omega);

SE3Pose se3_exp(const Twist& xi);
Twist se3_log(const SE3Pose& T);  // throws RotationNearPi

// 6x6 adjoint of T: exp(Ad_T xi) = T exp(xi) T^{-1}.
Matrix6d se3_adjoint(const SE3Pose& T);

// 6x6 left Jacobian: exp(xi + dxi) ~= exp(Jl(xi) dxi) exp(xi).
Matrix6d se3_left_jacobian(const Twist& xi);

// Inverse of the left Jacobian: log(exp(dxi) exp(xi)) ~= xi + Jl^{-1}(xi) dxi.
Matrix6d se3_left_jacobian_inverse(const Twist& xi);

}  // namespace gems
