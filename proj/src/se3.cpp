#include "gems/se3.hpp"

#include <cmath>

namespace gems {

namespace {
// below this the trig coefficient forms lose precision to cancellation;
// second-order Taylor keeps absolute error near machine epsilon
constexpr double kSmallAngle = 1e-4;
}

double SE3Pose::orthonormality_error() const {
    Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    double e = err.cwiseAbs().maxCoeff();
    return std::max(e, std::abs(rotation.determinant() - 1.0));
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
    const double theta = omega.norm();
    const Eigen::Matrix3d w = skew(omega);
    double a, b;  // R = I + a*w + b*w^2
    if (theta < kSmallAngle) {
        const double t2 = theta * theta;
        a = 1.0 - t2 / 6.0;
        b = 0.5 - t2 / 24.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return Eigen::Matrix3d::Identity() + a * w + b * (w * w);
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
    const double cos_theta = std::min(1.0, std::max(-1.0, (R.trace() - 1.0) * 0.5));
    const double theta = std::acos(cos_theta);
    if (theta >= M_PI - 1e-6) throw RotationNearPi();
    Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (theta < kSmallAngle) {
        // axis = 2 sin(theta) * unit; sin(theta)/theta ~ 1 - theta^2/6
        return 0.5 * (1.0 + theta * theta / 6.0) * axis;
    }
    return (theta / (2.0 * std::sin(theta))) * axis;
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& omega) {
    const double theta = omega.norm();
    const Eigen::Matrix3d w = skew(omega);
    double b, c;  // J = I + b*w + c*w^2
    if (theta < kSmallAngle) {
        const double t2 = theta * theta;
        b = 0.5 - t2 / 24.0;
        c = 1.0 / 6.0 - t2 / 120.0;
    } else {
        const double t2 = theta * theta;
        b = (1.0 - std::cos(theta)) / t2;
        c = (theta - std::sin(theta)) / (t2 * theta);
    }
    return Eigen::Matrix3d::Identity() + b * w + c * (w * w);
}

namespace {

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& omega) {
    const double theta = omega.norm();
    const Eigen::Matrix3d w = skew(omega);
    double c;  // Jinv = I - w/2 + c*w^2
    if (theta < kSmallAngle) {
        c = 1.0 / 12.0 + theta * theta / 720.0;
    } else {
        // cot(theta/2) form avoids the 1 - cos cancellation
        const double half = 0.5 * theta;
        c = (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
    }
    return Eigen::Matrix3d::Identity() - 0.5 * w + c * (w * w);
}

// Q block of the SE(3) left Jacobian (Barfoot, "State Estimation for
// Robotics", eq. 7.86).
Eigen::Matrix3d se3_jacobian_q(const Eigen::Vector3d& rho, const Eigen::Vector3d& omega) {
    const double theta = omega.norm();
    const Eigen::Matrix3d rx = skew(rho);
    const Eigen::Matrix3d wx = skew(omega);
    double c1, c2, c3;
    if (theta < 1e-3) {  // the theta^4 and theta^5 ratios cancel hard below this
        const double t2 = theta * theta;
        c1 = 1.0 / 6.0 - t2 / 120.0;
        c2 = -1.0 / 24.0 + t2 / 720.0;
        c3 = -1.0 / 15.0 + t2 / 504.0;
    } else {
        const double t2 = theta * theta;
        const double t3 = t2 * theta;
        const double t4 = t3 * theta;
        const double t5 = t4 * theta;
        const double s = std::sin(theta);
        const double co = std::cos(theta);
        c1 = (theta - s) / t3;
        c2 = -(1.0 - 0.5 * t2 - co) / t4;
        c3 = c2 + 3.0 * (theta - s - t3 / 6.0) / t5;
    }
    const Eigen::Matrix3d wrw = wx * rx * wx;
    Eigen::Matrix3d q = 0.5 * rx;
    q += c1 * (wx * rx + rx * wx + wrw);
    q += c2 * (wx * wx * rx + rx * wx * wx - 3.0 * wrw);
    q += 0.5 * c3 * (wrw * wx + wx * wrw);
    return q;
}

}  // namespace

SE3Pose se3_exp(const Twist& xi) {
    SE3Pose T;
    T.rotation = so3_exp(xi.omega);
    T.translation = so3_left_jacobian(xi.omega) * xi.rho;
    return T;
}

Twist se3_log(const SE3Pose& T) {
    Twist xi;
    xi.omega = so3_log(T.rotation);
    xi.rho = so3_left_jacobian_inverse(xi.omega) * T.translation;
    return xi;
}

Matrix6d se3_adjoint(const SE3Pose& T) {
    Matrix6d ad = Matrix6d::Zero();
    ad.block<3, 3>(0, 0) = T.rotation;
    ad.block<3, 3>(0, 3) = skew(T.translation) * T.rotation;
    ad.block<3, 3>(3, 3) = T.rotation;
    return ad;
}

Matrix6d se3_left_jacobian(const Twist& xi) {
    const Eigen::Matrix3d j = so3_left_jacobian(xi.omega);
    Matrix6d J = Matrix6d::Zero();
    J.block<3, 3>(0, 0) = j;
    J.block<3, 3>(0, 3) = se3_jacobian_q(xi.rho, xi.omega);
    J.block<3, 3>(3, 3) = j;
    return J;
}

Matrix6d se3_left_jacobian_inverse(const Twist& xi) {
    // 6x6 inverse of the block-triangular left Jacobian; done numerically,
    // the matrix is well conditioned for |omega| < pi.
    return se3_left_jacobian(xi).inverse();
}

}  // namespace gems
