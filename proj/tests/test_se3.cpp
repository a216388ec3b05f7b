#include <doctest.h>

#include <cmath>

#include "gems/rng.hpp"
#include "gems/se3.hpp"

using namespace gems;

namespace {

Twist random_twist(Pcg32& rng, double trans_scale, double rot_scale) {
    return Twist(trans_scale * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()),
                 rot_scale * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()));
}

}  // namespace

TEST_CASE("se3_exp basic cases") {
    const SE3Pose id = se3_exp(Twist());
    CHECK(id.rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    CHECK(id.translation.norm() == doctest::Approx(0.0));

    const SE3Pose trans = se3_exp(Twist(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d::Zero()));
    CHECK(trans.rotation.isApprox(Eigen::Matrix3d::Identity(), 1e-15));
    CHECK(trans.translation.isApprox(Eigen::Vector3d(1, 0, 0), 1e-15));

    const SE3Pose rot = se3_exp(Twist(Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, M_PI_2)));
    Eigen::Matrix3d expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((rot.rotation - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rot.translation.norm() < 1e-15);
}

TEST_CASE("se3_log basic cases") {
    const Twist zero = se3_log(SE3Pose::identity());
    CHECK(zero.vector().cwiseAbs().maxCoeff() < 1e-15);

    const Twist t = se3_log(SE3Pose(Eigen::Matrix3d::Identity(), Eigen::Vector3d(0, 2, 0)));
    CHECK(t.rho.isApprox(Eigen::Vector3d(0, 2, 0), 1e-15));
    CHECK(t.omega.norm() < 1e-15);

    const Twist xi(Eigen::Vector3d(0.3, -0.1, 0.2), Eigen::Vector3d(0.1, 0.2, -0.3));
    const Twist back = se3_log(se3_exp(xi));
    CHECK((back.vector() - xi.vector()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("se3_log rejects rotations at pi") {
    const Eigen::Matrix3d R = so3_exp(Eigen::Vector3d(M_PI, 0, 0));
    CHECK_THROWS_AS(se3_log(SE3Pose(R, Eigen::Vector3d::Zero())), RotationNearPi);
}

TEST_CASE("exp/log roundtrip over 1000 random twists") {
    Pcg32 rng(42);
    double worst = 0.0;
    double worst_ortho = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Twist xi = random_twist(rng, 2.0, 1.0);
        if (xi.omega.norm() > 3.0) xi.omega *= 3.0 / xi.omega.norm();
        const SE3Pose T = se3_exp(xi);
        worst_ortho = std::max(worst_ortho, T.orthonormality_error());
        const Twist back = se3_log(T);
        worst = std::max(worst, (back.vector() - xi.vector()).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-9);
    CHECK(worst_ortho < 1e-9);
}

TEST_CASE("adjoint identity T exp(xi) T^-1 = exp(Ad_T xi)") {
    Pcg32 rng(7);
    for (int i = 0; i < 20; ++i) {
        const SE3Pose T = se3_exp(random_twist(rng, 1.5, 0.8));
        const Twist xi = random_twist(rng, 0.5, 0.4);
        const SE3Pose lhs = T * se3_exp(xi) * T.inverse();
        const SE3Pose rhs = se3_exp(Twist(se3_adjoint(T) * xi.vector()));
        CHECK((lhs.rotation - rhs.rotation).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((lhs.translation - rhs.translation).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("left jacobian matches the exp perturbation identity") {
    // exp(xi + h e_k) ~= exp(h Jl(xi) e_k) exp(xi)
    Pcg32 rng(11);
    const double h = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        const Twist xi = random_twist(rng, 1.0, 0.7);
        const Matrix6d Jl = se3_left_jacobian(xi);
        for (int k = 0; k < 6; ++k) {
            Vector6d dv = Vector6d::Zero();
            dv[k] = h;
            const SE3Pose lhs = se3_exp(Twist(xi.vector() + dv));
            const SE3Pose rhs = se3_exp(Twist(Jl * dv)) * se3_exp(xi);
            CHECK((lhs.rotation - rhs.rotation).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((lhs.translation - rhs.translation).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("left jacobian inverse is consistent") {
    Pcg32 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Twist xi = random_twist(rng, 1.0, 0.7);
        const Matrix6d prod = se3_left_jacobian(xi) * se3_left_jacobian_inverse(xi);
        CHECK((prod - Matrix6d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("small-angle branches agree with the closed form") {
    for (double eps : {1e-9, 1e-7}) {
        const Twist xi(Eigen::Vector3d(0.2, -0.1, 0.3), Eigen::Vector3d(eps, -eps, 0.5 * eps));
        const SE3Pose T = se3_exp(xi);
        CHECK(T.orthonormality_error() < 1e-12);
        const Twist back = se3_log(T);
        CHECK((back.vector() - xi.vector()).cwiseAbs().maxCoeff() < 1e-12);
    }
}
