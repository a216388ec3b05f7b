#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "gems/rng.hpp"
#include "gems/trajectory.hpp"

using namespace gems;

namespace {

SE3Pose random_pose_near(const SE3Pose& base, Pcg32& rng, double trans, double rot) {
    const Twist xi(trans * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()),
                   rot * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()));
    return se3_exp(xi) * base;
}

// central finite difference of the left perturbation of pose(u) w.r.t. a left
// perturbation of control point j
Vector6d fd_pose_jacobian_column(const Trajectory& traj, double u, int j, int k, double h) {
    std::vector<SE3Pose> plus = traj.control_points();
    std::vector<SE3Pose> minus = traj.control_points();
    Vector6d dv = Vector6d::Zero();
    dv[k] = h;
    plus[j] = se3_exp(Twist(dv)) * plus[j];
    minus[j] = se3_exp(Twist(-dv)) * minus[j];
    const Trajectory tp(traj.kind(), plus, traj.exposure());
    const Trajectory tm(traj.kind(), minus, traj.exposure());
    const SE3Pose base = traj.pose_at_u(u);
    const Twist ep = se3_log(tp.pose_at_u(u) * base.inverse());
    const Twist em = se3_log(tm.pose_at_u(u) * base.inverse());
    return (ep.vector() - em.vector()) / (2.0 * h);
}

void check_jacobians(const Trajectory& traj, double u, double tol) {
    const std::vector<Matrix6d> jac = traj.pose_jacobians(u);
    for (int j = 0; j < traj.control_count(); ++j) {
        for (int k = 0; k < 6; ++k) {
            const Vector6d fd = fd_pose_jacobian_column(traj, u, j, k, 1e-6);
            const Vector6d an = jac[j].col(k);
            const double scale = std::max(1e-6, std::max(fd.cwiseAbs().maxCoeff(),
                                                         an.cwiseAbs().maxCoeff()));
            CHECK((an - fd).cwiseAbs().maxCoeff() / scale < tol);
        }
    }
}

}  // namespace

TEST_CASE("bernstein weights") {
    CHECK(bernstein(8, 0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(bernstein(1, 1, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bernstein(2, 1, 0.25) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK_THROWS_AS(bernstein(3, 4, 0.5), std::out_of_range);
    CHECK_THROWS_AS(bernstein(3, -1, 0.5), std::out_of_range);
}

TEST_CASE("bernstein partition of unity") {
    for (int degree : {1, 2, 5, 8}) {
        for (int step = 0; step <= 10; ++step) {
            const double u = 0.1 * step;
            double sum = 0.0;
            for (int j = 0; j <= degree; ++j) sum += bernstein(degree, j, u);
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("bezier constant curve and endpoints") {
    Pcg32 rng(3);
    const SE3Pose T = random_pose_near(SE3Pose::identity(), rng, 1.0, 0.6);
    const Trajectory constant = Trajectory::constant(TrajectoryKind::Bezier, T, 5, 1.0);
    for (double u : {0.0, 0.31, 0.5, 0.77, 1.0}) {
        const SE3Pose P = constant.pose_at_u(u);
        CHECK((P.rotation - T.rotation).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((P.translation - T.translation).cwiseAbs().maxCoeff() < 1e-12);
    }

    std::vector<SE3Pose> ctrl;
    SE3Pose base = random_pose_near(SE3Pose::identity(), rng, 1.0, 0.5);
    for (int j = 0; j < 4; ++j) ctrl.push_back(random_pose_near(base, rng, 0.2, 0.1));
    const Trajectory traj = Trajectory::bezier(ctrl, 1.0);
    const SE3Pose p0 = traj.pose_at_u(0.0);
    const SE3Pose p1 = traj.pose_at_u(1.0);
    CHECK((p0.rotation - ctrl.front().rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p0.translation - ctrl.front().translation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p1.rotation - ctrl.back().rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p1.translation - ctrl.back().translation).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bezier midpoint of commuting translations") {
    const SE3Pose a = SE3Pose::identity();
    const SE3Pose b(Eigen::Matrix3d::Identity(), Eigen::Vector3d(2, 0, 0));
    const Trajectory traj = Trajectory::bezier({a, b}, 1.0);
    const SE3Pose mid = traj.pose_at_u(0.5);
    CHECK(mid.translation.isApprox(Eigen::Vector3d(1, 0, 0), 1e-12));
}

TEST_CASE("trajectory construction guards") {
    const SE3Pose id = SE3Pose::identity();
    CHECK_THROWS_AS(Trajectory::bezier({id, id}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory::bezier({id}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Trajectory::cubic_spline({id, id, id}, 1.0), std::invalid_argument);
    const Trajectory traj = Trajectory::bezier({id, id}, 2.0);
    CHECK_THROWS_AS(traj.pose_at_time(2.5), std::out_of_range);
    CHECK_THROWS_AS(traj.pose_at_time(-0.1), std::out_of_range);
    // control points at angle pi have no log
    const Eigen::Matrix3d flip = so3_exp(Eigen::Vector3d(0, M_PI, 0));
    CHECK_THROWS_AS(Trajectory::bezier({id, SE3Pose(flip, Eigen::Vector3d::Zero())}, 1.0),
                    RotationNearPi);
}

TEST_CASE("linear interpolation") {
    Pcg32 rng(5);
    const SE3Pose start = random_pose_near(SE3Pose::identity(), rng, 1.0, 0.5);
    const SE3Pose end = random_pose_near(start, rng, 0.3, 0.2);
    const Trajectory traj = Trajectory::linear(start, end, 1.0);
    const SE3Pose p0 = traj.pose_at_u(0.0);
    CHECK((p0.rotation - start.rotation).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((p0.translation - start.translation).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::Matrix3d rotz90 = so3_exp(Eigen::Vector3d(0, 0, M_PI_2));
    const Trajectory geo =
        Trajectory::linear(SE3Pose::identity(), SE3Pose(rotz90, Eigen::Vector3d::Zero()), 1.0);
    const Eigen::Matrix3d rotz45 = so3_exp(Eigen::Vector3d(0, 0, M_PI / 4));
    CHECK((geo.pose_at_u(0.5).rotation - rotz45).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cubic spline constant curve") {
    Pcg32 rng(9);
    const SE3Pose T = random_pose_near(SE3Pose::identity(), rng, 1.0, 0.4);
    const Trajectory traj = Trajectory::constant(TrajectoryKind::CubicSpline, T, 5, 1.0);
    for (double u : {0.0, 0.4, 1.0}) {
        const SE3Pose P = traj.pose_at_u(u);
        CHECK((P.rotation - T.rotation).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((P.translation - T.translation).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("pose jacobians match finite differences") {
    Pcg32 rng(17);
    SE3Pose base = random_pose_near(SE3Pose::identity(), rng, 0.8, 0.5);

    std::vector<SE3Pose> bez;
    for (int j = 0; j < 4; ++j) bez.push_back(random_pose_near(base, rng, 0.15, 0.08));
    check_jacobians(Trajectory::bezier(bez, 1.0), 0.3, 1e-4);
    check_jacobians(Trajectory::bezier(bez, 1.0), 0.85, 1e-4);

    const SE3Pose end = random_pose_near(base, rng, 0.2, 0.1);
    check_jacobians(Trajectory::linear(base, end, 1.0), 0.4, 1e-4);

    std::vector<SE3Pose> spl;
    for (int j = 0; j < 5; ++j) spl.push_back(random_pose_near(base, rng, 0.12, 0.06));
    check_jacobians(Trajectory::cubic_spline(spl, 1.0), 0.27, 1e-4);
    check_jacobians(Trajectory::cubic_spline(spl, 1.0), 0.9, 1e-4);
}

TEST_CASE("tum serialization roundtrip") {
    Pcg32 rng(23);
    std::vector<TimedPose> poses;
    for (int i = 0; i < 8; ++i)
        poses.push_back({0.25 * i, random_pose_near(SE3Pose::identity(), rng, 1.2, 0.7)});

    const std::string path =
        (std::filesystem::temp_directory_path() / "gems_test_traj.tum").string();
    save_tum(path, poses);
    const std::vector<TimedPose> back = load_tum(path);
    REQUIRE(back.size() == poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
        CHECK(back[i].timestamp == doctest::Approx(poses[i].timestamp).epsilon(1e-15));
        CHECK((back[i].pose.rotation - poses[i].pose.rotation).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((back[i].pose.translation - poses[i].pose.translation).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(back[i].pose.orthonormality_error() < 1e-9);
    }
    std::filesystem::remove(path);
    CHECK_THROWS(parse_tum_line("1.0 0 0 0 nope"));
}
