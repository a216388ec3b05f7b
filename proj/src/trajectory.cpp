#include "gems/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gems {

double bernstein(int degree, int index, double u) {
    if (degree < 0 || index < 0 || index > degree)
        throw std::out_of_range("bernstein: index out of range");
    double binom = 1.0;
    for (int k = 1; k <= index; ++k)
        binom *= static_cast<double>(degree - index + k) / static_cast<double>(k);
    return binom * std::pow(1.0 - u, degree - index) * std::pow(u, index);
}

namespace {

// Cumulative cubic B-spline basis (segment-local w in [0,1]).
void cumulative_cubic_basis(double w, double lambda[3]) {
    const double w2 = w * w;
    const double w3 = w2 * w;
    lambda[0] = (5.0 + 3.0 * w - 3.0 * w2 + w3) / 6.0;
    lambda[1] = (1.0 + 3.0 * w + 3.0 * w2 - 2.0 * w3) / 6.0;
    lambda[2] = w3 / 6.0;
}

}  // namespace

Trajectory::Trajectory(TrajectoryKind kind, std::vector<SE3Pose> control_points, double exposure)
    : kind_(kind), control_points_(std::move(control_points)), exposure_(exposure) {
    if (!(exposure_ > 0.0)) throw std::invalid_argument("Trajectory: exposure must be > 0");
    const int n = control_count();
    switch (kind_) {
        case TrajectoryKind::Bezier:
            if (n < 2) throw std::invalid_argument("Trajectory: bezier needs >= 2 control points");
            // log(T_j) must exist for the product formula
            for (const auto& T : control_points_) (void)se3_log(T);
            break;
        case TrajectoryKind::Linear:
            if (n != 2) throw std::invalid_argument("Trajectory: linear needs exactly 2 control points");
            break;
        case TrajectoryKind::CubicSpline:
            if (n < 4) throw std::invalid_argument("Trajectory: cubic spline needs >= 4 control points");
            break;
    }
}

Trajectory Trajectory::constant(TrajectoryKind kind, const SE3Pose& pose, int control_count,
                                double exposure) {
    int n = control_count;
    if (kind == TrajectoryKind::Linear) n = 2;
    if (kind == TrajectoryKind::CubicSpline && n < 4) n = 4;
    if (n < 2) n = 2;
    return Trajectory(kind, std::vector<SE3Pose>(n, pose), exposure);
}

SE3Pose Trajectory::pose_at_time(double t) const {
    if (t < 0.0 || t > exposure_) throw std::out_of_range("Trajectory: time outside exposure window");
    return pose_at_u(t / exposure_);
}

SE3Pose Trajectory::pose_at_u(double u) const {
    const int n = control_count();
    switch (kind_) {
        case TrajectoryKind::Bezier: {
            const int degree = n - 1;
            SE3Pose out = SE3Pose::identity();
            for (int j = 0; j <= degree; ++j) {
                const double b = bernstein(degree, j, u);
                out = out * se3_exp(se3_log(control_points_[j]).scaled(b));
            }
            return out;
        }
        case TrajectoryKind::Linear: {
            const Twist xi = se3_log(control_points_[0].inverse() * control_points_[1]);
            return control_points_[0] * se3_exp(xi.scaled(u));
        }
        case TrajectoryKind::CubicSpline: {
            const int segments = n - 3;
            double s = u * segments;
            int seg = std::min(static_cast<int>(s), segments - 1);
            if (seg < 0) seg = 0;
            const double w = s - seg;
            double lambda[3];
            cumulative_cubic_basis(w, lambda);
            SE3Pose out = control_points_[seg];
            for (int k = 0; k < 3; ++k) {
                const Twist omega =
                    se3_log(control_points_[seg + k].inverse() * control_points_[seg + k + 1]);
                out = out * se3_exp(omega.scaled(lambda[k]));
            }
            return out;
        }
    }
    throw std::logic_error("Trajectory: unknown kind");
}

std::vector<Matrix6d> Trajectory::pose_jacobians(double u) const {
    const int n = control_count();
    std::vector<Matrix6d> jac(n, Matrix6d::Zero());
    switch (kind_) {
        case TrajectoryKind::Bezier: {
            // T(u) = prod exp(b_j xi_j).  Perturbing T_j <- exp(d) T_j moves
            // xi_j by Jl^{-1}(xi_j) d, the factor by Jl(b_j xi_j) b_j dxi_j,
            // and conjugation by the prefix maps it into the left frame.
            const int degree = n - 1;
            SE3Pose prefix = SE3Pose::identity();
            for (int j = 0; j <= degree; ++j) {
                const Twist xi = se3_log(control_points_[j]);
                const double b = bernstein(degree, j, u);
                jac[j] = b * se3_adjoint(prefix) * se3_left_jacobian(xi.scaled(b)) *
                         se3_left_jacobian_inverse(xi);
                prefix = prefix * se3_exp(xi.scaled(b));
            }
            return jac;
        }
        case TrajectoryKind::Linear: {
            const Twist xi = se3_log(control_points_[0].inverse() * control_points_[1]);
            const Matrix6d ad_start = se3_adjoint(control_points_[0]);
            const Matrix6d chain = u * ad_start * se3_left_jacobian(xi.scaled(u)) *
                                   se3_left_jacobian_inverse(xi) * ad_start.inverse();
            jac[0] = Matrix6d::Identity() - chain;
            jac[1] = chain;
            return jac;
        }
        case TrajectoryKind::CubicSpline: {
            const int segments = n - 3;
            double s = u * segments;
            int seg = std::min(static_cast<int>(s), segments - 1);
            if (seg < 0) seg = 0;
            const double w = s - seg;
            double lambda[3];
            cumulative_cubic_basis(w, lambda);

            jac[seg] = Matrix6d::Identity();
            SE3Pose prefix = control_points_[seg];
            for (int k = 0; k < 3; ++k) {
                const SE3Pose& a = control_points_[seg + k];
                const SE3Pose& b = control_points_[seg + k + 1];
                const Twist omega = se3_log(a.inverse() * b);
                const Matrix6d chain = lambda[k] * se3_adjoint(prefix) *
                                       se3_left_jacobian(omega.scaled(lambda[k])) *
                                       se3_left_jacobian_inverse(omega) *
                                       se3_adjoint(a.inverse());
                jac[seg + k + 1] += chain;
                jac[seg + k] -= chain;
                prefix = prefix * se3_exp(omega.scaled(lambda[k]));
            }
            return jac;
        }
    }
    throw std::logic_error("Trajectory: unknown kind");
}

void Trajectory::retract(const std::vector<Twist>& deltas) {
    if (deltas.size() != control_points_.size())
        throw std::invalid_argument("Trajectory::retract: size mismatch");
    for (std::size_t j = 0; j < deltas.size(); ++j)
        control_points_[j] = se3_exp(deltas[j]) * control_points_[j];
}

std::string to_tum_line(const TimedPose& tp) {
    Eigen::Quaterniond q(tp.pose.rotation);
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g",
                  tp.timestamp, tp.pose.translation.x(), tp.pose.translation.y(),
                  tp.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
    return buf;
}

TimedPose parse_tum_line(const std::string& line) {
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
        throw std::runtime_error("parse_tum_line: malformed line: " + line);
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (!(std::abs(q.norm() - 1.0) < 1e-6))
        throw std::runtime_error("parse_tum_line: quaternion not unit length");
    q.normalize();
    TimedPose tp;
    tp.timestamp = t;
    tp.pose = SE3Pose(q.toRotationMatrix(), Eigen::Vector3d(tx, ty, tz));
    return tp;
}

void save_tum(const std::string& path, const std::vector<TimedPose>& poses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_tum: cannot open " + path);
    for (const auto& tp : poses) out << to_tum_line(tp) << "\n";
}

std::vector<TimedPose> load_tum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tum: cannot open " + path);
    std::vector<TimedPose> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_tum_line(line));
    }
    return out;
}

}  // namespace gems
