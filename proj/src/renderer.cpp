#include "gems/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gems/parallel.hpp"

namespace gems {

namespace {

constexpr int kTileRows = 8;

// One projected Gaussian, everything the per-pixel loops need.
struct Splat {
    int index;
    double depth;
    Eigen::Vector2d mean2d;
    double ia, ib, id;  // symmetric inverse of cov2d
    double opacity;
    Eigen::Vector3d color;
    int x0, x1, y0, y1;  // inclusive pixel bounds of the 3-sigma box
};

std::vector<Splat> project_scene(const SceneModel& scene, const SE3Pose& pose, const Camera& cam) {
    std::vector<Splat> splats;
    splats.reserve(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian3D& g = scene[i];
        auto proj = project(g, pose, cam);
        if (!proj) continue;  // behind camera

        const double a = proj->cov2d(0, 0), b = proj->cov2d(0, 1), d = proj->cov2d(1, 1);
        const double det = a * d - b * b;  // >= dilation^2, always invertible
        const double mid = 0.5 * (a + d);
        const double lam_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
        const double radius = kSupportSigmas * std::sqrt(lam_max);

        Splat s;
        s.index = static_cast<int>(i);
        s.depth = proj->depth;
        s.mean2d = proj->mean2d;
        const double inv_det = 1.0 / det;
        s.ia = d * inv_det;
        s.ib = -b * inv_det;
        s.id = a * inv_det;
        s.opacity = g.opacity();
        s.color = g.color;
        s.x0 = std::max(0, static_cast<int>(std::ceil(s.mean2d.x() - radius)));
        s.x1 = std::min(cam.width - 1, static_cast<int>(std::floor(s.mean2d.x() + radius)));
        s.y0 = std::max(0, static_cast<int>(std::ceil(s.mean2d.y() - radius)));
        s.y1 = std::min(cam.height - 1, static_cast<int>(std::floor(s.mean2d.y() + radius)));
        if (s.x0 > s.x1 || s.y0 > s.y1) continue;
        splats.push_back(s);
    }
    // front to back; ties broken by index for determinism
    std::sort(splats.begin(), splats.end(), [](const Splat& l, const Splat& r) {
        return l.depth != r.depth ? l.depth < r.depth : l.index < r.index;
    });
    return splats;
}

inline double splat_sigma(const Splat& s, double dx, double dy) {
    return 0.5 * (s.ia * dx * dx + 2.0 * s.ib * dx * dy + s.id * dy * dy);
}

// Composites rows [row0, row1) of every splat in order. Pixel centers sit at
// integer coordinates.
void composite_rows(const std::vector<Splat>& splats, const Camera& cam, int row0, int row1,
                    ImageBuffer& image, std::vector<double>& transmittance) {
    for (const Splat& s : splats) {
        const int ya = std::max(s.y0, row0);
        const int yb = std::min(s.y1, row1 - 1);
        for (int y = ya; y <= yb; ++y) {
            for (int x = s.x0; x <= s.x1; ++x) {
                double& T = transmittance[static_cast<std::size_t>(y) * cam.width + x];
                if (T < kTransmittanceStop) continue;
                const double sigma = splat_sigma(s, x - s.mean2d.x(), y - s.mean2d.y());
                const double alpha = std::min(s.opacity * std::exp(-sigma), kAlphaMax);
                const double w = alpha * T;
                image.at(x, y, 0) += s.color.x() * w;
                image.at(x, y, 1) += s.color.y() * w;
                image.at(x, y, 2) += s.color.z() * w;
                T *= 1.0 - alpha;
            }
        }
    }
}

ImageBuffer render_pose(const std::vector<Splat>& splats, const Camera& cam) {
    ImageBuffer image(cam.width, cam.height);
    std::vector<double> transmittance(static_cast<std::size_t>(cam.width) * cam.height, 1.0);
    const std::size_t n_tiles = (cam.height + kTileRows - 1) / kTileRows;
    parallel_tiles(n_tiles, [&](std::size_t tile) {
        const int row0 = static_cast<int>(tile) * kTileRows;
        const int row1 = std::min(cam.height, row0 + kTileRows);
        composite_rows(splats, cam, row0, row1, image, transmittance);
    });
    return image;
}

// Per-splat pixel-loop accumulators: d/dmean2d (2), d/dcov2d (3, symmetric),
// d/dopacity (1), d/dcolor (3).
struct SplatAccum {
    double g1x = 0, g1y = 0;
    double c_aa = 0, c_ab = 0, c_dd = 0;
    double g_o = 0;
    double g_r = 0, g_g = 0, g_b = 0;

    void add(const SplatAccum& o) {
        g1x += o.g1x;
        g1y += o.g1y;
        c_aa += o.c_aa;
        c_ab += o.c_ab;
        c_dd += o.c_dd;
        g_o += o.g_o;
        g_r += o.g_r;
        g_g += o.g_g;
        g_b += o.g_b;
    }
};

void backward_rows(const std::vector<Splat>& splats, const Camera& cam, const ImageBuffer& total,
                   const ImageBuffer& dC, int row0, int row1, std::vector<SplatAccum>& accum) {
    // Walks pixels in the same splat order as the forward pass, carrying the
    // running transmittance and color prefix so the suffix sum needed by
    // d/dalpha is available without storing per-pixel lists.
    const int w = cam.width;
    std::vector<double> trans(static_cast<std::size_t>(w) * (row1 - row0), 1.0);
    std::vector<double> prefix(static_cast<std::size_t>(w) * (row1 - row0) * 3, 0.0);

    for (std::size_t si = 0; si < splats.size(); ++si) {
        const Splat& s = splats[si];
        SplatAccum& acc = accum[si];
        const int ya = std::max(s.y0, row0);
        const int yb = std::min(s.y1, row1 - 1);
        for (int y = ya; y <= yb; ++y) {
            for (int x = s.x0; x <= s.x1; ++x) {
                const std::size_t local = static_cast<std::size_t>(y - row0) * w + x;
                double& T = trans[local];
                if (T < kTransmittanceStop) continue;
                double* pre = &prefix[local * 3];

                const double dx = x - s.mean2d.x();
                const double dy = y - s.mean2d.y();
                const double sigma = splat_sigma(s, dx, dy);
                const double e = std::exp(-sigma);
                const double alpha_raw = s.opacity * e;
                const bool clipped = alpha_raw > kAlphaMax;
                const double alpha = clipped ? kAlphaMax : alpha_raw;
                const double wgt = alpha * T;

                double dL_dalpha = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double contrib = s.color[c] * wgt;
                    pre[c] += contrib;
                    const double suffix = total.at(x, y, c) - pre[c];
                    dL_dalpha += dC.at(x, y, c) * (s.color[c] * T - suffix / (1.0 - alpha));
                }
                acc.g_r += dC.at(x, y, 0) * wgt;
                acc.g_g += dC.at(x, y, 1) * wgt;
                acc.g_b += dC.at(x, y, 2) * wgt;

                if (!clipped) {
                    acc.g_o += dL_dalpha * e;
                    const double dL_dsigma = -dL_dalpha * alpha_raw;
                    const double mx = s.ia * dx + s.ib * dy;
                    const double my = s.ib * dx + s.id * dy;
                    acc.g1x -= dL_dsigma * mx;
                    acc.g1y -= dL_dsigma * my;
                    acc.c_aa -= 0.5 * dL_dsigma * mx * mx;
                    acc.c_ab -= 0.5 * dL_dsigma * mx * my;
                    acc.c_dd -= 0.5 * dL_dsigma * my * my;
                }
                T *= 1.0 - alpha;
            }
        }
    }
}

// d(rotation matrix)/d(unit quaternion component), q = (w, x, y, z).
void rotation_quat_derivatives(const Eigen::Vector4d& q, Eigen::Matrix3d dR[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    dR[0] << 0, -z, y, z, 0, -x, -y, x, 0;
    dR[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    dR[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    dR[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    for (int k = 0; k < 4; ++k) dR[k] *= 2.0;
}

}  // namespace

void RenderGradients::resize(std::size_t n_gaussians, std::size_t n_poses) {
    d_mu.assign(n_gaussians, Eigen::Vector3d::Zero());
    d_q.assign(n_gaussians, Eigen::Vector4d::Zero());
    d_log_scale.assign(n_gaussians, Eigen::Vector3d::Zero());
    d_opacity_logit.assign(n_gaussians, 0.0);
    d_color.assign(n_gaussians, Eigen::Vector3d::Zero());
    d_pose.assign(n_poses, Vector6d::Zero());
}

ImageBuffer render(const SceneModel& scene, const SE3Pose& pose, const Camera& cam) {
    return render_pose(project_scene(scene, pose, cam), cam);
}

std::pair<ImageBuffer, std::vector<SE3Pose>> render_blurred(const SceneModel& scene,
                                                            const Trajectory& traj,
                                                            const Camera& cam, int n_virtual) {
    if (n_virtual < 1) throw std::invalid_argument("render_blurred: n_virtual must be >= 1");
    std::vector<SE3Pose> poses;
    poses.reserve(n_virtual);
    for (int i = 0; i < n_virtual; ++i) {
        const double u = n_virtual == 1 ? 0.0 : static_cast<double>(i) / (n_virtual - 1);
        poses.push_back(traj.pose_at_u(u));
    }
    ImageBuffer mean(cam.width, cam.height);
    for (const SE3Pose& pose : poses) {
        const ImageBuffer frame = render(scene, pose, cam);
        auto& acc = mean.data();
        const auto& src = frame.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
    const double inv_n = 1.0 / n_virtual;
    for (double& v : mean.data()) v *= inv_n;
    return {std::move(mean), std::move(poses)};
}

RenderGradients render_backward(const SceneModel& scene, const std::vector<SE3Pose>& virtual_poses,
                                const Camera& cam, const ImageBuffer& dL_dB) {
    if (dL_dB.width() != cam.width || dL_dB.height() != cam.height)
        throw std::invalid_argument("render_backward: gradient shape mismatch");
    if (!dL_dB.all_finite()) throw std::invalid_argument("render_backward: non-finite gradient");

    const std::size_t n_gauss = scene.size();
    const std::size_t n_poses = virtual_poses.size();
    RenderGradients grads;
    grads.resize(n_gauss, n_poses);

    // dB/dC_i = 1/n for the pixel-wise mean
    ImageBuffer dC = dL_dB;
    const double inv_n = 1.0 / static_cast<double>(n_poses);
    for (double& v : dC.data()) v *= inv_n;

    // 3D covariances are pose independent
    std::vector<Eigen::Matrix3d> sigma3(n_gauss);
    for (std::size_t i = 0; i < n_gauss; ++i) sigma3[i] = covariance3d(scene[i]);

    const std::size_t n_tiles = (cam.height + kTileRows - 1) / kTileRows;

    for (std::size_t pi = 0; pi < n_poses; ++pi) {
        const SE3Pose& pose = virtual_poses[pi];
        const std::vector<Splat> splats = project_scene(scene, pose, cam);
        const ImageBuffer total = render_pose(splats, cam);

        std::vector<std::vector<SplatAccum>> tile_accum(n_tiles,
                                                        std::vector<SplatAccum>(splats.size()));
        parallel_tiles(n_tiles, [&](std::size_t tile) {
            const int row0 = static_cast<int>(tile) * kTileRows;
            const int row1 = std::min(cam.height, row0 + kTileRows);
            backward_rows(splats, cam, total, dC, row0, row1, tile_accum[tile]);
        });
        // tile-ordered reduction: independent of worker count
        std::vector<SplatAccum> accum(splats.size());
        for (std::size_t t = 0; t < n_tiles; ++t)
            for (std::size_t si = 0; si < splats.size(); ++si) accum[si].add(tile_accum[t][si]);

        Vector6d& d_pose = grads.d_pose[pi];
        const Eigen::Matrix3d& W = pose.rotation;

        for (std::size_t si = 0; si < splats.size(); ++si) {
            const Splat& s = splats[si];
            const SplatAccum& acc = accum[si];
            const Gaussian3D& g = scene[s.index];

            const Eigen::Vector2d G1(acc.g1x, acc.g1y);
            Eigen::Matrix2d G2;
            G2 << acc.c_aa, acc.c_ab, acc.c_ab, acc.c_dd;

            const Eigen::Vector3d p = pose * g.mu;
            const double inv_z = 1.0 / p.z();
            const double inv_z2 = inv_z * inv_z;
            Eigen::Matrix<double, 2, 3> J;
            J << cam.fx * inv_z, 0.0, -cam.fx * p.x() * inv_z2,  //
                0.0, cam.fy * inv_z, -cam.fy * p.y() * inv_z2;

            const Eigen::Matrix3d V = W * sigma3[s.index] * W.transpose();
            const Eigen::Matrix3d GV = J.transpose() * G2 * J;
            const Eigen::Matrix<double, 2, 3> dJ = 2.0 * G2 * J * V;

            Eigen::Vector3d dp = J.transpose() * G1;
            dp.x() += dJ(0, 2) * (-cam.fx * inv_z2);
            dp.y() += dJ(1, 2) * (-cam.fy * inv_z2);
            dp.z() += dJ(0, 0) * (-cam.fx * inv_z2) + dJ(1, 1) * (-cam.fy * inv_z2) +
                      dJ(0, 2) * (2.0 * cam.fx * p.x() * inv_z2 * inv_z) +
                      dJ(1, 2) * (2.0 * cam.fy * p.y() * inv_z2 * inv_z);

            grads.d_mu[s.index] += W.transpose() * dp;

            // left perturbation: p(eps) = (I + skew(omega)) p + rho
            d_pose.head<3>() += dp;
            d_pose.tail<3>() += p.cross(dp);
            // rotation also enters the camera-space covariance V = W Sigma W^T
            const Eigen::Matrix3d GW = 2.0 * GV * W * sigma3[s.index];
            const Eigen::Matrix3d A = GW * W.transpose();
            d_pose.tail<3>() += Eigen::Vector3d(A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1));

            // Sigma = M M^T with M = R S
            const Eigen::Matrix3d GSigma = W.transpose() * GV * W;
            const Eigen::Matrix3d R = g.rotation();
            const Eigen::Vector3d sc = g.scale();
            const Eigen::Matrix3d M = R * sc.asDiagonal();
            const Eigen::Matrix3d dM = 2.0 * GSigma * M;

            for (int k = 0; k < 3; ++k) {
                const double ds = dM.col(k).dot(R.col(k));
                grads.d_log_scale[s.index][k] += ds * sc[k];
            }

            const Eigen::Matrix3d dR = dM * sc.asDiagonal();
            Eigen::Matrix3d dRq[4];
            const double qnorm = g.q.norm();
            const Eigen::Vector4d qn = g.q / qnorm;
            rotation_quat_derivatives(qn, dRq);
            Eigen::Vector4d dq;
            for (int k = 0; k < 4; ++k) dq[k] = (dR.array() * dRq[k].array()).sum();
            dq = (dq - qn.dot(dq) * qn) / qnorm;  // through the normalization
            grads.d_q[s.index] += dq;

            const double o = s.opacity;
            grads.d_opacity_logit[s.index] += acc.g_o * o * (1.0 - o);
            grads.d_color[s.index] += Eigen::Vector3d(acc.g_r, acc.g_g, acc.g_b);
        }
    }
    return grads;
}

}  // namespace gems
