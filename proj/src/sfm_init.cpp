#include "gems/sfm_init.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gems/rng.hpp"

namespace gems {

NoiseProfile NoiseProfile::for_blur_level(int level) {
    NoiseProfile p;
    p.blur_level = level;
    switch (level) {
        case 3:  p.rmse = 0.18; p.mean = 0.16; p.median = 0.13; p.std_dev = 0.09; p.max = 0.35; break;
        case 5:  p.rmse = 0.32; p.mean = 0.27; p.median = 0.20; p.std_dev = 0.18; p.max = 0.65; break;
        case 7:  p.rmse = 0.40; p.mean = 0.36; p.median = 0.29; p.std_dev = 0.17; p.max = 0.75; break;
        case 9:  p.rmse = 0.61; p.mean = 0.49; p.median = 0.36; p.std_dev = 0.36; p.max = 1.43; break;
        case 11: p.rmse = 0.72; p.mean = 0.52; p.median = 0.35; p.std_dev = 0.50; p.max = 2.24; break;
        default:
            throw std::invalid_argument("NoiseProfile: unknown blur level " + std::to_string(level));
    }
    // rotation error is not tabulated; 0.5 deg per axis at mid level, linear in level
    p.rot_sigma_rad = (0.5 * M_PI / 180.0) * (static_cast<double>(level) / 7.0);
    return p;
}

NoiseProfile NoiseProfile::edi_initialized() {
    // Deblur-then-SfM pose error measured at mean APE 0.0862 m; rmse/median/
    // std/max ratios borrowed from the lowest tabulated blur row.
    NoiseProfile p;
    p.blur_level = 0;
    p.mean = 0.0862;
    p.rmse = 0.0862 * (0.18 / 0.16);
    p.median = 0.0862 * (0.13 / 0.16);
    p.std_dev = 0.0862 * (0.09 / 0.16);
    p.max = 0.0862 * (0.35 / 0.16);
    p.rot_sigma_rad = 0.1 * M_PI / 180.0;
    return p;
}

NoiseProfile NoiseProfile::zero() { return NoiseProfile{}; }

std::vector<SE3Pose> perturb_poses(const std::vector<SE3Pose>& gt, const NoiseProfile& profile,
                                   uint64_t seed) {
    if (gt.empty()) throw std::invalid_argument("perturb_poses: empty pose list");
    Pcg32 rng(seed);

    std::vector<Eigen::Vector3d> noise(gt.size());
    double sq = 0.0;
    for (auto& n : noise) {
        n = Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
        sq += n.squaredNorm();
    }
    const double sample_rmse = std::sqrt(sq / static_cast<double>(gt.size()));
    const double scale = sample_rmse > 0.0 && profile.rmse > 0.0 ? profile.rmse / sample_rmse : 0.0;

    std::vector<SE3Pose> out;
    out.reserve(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        Eigen::Vector3d axis_noise(rng.gaussian(), rng.gaussian(), rng.gaussian());
        axis_noise *= profile.rot_sigma_rad;
        SE3Pose p = gt[i];
        p.rotation = so3_exp(axis_noise) * p.rotation;
        p.translation += scale * noise[i];
        out.push_back(p);
    }
    return out;
}

std::vector<Eigen::Vector3d> sample_pointcloud(const SceneModel& scene, std::size_t count,
                                               double jitter_sigma, uint64_t seed) {
    if (scene.size() == 0) throw std::invalid_argument("sample_pointcloud: empty scene");
    if (count == 0) throw std::invalid_argument("sample_pointcloud: count must be >= 1");
    Pcg32 rng(seed);

    std::vector<double> cum(scene.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        total += scene[i].opacity();
        cum[i] = total;
    }

    // systematic resampling over the opacity weights
    std::vector<Eigen::Vector3d> points;
    points.reserve(count);
    const double step = total / static_cast<double>(count);
    // keep the offset strictly inside (0, step) so equal weights map k -> k
    double u = step * std::min(std::max(rng.uniform(), 1e-9), 1.0 - 1e-9);
    std::size_t idx = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double target = u + static_cast<double>(k) * step;
        while (idx + 1 < scene.size() && cum[idx] < target) ++idx;
        Eigen::Vector3d p = scene[idx].mu;
        if (jitter_sigma > 0.0)
            p += jitter_sigma * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
        points.push_back(p);
    }
    return points;
}

void save_pointcloud(const std::string& path, const std::vector<Eigen::Vector3d>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_pointcloud: cannot open " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g", p.x(), p.y(), p.z());
        out << buf << "\n";
    }
}

std::vector<Eigen::Vector3d> load_pointcloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_pointcloud: cannot open " + path);
    std::string line;
    std::size_t count = 0;
    bool in_header = true;
    std::vector<Eigen::Vector3d> points;
    while (std::getline(in, line)) {
        if (in_header) {
            std::istringstream ss(line);
            std::string tok;
            ss >> tok;
            if (tok == "element") {
                std::string what;
                ss >> what >> count;
            } else if (tok == "end_header") {
                in_header = false;
            }
            continue;
        }
        std::istringstream ss(line);
        Eigen::Vector3d p;
        if (!(ss >> p.x() >> p.y() >> p.z()))
            throw std::runtime_error("load_pointcloud: malformed line: " + line);
        points.push_back(p);
    }
    if (points.size() != count)
        throw std::runtime_error("load_pointcloud: vertex count mismatch in " + path);
    return points;
}

}  // namespace gems
