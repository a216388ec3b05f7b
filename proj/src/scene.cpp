#include "gems/scene.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gems {

Eigen::Matrix3d Gaussian3D::rotation() const {
    Eigen::Vector4d qn = q / q.norm();
    return Eigen::Quaterniond(qn[0], qn[1], qn[2], qn[3]).toRotationMatrix();
}

void Gaussian3D::normalize_quaternion() {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::runtime_error("Gaussian3D: degenerate quaternion");
    q /= n;
}

Eigen::Matrix3d covariance3d(const Gaussian3D& g) {
    const Eigen::Matrix3d R = g.rotation();
    const Eigen::Matrix3d M = R * g.scale().asDiagonal();
    return M * M.transpose();
}

double evaluate_density(const Gaussian3D& g, const Eigen::Vector3d& x) {
    const Eigen::Vector3d d = x - g.mu;
    const Eigen::Matrix3d sigma = covariance3d(g);
    return std::exp(-0.5 * d.dot(sigma.ldlt().solve(d)));
}

Camera::Camera(double fx_, double fy_, double cx_, double cy_, int w, int h)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h) {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("Camera: focal lengths must be > 0");
    if (w < 1 || h < 1) throw std::invalid_argument("Camera: resolution must be >= 1x1");
}

std::optional<Projected2D> project(const Gaussian3D& g, const SE3Pose& pose, const Camera& cam) {
    const Eigen::Vector3d p = pose * g.mu;
    if (p.z() <= kZNear) return std::nullopt;

    const double inv_z = 1.0 / p.z();
    Projected2D out;
    out.depth = p.z();
    out.mean2d = Eigen::Vector2d(cam.fx * p.x() * inv_z + cam.cx, cam.fy * p.y() * inv_z + cam.cy);

    Eigen::Matrix<double, 2, 3> J;
    J << cam.fx * inv_z, 0.0, -cam.fx * p.x() * inv_z * inv_z,  //
        0.0, cam.fy * inv_z, -cam.fy * p.y() * inv_z * inv_z;

    const Eigen::Matrix3d cov_cam = pose.rotation * covariance3d(g) * pose.rotation.transpose();
    out.cov2d = J * cov_cam * J.transpose() + kCovDilation2D * Eigen::Matrix2d::Identity();
    return out;
}

void SceneModel::set_capacity(std::size_t capacity) {
    if (capacity != 0 && capacity < gaussians_.size())
        throw std::invalid_argument("SceneModel: capacity below current count");
    capacity_ = capacity;
}

void SceneModel::add(const Gaussian3D& g) {
    if (capacity_ != 0 && gaussians_.size() >= capacity_)
        throw std::runtime_error("SceneModel: capacity exceeded");
    gaussians_.push_back(g);
}

namespace {

constexpr char kBinaryMagic[4] = {'G', 'S', 'P', 'L'};
constexpr uint32_t kSceneVersion = 1;
// must not share the first four bytes with the binary magic
constexpr char kTextHeader[] = "gaussian_scene_text 1";

void validate(const Gaussian3D& g, std::size_t index) {
    auto finite3 = [](const Eigen::Vector3d& v) { return v.allFinite(); };
    if (!finite3(g.mu) || !g.q.allFinite() || !finite3(g.log_scale) || !std::isfinite(g.opacity_logit) ||
        !finite3(g.color))
        throw std::runtime_error("scene: non-finite field in gaussian " + std::to_string(index));
    if (!(g.q.norm() > 1e-12)) throw std::runtime_error("scene: zero quaternion in gaussian " + std::to_string(index));
}

}  // namespace

void save_scene(const std::string& path, const SceneModel& scene, bool binary) {
    if (binary) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("save_scene: cannot open " + path);
        out.write(kBinaryMagic, 4);
        uint32_t version = kSceneVersion;
        uint64_t count = scene.size();
        uint64_t capacity = scene.capacity();
        out.write(reinterpret_cast<const char*>(&version), sizeof(version));
        out.write(reinterpret_cast<const char*>(&count), sizeof(count));
        out.write(reinterpret_cast<const char*>(&capacity), sizeof(capacity));
        for (const auto& g : scene.gaussians()) {
            double rec[14] = {g.mu.x(),        g.mu.y(),        g.mu.z(),        g.q[0],     g.q[1],
                              g.q[2],          g.q[3],          g.log_scale.x(), g.log_scale.y(),
                              g.log_scale.z(), g.opacity_logit, g.color.x(),     g.color.y(), g.color.z()};
            out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
        }
        if (!out) throw std::runtime_error("save_scene: write failed on " + path);
        return;
    }

    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_scene: cannot open " + path);
    out << kTextHeader << "\n";
    out << "count " << scene.size() << "\n";
    out << "capacity " << scene.capacity() << "\n";
    char buf[1024];
    for (const auto& g : scene.gaussians()) {
        std::snprintf(buf, sizeof(buf),
                      "mu %.17g %.17g %.17g q %.17g %.17g %.17g %.17g "
                      "log_scale %.17g %.17g %.17g opacity_logit %.17g color %.17g %.17g %.17g",
                      g.mu.x(), g.mu.y(), g.mu.z(), g.q[0], g.q[1], g.q[2], g.q[3], g.log_scale.x(),
                      g.log_scale.y(), g.log_scale.z(), g.opacity_logit, g.color.x(), g.color.y(),
                      g.color.z());
        out << buf << "\n";
    }
    if (!out) throw std::runtime_error("save_scene: write failed on " + path);
}

SceneModel load_scene(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("load_scene: cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);

    if (std::memcmp(magic, kBinaryMagic, 4) == 0) {
        uint32_t version = 0;
        uint64_t count = 0, capacity = 0;
        probe.read(reinterpret_cast<char*>(&version), sizeof(version));
        probe.read(reinterpret_cast<char*>(&count), sizeof(count));
        probe.read(reinterpret_cast<char*>(&capacity), sizeof(capacity));
        if (!probe) throw std::runtime_error("load_scene: truncated header in " + path);
        if (version != kSceneVersion)
            throw std::runtime_error("load_scene: unsupported version " + std::to_string(version));
        SceneModel scene(capacity);
        for (uint64_t i = 0; i < count; ++i) {
            double rec[14];
            probe.read(reinterpret_cast<char*>(rec), sizeof(rec));
            if (!probe) throw std::runtime_error("load_scene: truncated record in " + path);
            Gaussian3D g;
            g.mu = Eigen::Vector3d(rec[0], rec[1], rec[2]);
            g.q = Eigen::Vector4d(rec[3], rec[4], rec[5], rec[6]);
            g.log_scale = Eigen::Vector3d(rec[7], rec[8], rec[9]);
            g.opacity_logit = rec[10];
            g.color = Eigen::Vector3d(rec[11], rec[12], rec[13]);
            validate(g, i);
            scene.add(g);
        }
        return scene;
    }

    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line) || line != kTextHeader)
        throw std::runtime_error("load_scene: bad header in " + path);
    std::size_t count = 0, capacity = 0;
    std::string key;
    in >> key >> count;
    if (key != "count") throw std::runtime_error("load_scene: missing count in " + path);
    in >> key >> capacity;
    if (key != "capacity") throw std::runtime_error("load_scene: missing capacity in " + path);
    std::getline(in, line);

    SceneModel scene(capacity);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("load_scene: truncated file " + path);
        std::istringstream ss(line);
        Gaussian3D g;
        std::string f;
        auto expect = [&](const char* name) {
            if (!(ss >> f) || f != name)
                throw std::runtime_error(std::string("load_scene: expected field '") + name + "' in " + path);
        };
        expect("mu");
        ss >> g.mu.x() >> g.mu.y() >> g.mu.z();
        expect("q");
        ss >> g.q[0] >> g.q[1] >> g.q[2] >> g.q[3];
        expect("log_scale");
        ss >> g.log_scale.x() >> g.log_scale.y() >> g.log_scale.z();
        expect("opacity_logit");
        ss >> g.opacity_logit;
        expect("color");
        ss >> g.color.x() >> g.color.y() >> g.color.z();
        if (!ss) throw std::runtime_error("load_scene: malformed record in " + path);
        validate(g, i);
        scene.add(g);
    }
    return scene;
}

}  // namespace gems
