#include "gems/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gems {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kLogScaleMin = -12.0;
constexpr double kLogScaleMax = 3.0;

double adam_update(AdamBuffer& buf, std::size_t i, double grad, double lr, uint64_t t) {
    buf.m[i] = kBeta1 * buf.m[i] + (1.0 - kBeta1) * grad;
    buf.v[i] = kBeta2 * buf.v[i] + (1.0 - kBeta2) * grad * grad;
    const double mhat = buf.m[i] / (1.0 - std::pow(kBeta1, static_cast<double>(t)));
    const double vhat = buf.v[i] / (1.0 - std::pow(kBeta2, static_cast<double>(t)));
    return -lr * mhat / (std::sqrt(vhat) + kAdamEps);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

void OptimConfig::validate() const {
    if (n_virtual < 1) throw std::invalid_argument("OptimConfig: n_virtual must be >= 1");
    if (control_points < 2) throw std::invalid_argument("OptimConfig: control_points must be >= 2");
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("OptimConfig: lambda must be in [0,1]");
    if (iterations < 0) throw std::invalid_argument("OptimConfig: iterations must be >= 0");
    if (!(relocate_opacity_eps > 0.0 && relocate_opacity_eps < 1.0))
        throw std::invalid_argument("OptimConfig: relocate_opacity_eps must be in (0,1)");
}

void apply_config_line(OptimConfig& cfg, const std::string& key, const std::string& value) {
    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    if (key == "n_virtual") cfg.n_virtual = as_int();
    else if (key == "control_points") cfg.control_points = as_int();
    else if (key == "lr_pose") cfg.lr_pose = as_double();
    else if (key == "lr_position") cfg.lr_position = as_double();
    else if (key == "lr_position_final_ratio") cfg.lr_position_final_ratio = as_double();
    else if (key == "lr_rotation") cfg.lr_rotation = as_double();
    else if (key == "lr_scale") cfg.lr_scale = as_double();
    else if (key == "lr_opacity") cfg.lr_opacity = as_double();
    else if (key == "lr_color") cfg.lr_color = as_double();
    else if (key == "iterations") cfg.iterations = as_int();
    else if (key == "lambda") cfg.lambda = as_double();
    else if (key == "sgld_noise") cfg.sgld_noise = as_double();
    else if (key == "n_max") cfg.n_max = static_cast<std::size_t>(std::stoull(value));
    else if (key == "relocate_opacity_eps") cfg.relocate_opacity_eps = as_double();
    else if (key == "relocate_every") cfg.relocate_every = as_int();
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "trajectory") {
        if (value == "bezier") cfg.trajectory = TrajectoryKind::Bezier;
        else if (value == "linear") cfg.trajectory = TrajectoryKind::Linear;
        else if (value == "spline") cfg.trajectory = TrajectoryKind::CubicSpline;
        else throw std::invalid_argument("config: unknown trajectory '" + value + "'");
    } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

OptimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    OptimConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key, eq, value;
        if (!(ss >> key)) continue;
        if (!(ss >> eq >> value) || eq != "=")
            throw std::runtime_error("load_config: expected 'key = value', got: " + line);
        apply_config_line(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

void save_config(const std::string& path, const OptimConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_config: cannot open " + path);
    out << "n_virtual = " << cfg.n_virtual << "\n";
    out << "control_points = " << cfg.control_points << "\n";
    out << "lr_pose = " << cfg.lr_pose << "\n";
    out << "lr_position = " << cfg.lr_position << "\n";
    out << "lr_position_final_ratio = " << cfg.lr_position_final_ratio << "\n";
    out << "lr_rotation = " << cfg.lr_rotation << "\n";
    out << "lr_scale = " << cfg.lr_scale << "\n";
    out << "lr_opacity = " << cfg.lr_opacity << "\n";
    out << "lr_color = " << cfg.lr_color << "\n";
    out << "iterations = " << cfg.iterations << "\n";
    out << "lambda = " << cfg.lambda << "\n";
    out << "sgld_noise = " << cfg.sgld_noise << "\n";
    out << "n_max = " << cfg.n_max << "\n";
    out << "relocate_opacity_eps = " << cfg.relocate_opacity_eps << "\n";
    out << "relocate_every = " << cfg.relocate_every << "\n";
    out << "seed = " << cfg.seed << "\n";
    const char* kind = cfg.trajectory == TrajectoryKind::Bezier
                           ? "bezier"
                           : (cfg.trajectory == TrajectoryKind::Linear ? "linear" : "spline");
    out << "trajectory = " << kind << "\n";
}

double photometric_loss(const ImageBuffer& pred, const ImageBuffer& target, double lambda,
                        ImageBuffer& grad) {
    if (!pred.same_shape(target)) throw std::invalid_argument("photometric_loss: shape mismatch");
    grad = ImageBuffer(pred.width(), pred.height());

    const auto& pv = pred.data();
    const auto& tv = target.data();
    auto& gv = grad.data();
    const double inv_n = 1.0 / static_cast<double>(pv.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        const double d = pv[i] - tv[i];
        l1 += std::abs(d);
        gv[i] = (1.0 - lambda) * inv_n * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
    }
    l1 *= inv_n;

    double loss = (1.0 - lambda) * l1;
    if (lambda > 0.0) {
        const double s = ssim_with_gradient(pred, target, grad, -lambda);
        loss += lambda * (1.0 - s);
    }
    return loss;
}

TrainState init_train_state(SceneModel scene, std::vector<Trajectory> trajectories,
                            const OptimConfig& config) {
    config.validate();
    TrainState state;
    state.config = config;
    if (state.config.n_max == 0) state.config.n_max = scene.size();
    if (state.config.n_max < scene.size())
        throw std::invalid_argument("init_train_state: n_max below scene size");
    scene.set_capacity(state.config.n_max);
    state.scene = std::move(scene);
    state.trajectories = std::move(trajectories);

    const std::size_t n = state.scene.size();
    state.adam_mu.resize(3 * n);
    state.adam_q.resize(4 * n);
    state.adam_log_scale.resize(3 * n);
    state.adam_opacity.resize(n);
    state.adam_color.resize(3 * n);
    state.pose_opt.resize(state.trajectories.size());
    for (std::size_t v = 0; v < state.trajectories.size(); ++v)
        state.pose_opt[v].adam.resize(6 * state.trajectories[v].control_count());
    state.rng.reseed(state.config.seed);
    state.max_count_seen = n;
    return state;
}

namespace {

double position_lr(const OptimConfig& cfg, uint64_t iter) {
    if (cfg.iterations <= 1) return cfg.lr_position;
    const double progress = static_cast<double>(iter) / static_cast<double>(cfg.iterations - 1);
    return cfg.lr_position * std::pow(cfg.lr_position_final_ratio, std::min(1.0, progress));
}

void check_finite(const TrainState& state) {
    for (std::size_t i = 0; i < state.scene.size(); ++i) {
        const Gaussian3D& g = state.scene[i];
        if (!g.mu.allFinite()) throw NumericalFailure("non-finite position, gaussian " + std::to_string(i));
        if (!g.q.allFinite()) throw NumericalFailure("non-finite quaternion, gaussian " + std::to_string(i));
        if (!g.log_scale.allFinite())
            throw NumericalFailure("non-finite log_scale, gaussian " + std::to_string(i));
        if (!std::isfinite(g.opacity_logit))
            throw NumericalFailure("non-finite opacity_logit, gaussian " + std::to_string(i));
        if (!g.color.allFinite()) throw NumericalFailure("non-finite color, gaussian " + std::to_string(i));
    }
    for (std::size_t v = 0; v < state.trajectories.size(); ++v)
        for (const SE3Pose& T : state.trajectories[v].control_points())
            if (!T.rotation.allFinite() || !T.translation.allFinite())
                throw NumericalFailure("non-finite trajectory control point, view " + std::to_string(v));
}

}  // namespace

double train_step(TrainState& state, const std::vector<ObservedView>& views, const Camera& cam,
                  const std::vector<std::size_t>& batch) {
    if (views.size() != state.trajectories.size())
        throw std::invalid_argument("train_step: view/trajectory count mismatch");
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    check_finite(state);
    const OptimConfig& cfg = state.config;
    const std::size_t n = state.scene.size();
    const double batch_scale = 1.0 / static_cast<double>(batch.size());

    RenderGradients total;
    total.resize(n, 0);
    double loss_sum = 0.0;

    for (std::size_t v : batch) {
        if (v >= views.size()) throw std::invalid_argument("train_step: view index out of range");
        Trajectory& traj = state.trajectories[v];

        auto [blurred, poses] = render_blurred(state.scene, traj, cam, cfg.n_virtual);
        ImageBuffer dB;
        loss_sum += photometric_loss(blurred, views[v].target.image, cfg.lambda, dB);
        if (batch.size() > 1)
            for (double& g : dB.data()) g *= batch_scale;

        const RenderGradients grads = render_backward(state.scene, poses, cam, dB);

        for (std::size_t i = 0; i < n; ++i) {
            total.d_mu[i] += grads.d_mu[i];
            total.d_q[i] += grads.d_q[i];
            total.d_log_scale[i] += grads.d_log_scale[i];
            total.d_opacity_logit[i] += grads.d_opacity_logit[i];
            total.d_color[i] += grads.d_color[i];
        }

        if (cfg.lr_pose > 0.0) {
            // chain virtual-pose twists onto the control points
            const int n_ctrl = traj.control_count();
            std::vector<Vector6d> ctrl_grad(n_ctrl, Vector6d::Zero());
            for (int i = 0; i < cfg.n_virtual; ++i) {
                const double u = cfg.n_virtual == 1 ? 0.0 : static_cast<double>(i) / (cfg.n_virtual - 1);
                const std::vector<Matrix6d> jac = traj.pose_jacobians(u);
                for (int j = 0; j < n_ctrl; ++j)
                    ctrl_grad[j] += jac[j].transpose() * grads.d_pose[i];
            }
            PoseOptimizerState& popt = state.pose_opt[v];
            popt.step_count += 1;
            std::vector<Twist> deltas(n_ctrl);
            for (int j = 0; j < n_ctrl; ++j) {
                Vector6d step;
                for (int k = 0; k < 6; ++k)
                    step[k] = adam_update(popt.adam, 6 * j + k, ctrl_grad[j][k], cfg.lr_pose,
                                          popt.step_count);
                deltas[j] = Twist(step);
            }
            traj.retract(deltas);
        }
    }

    // gaussian parameter updates
    state.adam_t += 1;
    const double lr_pos = position_lr(cfg, state.iteration);
    for (std::size_t i = 0; i < n; ++i) {
        Gaussian3D& g = state.scene[i];
        for (int k = 0; k < 3; ++k)
            g.mu[k] += adam_update(state.adam_mu, 3 * i + k, batch_scale * total.d_mu[i][k], lr_pos,
                                   state.adam_t);
        for (int k = 0; k < 4; ++k)
            g.q[k] += adam_update(state.adam_q, 4 * i + k, batch_scale * total.d_q[i][k],
                                  cfg.lr_rotation, state.adam_t);
        for (int k = 0; k < 3; ++k) {
            g.log_scale[k] += adam_update(state.adam_log_scale, 3 * i + k,
                                          batch_scale * total.d_log_scale[i][k], cfg.lr_scale,
                                          state.adam_t);
            g.log_scale[k] = std::clamp(g.log_scale[k], kLogScaleMin, kLogScaleMax);
        }
        g.opacity_logit += adam_update(state.adam_opacity, i, batch_scale * total.d_opacity_logit[i],
                                       cfg.lr_opacity, state.adam_t);
        for (int k = 0; k < 3; ++k) {
            g.color[k] += adam_update(state.adam_color, 3 * i + k, batch_scale * total.d_color[i][k],
                                      cfg.lr_color, state.adam_t);
            g.color[k] = std::clamp(g.color[k], 0.0, 1.0);
        }
        g.normalize_quaternion();
    }

    // SGLD: Langevin noise on positions only, scaled by the position lr
    if (cfg.sgld_noise > 0.0) {
        const double sigma = cfg.sgld_noise * lr_pos;
        for (std::size_t i = 0; i < n; ++i)
            state.scene[i].mu += sigma * Eigen::Vector3d(state.rng.gaussian(), state.rng.gaussian(),
                                                         state.rng.gaussian());
    }

    state.iteration += 1;
    state.max_count_seen = std::max(state.max_count_seen, state.scene.size());
    check_finite(state);
    return loss_sum * batch_scale;
}

RelocationResult mcmc_relocate(TrainState& state) {
    const std::size_t n = state.scene.size();
    const double eps = state.config.relocate_opacity_eps;

    std::vector<std::size_t> dead;
    for (std::size_t i = 0; i < n; ++i)
        if (state.scene[i].opacity() < eps) dead.push_back(i);

    RelocationResult result;
    if (dead.empty()) return result;

    std::vector<bool> is_dead(n, false);
    for (std::size_t d : dead) is_dead[d] = true;

    auto reset_moments = [&](std::size_t i) {
        for (int k = 0; k < 3; ++k) {
            state.adam_mu.m[3 * i + k] = state.adam_mu.v[3 * i + k] = 0.0;
            state.adam_log_scale.m[3 * i + k] = state.adam_log_scale.v[3 * i + k] = 0.0;
            state.adam_color.m[3 * i + k] = state.adam_color.v[3 * i + k] = 0.0;
        }
        for (int k = 0; k < 4; ++k) state.adam_q.m[4 * i + k] = state.adam_q.v[4 * i + k] = 0.0;
        state.adam_opacity.m[i] = state.adam_opacity.v[i] = 0.0;
    };

    for (std::size_t d : dead) {
        // sample a live target proportionally to current opacity
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!is_dead[i]) total += state.scene[i].opacity();
        if (total <= 0.0) break;
        const double u = state.rng.uniform() * total;
        double acc = 0.0;
        std::size_t target = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_dead[i]) continue;
            acc += state.scene[i].opacity();
            if (u <= acc) {
                target = i;
                break;
            }
        }
        if (target == n) {
            for (std::size_t i = n; i-- > 0;)
                if (!is_dead[i]) {
                    target = i;
                    break;
                }
        }
        if (target == n) break;

        // opacity-preserving split: 1 - (1 - o_new)^2 = o_old, scales shared
        Gaussian3D& live = state.scene[target];
        Gaussian3D& moved = state.scene[d];
        const double o_old = live.opacity();
        const double o_new = std::max(eps, 1.0 - std::sqrt(std::max(0.0, 1.0 - o_old)));
        const double new_logit = logit(std::min(o_new, 1.0 - 1e-9));
        moved = live;
        moved.opacity_logit = new_logit;
        live.opacity_logit = new_logit;
        reset_moments(d);
        reset_moments(target);
        is_dead[d] = false;
        result.relocated += 1;
    }
    return result;
}

void run_training(TrainState& state, const std::vector<ObservedView>& views, const Camera& cam,
                  const RunHooks& hooks) {
    if (views.empty()) throw std::invalid_argument("run_training: no views");
    const OptimConfig& cfg = state.config;
    uint64_t end = static_cast<uint64_t>(cfg.iterations);
    if (hooks.stop_iteration > 0) end = std::min(end, hooks.stop_iteration);

    while (state.iteration < end) {
        const uint64_t iter = state.iteration;
        if (cfg.relocate_every > 0 && iter > 0 && iter % cfg.relocate_every == 0) {
            const SE3Pose probe = state.trajectories[0].pose_at_u(0.5);
            const ImageBuffer before = render(state.scene, probe, cam);
            const RelocationResult res = mcmc_relocate(state);
            if (res.relocated > 0) {
                const ImageBuffer after = render(state.scene, probe, cam);
                state.relocations.push_back({iter, res.relocated, psnr(before, after)});
            }
        }

        const std::vector<std::size_t> batch = {static_cast<std::size_t>(iter % views.size())};
        const double loss = train_step(state, views, cam, batch);

        if (hooks.on_log && (iter % std::max(1, hooks.log_every) == 0 ||
                             state.iteration == static_cast<uint64_t>(cfg.iterations))) {
            auto [blurred, poses] = render_blurred(state.scene, state.trajectories[batch[0]], cam,
                                                   cfg.n_virtual);
            (void)poses;
            TrainLogRow row;
            row.iteration = iter;
            row.loss = loss;
            row.blur_psnr = psnr(blurred, views[batch[0]].target.image);
            row.gaussians = state.scene.size();
            hooks.on_log(row);
        }
    }
}

namespace {

constexpr char kCheckpointMagic[4] = {'G', 'M', 'S', 'K'};
constexpr uint32_t kCheckpointVersion = 1;

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), sizeof(double) * n);
}
void read_doubles(std::ifstream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), sizeof(double) * n);
    if (!in) throw std::runtime_error("checkpoint: truncated file");
}
template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void write_adam(std::ofstream& out, const AdamBuffer& a) {
    write_pod<uint64_t>(out, a.m.size());
    write_doubles(out, a.m.data(), a.m.size());
    write_doubles(out, a.v.data(), a.v.size());
}
AdamBuffer read_adam(std::ifstream& in) {
    AdamBuffer a;
    const uint64_t n = read_pod<uint64_t>(in);
    a.m.resize(n);
    a.v.resize(n);
    read_doubles(in, a.m.data(), n);
    read_doubles(in, a.v.data(), n);
    return a;
}

}  // namespace

void checkpoint_save(const std::string& path, const TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint_save: cannot open " + path);
    out.write(kCheckpointMagic, 4);
    write_pod<uint32_t>(out, kCheckpointVersion);

    const OptimConfig& c = state.config;
    write_pod<int32_t>(out, c.n_virtual);
    write_pod<int32_t>(out, c.control_points);
    const double cfgd[12] = {c.lr_pose,    c.lr_position, c.lr_position_final_ratio,
                             c.lr_rotation, c.lr_scale,   c.lr_opacity,
                             c.lr_color,   c.lambda,      c.sgld_noise,
                             c.relocate_opacity_eps, 0.0, 0.0};
    write_doubles(out, cfgd, 12);
    write_pod<int32_t>(out, c.iterations);
    write_pod<uint64_t>(out, c.n_max);
    write_pod<int32_t>(out, c.relocate_every);
    write_pod<uint32_t>(out, static_cast<uint32_t>(c.trajectory));
    write_pod<uint64_t>(out, c.seed);

    write_pod<uint64_t>(out, state.iteration);
    write_pod<uint64_t>(out, state.adam_t);
    write_pod<uint64_t>(out, state.max_count_seen);
    write_pod<uint64_t>(out, state.rng.state());
    write_pod<uint64_t>(out, state.rng.inc());

    write_pod<uint64_t>(out, state.scene.size());
    for (const auto& g : state.scene.gaussians()) {
        const double rec[14] = {g.mu.x(),        g.mu.y(),        g.mu.z(),        g.q[0],     g.q[1],
                                g.q[2],          g.q[3],          g.log_scale.x(), g.log_scale.y(),
                                g.log_scale.z(), g.opacity_logit, g.color.x(),     g.color.y(),
                                g.color.z()};
        write_doubles(out, rec, 14);
    }
    write_adam(out, state.adam_mu);
    write_adam(out, state.adam_q);
    write_adam(out, state.adam_log_scale);
    write_adam(out, state.adam_opacity);
    write_adam(out, state.adam_color);

    write_pod<uint64_t>(out, state.trajectories.size());
    for (std::size_t v = 0; v < state.trajectories.size(); ++v) {
        const Trajectory& traj = state.trajectories[v];
        write_pod<uint32_t>(out, static_cast<uint32_t>(traj.kind()));
        write_pod<uint64_t>(out, static_cast<uint64_t>(traj.control_count()));
        write_pod<double>(out, traj.exposure());
        for (const SE3Pose& T : traj.control_points()) {
            // full rotation matrix: resumed runs must replay bitwise
            double rec[12];
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) rec[3 * r + cc] = T.rotation(r, cc);
            rec[9] = T.translation.x();
            rec[10] = T.translation.y();
            rec[11] = T.translation.z();
            write_doubles(out, rec, 12);
        }
        write_pod<uint64_t>(out, state.pose_opt[v].step_count);
        write_adam(out, state.pose_opt[v].adam);
    }
    if (!out) throw std::runtime_error("checkpoint_save: write failed on " + path);
}

TrainState checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint_load: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw std::runtime_error("checkpoint_load: not a GMSK checkpoint: " + path);
    const uint32_t version = read_pod<uint32_t>(in);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint_load: unsupported version " + std::to_string(version));

    TrainState state;
    OptimConfig& c = state.config;
    c.n_virtual = read_pod<int32_t>(in);
    c.control_points = read_pod<int32_t>(in);
    double cfgd[12];
    read_doubles(in, cfgd, 12);
    c.lr_pose = cfgd[0];
    c.lr_position = cfgd[1];
    c.lr_position_final_ratio = cfgd[2];
    c.lr_rotation = cfgd[3];
    c.lr_scale = cfgd[4];
    c.lr_opacity = cfgd[5];
    c.lr_color = cfgd[6];
    c.lambda = cfgd[7];
    c.sgld_noise = cfgd[8];
    c.relocate_opacity_eps = cfgd[9];
    c.iterations = read_pod<int32_t>(in);
    c.n_max = read_pod<uint64_t>(in);
    c.relocate_every = read_pod<int32_t>(in);
    c.trajectory = static_cast<TrajectoryKind>(read_pod<uint32_t>(in));
    c.seed = read_pod<uint64_t>(in);

    state.iteration = read_pod<uint64_t>(in);
    state.adam_t = read_pod<uint64_t>(in);
    state.max_count_seen = read_pod<uint64_t>(in);
    const uint64_t rng_state = read_pod<uint64_t>(in);
    const uint64_t rng_inc = read_pod<uint64_t>(in);
    state.rng.restore(rng_state, rng_inc);

    const uint64_t count = read_pod<uint64_t>(in);
    state.scene = SceneModel(c.n_max);
    for (uint64_t i = 0; i < count; ++i) {
        double rec[14];
        read_doubles(in, rec, 14);
        Gaussian3D g;
        g.mu = Eigen::Vector3d(rec[0], rec[1], rec[2]);
        g.q = Eigen::Vector4d(rec[3], rec[4], rec[5], rec[6]);
        g.log_scale = Eigen::Vector3d(rec[7], rec[8], rec[9]);
        g.opacity_logit = rec[10];
        g.color = Eigen::Vector3d(rec[11], rec[12], rec[13]);
        state.scene.add(g);
    }
    state.adam_mu = read_adam(in);
    state.adam_q = read_adam(in);
    state.adam_log_scale = read_adam(in);
    state.adam_opacity = read_adam(in);
    state.adam_color = read_adam(in);

    const uint64_t n_views = read_pod<uint64_t>(in);
    state.trajectories.reserve(n_views);
    state.pose_opt.resize(n_views);
    for (uint64_t v = 0; v < n_views; ++v) {
        const auto kind = static_cast<TrajectoryKind>(read_pod<uint32_t>(in));
        const uint64_t n_ctrl = read_pod<uint64_t>(in);
        const double exposure = read_pod<double>(in);
        std::vector<SE3Pose> ctrl;
        ctrl.reserve(n_ctrl);
        for (uint64_t j = 0; j < n_ctrl; ++j) {
            double rec[12];
            read_doubles(in, rec, 12);
            Eigen::Matrix3d R;
            for (int r = 0; r < 3; ++r)
                for (int cc = 0; cc < 3; ++cc) R(r, cc) = rec[3 * r + cc];
            ctrl.emplace_back(R, Eigen::Vector3d(rec[9], rec[10], rec[11]));
        }
        state.trajectories.emplace_back(kind, std::move(ctrl), exposure);
        state.pose_opt[v].step_count = read_pod<uint64_t>(in);
        state.pose_opt[v].adam = read_adam(in);
    }
    return state;
}

}  // namespace gems
