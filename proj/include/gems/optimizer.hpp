#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gems/edi.hpp"
#include "gems/image.hpp"
#include "gems/metrics.hpp"
#include "gems/renderer.hpp"
#include "gems/rng.hpp"
#include "gems/scene.hpp"
#include "gems/trajectory.hpp"

namespace gems {

struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

struct OptimConfig {
    int n_virtual = 15;       // virtual cameras per view
    int control_points = 9;   // M + 1
    double lr_pose = 1e-3;
    double lr_position = 2e-3;
    double lr_position_final_ratio = 0.01;  // exponential decay over the run
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 1e-2;
    int iterations = 7000;
    double lambda = 0.2;  // D-SSIM weight
    double sgld_noise = 0.5;
    std::size_t n_max = 0;  // 0: fixed to the initial gaussian count
    double relocate_opacity_eps = 0.005;
    int relocate_every = 100;  // 0 disables relocation
    TrajectoryKind trajectory = TrajectoryKind::Bezier;
    uint64_t seed = 1;

    void validate() const;
};

// Key = value text file mirroring the OptimConfig field names.
OptimConfig load_config(const std::string& path);
void save_config(const std::string& path, const OptimConfig& cfg);
void apply_config_line(OptimConfig& cfg, const std::string& key, const std::string& value);

// The photometric target is always an observed blurry image. There is no
// conversion from InitOnlyImage: event-deblurred views initialize poses, they
// never supervise.
struct SupervisionTarget {
    ImageBuffer image;
    explicit SupervisionTarget(ImageBuffer img) : image(std::move(img)) {}
    SupervisionTarget(const InitOnlyImage&) = delete;
};

struct ObservedView {
    SupervisionTarget target;
    std::string name;
};

// (1 - lambda) L1 + lambda (1 - SSIM), with the analytic pixel gradient of
// both terms accumulated into grad (grad is overwritten).
double photometric_loss(const ImageBuffer& pred, const ImageBuffer& target, double lambda,
                        ImageBuffer& grad);

struct AdamBuffer {
    std::vector<double> m;
    std::vector<double> v;
    void resize(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

struct PoseOptimizerState {
    AdamBuffer adam;       // 6 per control point
    uint64_t step_count = 0;
};

struct RelocationEvent {
    uint64_t iteration = 0;
    std::size_t relocated = 0;
    double probe_psnr = 99.0;  // render similarity before/after, when probed
};

struct TrainState {
    OptimConfig config;
    SceneModel scene;
    std::vector<Trajectory> trajectories;  // one per training view
    AdamBuffer adam_mu, adam_q, adam_log_scale, adam_opacity, adam_color;
    uint64_t adam_t = 0;
    std::vector<PoseOptimizerState> pose_opt;
    uint64_t iteration = 0;
    Pcg32 rng;
    std::size_t max_count_seen = 0;
    std::vector<RelocationEvent> relocations;  // diagnostics, not checkpointed
};

TrainState init_train_state(SceneModel scene, std::vector<Trajectory> trajectories,
                            const OptimConfig& config);

// One optimization step over the given view batch: blur synthesis, loss,
// analytic backward, moment-based (beta 0.9 / 0.999) updates for all Gaussian
// groups and the batch views' trajectory control points, quaternion
// renormalization, and SGLD noise on positions. Returns the batch loss.
// Throws NumericalFailure if any parameter group turns non-finite.
double train_step(TrainState& state, const std::vector<ObservedView>& views, const Camera& cam,
                  const std::vector<std::size_t>& batch);

struct RelocationResult {
    std::size_t relocated = 0;
};

// Teleports Gaussians with opacity < relocate_opacity_eps onto live ones
// sampled proportionally to opacity; the pair's opacities solve
// 1 - (1 - o_new)^2 = o_old and scales are shared. Optimizer moments of both
// members are reset. Count never changes.
RelocationResult mcmc_relocate(TrainState& state);

// Versioned binary checkpoint (magic "GMSK"). A load restores parameters,
// moments, counters, and the RNG, so a resumed run is bitwise identical to an
// uninterrupted one.
void checkpoint_save(const std::string& path, const TrainState& state);
TrainState checkpoint_load(const std::string& path);

struct TrainLogRow {
    uint64_t iteration = 0;
    double loss = 0.0;
    double blur_psnr = 0.0;  // synthesized blur vs target for the logged view
    std::size_t gaussians = 0;
};

struct RunHooks {
    int log_every = 100;
    std::function<void(const TrainLogRow&)> on_log;
    uint64_t stop_iteration = 0;  // pause before config.iterations (0 = run to the end)
};

// Round-robin training driver with the relocation schedule and per-event
// render-difference probes.
void run_training(TrainState& state, const std::vector<ObservedView>& views, const Camera& cam,
                  const RunHooks& hooks = {});

}  // namespace gems
