#include <doctest.h>

#include <cmath>

#include "gems/dataset.hpp"
#include "gems/edi.hpp"
#include "gems/metrics.hpp"
#include "gems/renderer.hpp"
#include "gems/rng.hpp"

using namespace gems;

namespace {

// small rendered scene with exposure motion, the self-consistency workhorse
struct EdiFixture {
    SceneModel scene;
    Camera cam;
    Trajectory traj;
    std::vector<TimedFrame> burst;
    ImageBuffer blur;

    EdiFixture(uint64_t seed, double motion_scale, int frames = 11, int size = 32)
        : scene(0), cam(size * 1.1, size * 1.1, size / 2.0, size / 2.0, size, size),
          traj(Trajectory::constant(TrajectoryKind::Bezier, SE3Pose::identity(), 2, 1.0)) {
        ToySceneSpec spec;
        spec.seed = seed;
        spec.n_gaussians = 60;
        spec.bound = 1.0;
        scene = make_toy_scene(spec);

        const SE3Pose anchor = orbit_pose(0.1, 4.0, 0.8);
        Pcg32 rng(seed + 1);
        std::vector<SE3Pose> ctrl;
        for (int j = 0; j < 4; ++j) {
            const Twist xi(motion_scale * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()),
                           0.3 * motion_scale *
                               Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()));
            ctrl.push_back(se3_exp(xi.scaled(j)) * anchor);
        }
        traj = Trajectory::bezier(ctrl, 1.0);
        burst = synthesize_burst(scene, traj, cam, frames);
        std::vector<ImageBuffer> frames_only;
        for (const auto& f : burst) frames_only.push_back(f.image);
        blur = average_frames(frames_only);
    }
};

}  // namespace

TEST_CASE("edi with an empty stream is the identity") {
    ImageBuffer blur(12, 10);
    Pcg32 rng(201);
    for (double& v : blur.data()) v = rng.uniform(0.0, 0.9);
    EventStream stream;
    stream.t_start = 0.0;
    stream.t_end = 1.0;
    stream.threshold = 0.2;
    EdiConfig cfg;
    const ImageBuffer out = edi_deblur(blur, stream, cfg);
    CHECK(out.data() == blur.data());
}

TEST_CASE("edi is linear in the blurred image") {
    EdiFixture fx(7, 0.04);
    const EventStream stream = generate_events(fx.burst, 0.05);
    EdiConfig cfg;
    cfg.threshold = 0.05;

    const ImageBuffer a = edi_deblur(fx.blur, stream, cfg);
    ImageBuffer half = fx.blur;
    for (double& v : half.data()) v *= 0.5;
    const ImageBuffer b = edi_deblur(half, stream, cfg);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(b.data()[i] - 0.5 * a.data()[i]) < 1e-12);
}

TEST_CASE("edi monotonicity: only positive events after the latent time") {
    ImageBuffer blur(4, 4, 0.5);
    EventStream stream;
    stream.t_start = 0.0;
    stream.t_end = 1.0;
    stream.threshold = 0.2;
    stream.events = {{1, 1, 0.7, 1}, {1, 1, 0.8, 1}, {1, 1, 0.9, 1}};
    EdiConfig cfg;
    const ImageBuffer out = edi_deblur(blur, stream, cfg);
    CHECK(out.at(1, 1, 0) < blur.at(1, 1, 0));
    CHECK(out.at(0, 0, 0) == blur.at(0, 0, 0));
}

TEST_CASE("edi input validation") {
    ImageBuffer blur(4, 4, 0.5);
    EventStream stream;
    stream.t_start = 0.0;
    stream.t_end = 1.0;
    EdiConfig cfg;
    cfg.threshold = -1.0;
    CHECK_THROWS_AS(edi_deblur(blur, stream, cfg), std::invalid_argument);
    cfg.threshold = 0.2;
    cfg.bins = 1;
    CHECK_THROWS_AS(edi_deblur(blur, stream, cfg), std::invalid_argument);
    cfg.bins = 13;
    stream.events = {{0, 0, 1.5, 1}};  // outside the window
    CHECK_THROWS_AS(edi_deblur(blur, stream, cfg), std::invalid_argument);
    stream.events = {{9, 0, 0.5, 1}};  // outside the image
    CHECK_THROWS_AS(edi_deblur(blur, stream, cfg), std::invalid_argument);
}

TEST_CASE("edi self-consistency on a rendered burst") {
    // blur = burst mean, events from the same burst with a known threshold:
    // the mid-exposure latent should recover the middle sharp frame.
    // Per-channel events isolate the double-integral math from the chroma
    // transfer; luminance events cap the fidelity when colored blobs cross.
    const double theta = 0.02;
    EdiFixture fx(11, 0.035);
    const auto streams = generate_events_per_channel(fx.burst, theta);
    REQUIRE(!streams[0].events.empty());

    EdiConfig cfg;
    cfg.threshold = theta;
    cfg.bins = 13;
    cfg.latent_time = 0.5;
    const ImageBuffer latent = edi_deblur_per_channel(fx.blur, streams, cfg);

    const ImageBuffer& middle = fx.burst[fx.burst.size() / 2].image;
    const double edi_psnr = psnr(latent, middle);
    const double blur_psnr = psnr(fx.blur, middle);
    CHECK(edi_psnr > 40.0);
    CHECK(edi_psnr > blur_psnr + 10.0);

    // luminance mode still improves sharply over the blurred input
    const EventStream lum = generate_events(fx.burst, theta);
    const ImageBuffer latent_lum = edi_deblur(fx.blur, lum, cfg);
    CHECK(psnr(latent_lum, middle) > blur_psnr + 5.0);
}

TEST_CASE("edi_init_views contract") {
    EdiFixture fx(13, 0.05);
    const double theta = 0.05;
    const EventStream stream = generate_events(fx.burst, theta);
    EdiConfig cfg;
    cfg.threshold = theta;

    std::vector<ImageBuffer> blurred(12, fx.blur);
    std::vector<EventStream> streams(12, stream);
    streams[3].events.clear();  // one degraded view

    const auto out = edi_init_views(blurred, streams, cfg);
    REQUIRE(out.size() == 12);
    for (const auto& r : out) CHECK(!r.supervision_ok);
    CHECK(out[3].degraded);
    CHECK(out[3].image.data() == fx.blur.data());
    for (std::size_t v = 0; v < out.size(); ++v)
        if (v != 3) CHECK(!out[v].degraded);

    CHECK_THROWS_AS(edi_init_views(blurred, std::vector<EventStream>(3), cfg),
                    std::invalid_argument);
}

TEST_CASE("edi improves a 12-view synthetic set by at least 5 dB") {
    const double theta = 0.05;
    EdiConfig cfg;
    cfg.threshold = theta;

    double blur_psnr_sum = 0.0;
    double edi_psnr_sum = 0.0;
    for (int v = 0; v < 12; ++v) {
        EdiFixture fx(100 + v, 0.09);
        const EventStream stream = generate_events(fx.burst, theta);
        const ImageBuffer latent = edi_deblur(fx.blur, stream, cfg);
        const ImageBuffer& middle = fx.burst[fx.burst.size() / 2].image;
        blur_psnr_sum += psnr(fx.blur, middle);
        edi_psnr_sum += psnr(latent, middle);
    }
    CHECK(edi_psnr_sum / 12.0 >= blur_psnr_sum / 12.0 + 5.0);
}

TEST_CASE("per-channel edi runs on per-channel streams") {
    EdiFixture fx(17, 0.05);
    const double theta = 0.05;
    const auto streams = generate_events_per_channel(fx.burst, theta);
    EdiConfig cfg;
    cfg.threshold = theta;
    const ImageBuffer out = edi_deblur_per_channel(fx.blur, streams, cfg);
    CHECK(out.all_finite());
    const ImageBuffer& middle = fx.burst[fx.burst.size() / 2].image;
    CHECK(psnr(out, middle) > psnr(fx.blur, middle));
}
