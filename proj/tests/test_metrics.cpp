#include <doctest.h>

#include <cmath>

#include "gems/metrics.hpp"
#include "gems/rng.hpp"

using namespace gems;

namespace {

ImageBuffer random_image(int w, int h, Pcg32& rng) {
    ImageBuffer img(w, h);
    for (double& v : img.data()) v = rng.uniform();
    return img;
}

// independently coded SSIM: direct per-window double loop, no separable
// filtering, used as the second-implementation oracle
double reference_ssim(const ImageBuffer& a, const ImageBuffer& b) {
    const int win = 11;
    double kernel[11];
    double ksum = 0.0;
    for (int i = 0; i < win; ++i) {
        const double d = i - 5.0;
        kernel[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        ksum += kernel[i];
    }
    for (int i = 0; i < win; ++i) kernel[i] /= ksum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        int count = 0;
        for (int wy = 0; wy + win <= a.height(); ++wy) {
            for (int wx = 0; wx + win <= a.width(); ++wx) {
                double mx = 0, my = 0, exx = 0, eyy = 0, exy = 0;
                for (int v = 0; v < win; ++v)
                    for (int u = 0; u < win; ++u) {
                        const double w = kernel[u] * kernel[v];
                        const double x = a.at(wx + u, wy + v, c);
                        const double y = b.at(wx + u, wy + v, c);
                        mx += w * x;
                        my += w * y;
                        exx += w * x * x;
                        eyy += w * y * y;
                        exy += w * x * y;
                    }
                const double sxx = exx - mx * mx, syy = eyy - my * my, sxy = exy - mx * my;
                sum += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                       ((mx * mx + my * my + c1) * (sxx + syy + c2));
                ++count;
            }
        }
        total += sum / count;
    }
    return total / 3.0;
}

}  // namespace

TEST_CASE("psnr basics") {
    Pcg32 rng(91);
    const ImageBuffer a = random_image(16, 16, rng);
    CHECK(psnr(a, a) == doctest::Approx(99.0));

    ImageBuffer b = a;
    for (double& v : b.data()) v += 0.1;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));

    // monotone in MSE
    ImageBuffer c = a;
    for (double& v : c.data()) v += 0.2;
    CHECK(psnr(a, c) < psnr(a, b));

    CHECK_THROWS_AS(psnr(a, ImageBuffer(8, 8)), std::invalid_argument);
}

TEST_CASE("ssim identity, symmetry, and the reference oracle") {
    Pcg32 rng(97);
    const ImageBuffer a = random_image(24, 18, rng);
    const ImageBuffer b = random_image(24, 18, rng);

    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);
    CHECK(std::abs(ssim(a, b) - reference_ssim(a, b)) < 1e-6);

    ImageBuffer tiny(8, 8);
    CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("ssim gradient matches finite differences") {
    Pcg32 rng(101);
    const ImageBuffer pred = random_image(16, 16, rng);
    const ImageBuffer target = random_image(16, 16, rng);

    ImageBuffer grad(16, 16);
    ssim_with_gradient(pred, target, grad, 1.0);

    const double h = 1e-6;
    Pcg32 pick(3);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t i = pick.next_below(static_cast<uint32_t>(pred.size()));
        ImageBuffer plus = pred, minus = pred;
        plus.data()[i] += h;
        minus.data()[i] -= h;
        const double fd = (ssim(plus, target) - ssim(minus, target)) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(grad.data()[i]), 1e-6});
        CHECK(std::abs(grad.data()[i] - fd) / scale < 1e-3);
    }
}

TEST_CASE("ape trivial, shift, and alignment cases") {
    Pcg32 rng(103);
    std::vector<SE3Pose> gt;
    for (int i = 0; i < 12; ++i) {
        const Twist xi(Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()),
                       0.3 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()));
        gt.push_back(se3_exp(xi));
    }

    const ApeStats zero = ape(gt, gt, false);
    CHECK(zero.rmse == doctest::Approx(0.0));
    CHECK(zero.max == doctest::Approx(0.0));

    std::vector<SE3Pose> shifted = gt;
    for (auto& T : shifted) T.translation += Eigen::Vector3d(1, 0, 0);
    const ApeStats raw = ape(shifted, gt, false);
    CHECK(raw.rmse == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(raw.mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(raw.median == doctest::Approx(1.0).epsilon(1e-12));

    const ApeStats aligned = ape(shifted, gt, true);
    CHECK(aligned.rmse < 1e-9);

    CHECK_THROWS_AS(ape(gt, std::vector<SE3Pose>(gt.begin(), gt.begin() + 3), false),
                    std::invalid_argument);
}

TEST_CASE("ape is invariant under a common rigid transform") {
    Pcg32 rng(107);
    std::vector<SE3Pose> gt, est;
    for (int i = 0; i < 10; ++i) {
        const Twist xi(Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()),
                       0.2 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian()));
        gt.push_back(se3_exp(xi));
        SE3Pose noisy = gt.back();
        noisy.translation += 0.05 * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
        est.push_back(noisy);
    }
    const SE3Pose rigid = se3_exp(Twist(Eigen::Vector3d(0.4, -0.2, 0.9), Eigen::Vector3d(0.3, 0.1, -0.2)));
    std::vector<SE3Pose> gt2, est2;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        gt2.push_back(rigid * gt[i]);
        est2.push_back(rigid * est[i]);
    }
    for (bool align : {false, true})
        CHECK(std::abs(ape(est, gt, align).rmse - ape(est2, gt2, align).rmse) < 1e-9);
}

TEST_CASE("eval report emits text and csv") {
    EvalReport report;
    report.add_view("a", 30.0, 0.9);
    report.add_view("b", 34.0, 0.95);
    report.finalize();
    CHECK(report.mean_psnr == doctest::Approx(32.0));
    CHECK(report.median_ssim == doctest::Approx(0.925));
    const std::string text = report.to_text();
    CHECK(text.find("mean") != std::string::npos);
    const std::string csv = report.to_csv();
    CHECK(csv.find("view,psnr_db,ssim") == 0);
}
