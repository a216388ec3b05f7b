#pragma once

#include <string>
#include <vector>

#include "gems/image.hpp"
#include "gems/trajectory.hpp"

namespace gems {

// 10 log10(1 / MSE) over all elements, capped at 99 dB for identical images.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Mean SSIM over valid 11x11 window positions (Gaussian window sigma = 1.5,
// C1 = 0.01^2, C2 = 0.03^2), averaged over the three channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// SSIM value plus d(mean SSIM)/d(pred), accumulated into grad scaled by
// weight. grad must be pred-shaped (zero it first if it is the only term).
double ssim_with_gradient(const ImageBuffer& pred, const ImageBuffer& target, ImageBuffer& grad,
                          double weight);

struct ApeStats {
    double rmse = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;
    double max = 0.0;
    std::size_t count = 0;
};

// Translation APE between matched trajectories; when align is set an SE(3)
// Umeyama fit (rotation + translation, no scale) is removed first.
ApeStats ape(const std::vector<SE3Pose>& estimate, const std::vector<SE3Pose>& ground_truth,
             bool align);

struct EvalReport {
    std::vector<std::string> view_names;
    std::vector<double> view_psnr;
    std::vector<double> view_ssim;
    double mean_psnr = 0.0;
    double median_psnr = 0.0;
    double mean_ssim = 0.0;
    double median_ssim = 0.0;
    bool has_ape = false;
    ApeStats ape_aligned;
    ApeStats ape_raw;

    void add_view(const std::string& name, double psnr_db, double ssim_value);
    void finalize();

    std::string to_text() const;  // aligned columns
    std::string to_csv() const;
    void save(const std::string& path_base) const;  // writes .txt and .csv
};

}  // namespace gems
