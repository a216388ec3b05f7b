#include "gems/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace gems {

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const double* window_kernel() {
    static double k[kWin] = {0};
    static bool init = false;
    if (!init) {
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - (kWin - 1) / 2.0;
            k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += k[i];
        }
        for (int i = 0; i < kWin; ++i) k[i] /= sum;
        init = true;
    }
    return k;
}

struct Grid {
    int w = 0, h = 0;
    std::vector<double> v;
    Grid() = default;
    Grid(int w_, int h_) : w(w_), h(h_), v(static_cast<std::size_t>(w_) * h_, 0.0) {}
    double& at(int x, int y) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Valid-mode separable window correlation: out(i,j) = sum_k k(u)k(v) in(i+u, j+v).
Grid filter_valid(const Grid& in) {
    const double* k = window_kernel();
    Grid tmp(in.w - kWin + 1, in.h);
    for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < tmp.w; ++x) {
            double s = 0.0;
            for (int u = 0; u < kWin; ++u) s += k[u] * in.at(x + u, y);
            tmp.at(x, y) = s;
        }
    Grid out(tmp.w, in.h - kWin + 1);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double s = 0.0;
            for (int v = 0; v < kWin; ++v) s += k[v] * tmp.at(x, y + v);
            out.at(x, y) = s;
        }
    return out;
}

// Adjoint of filter_valid: scatters a valid-grid map back onto the full grid.
Grid scatter_full(const Grid& valid, int w, int h) {
    const double* k = window_kernel();
    Grid tmp(valid.w, h);
    for (int x = 0; x < valid.w; ++x)
        for (int py = 0; py < h; ++py) {
            double s = 0.0;
            const int j0 = std::max(0, py - kWin + 1);
            const int j1 = std::min(valid.h - 1, py);
            for (int j = j0; j <= j1; ++j) s += k[py - j] * valid.at(x, j);
            tmp.at(x, py) = s;
        }
    Grid out(w, h);
    for (int py = 0; py < h; ++py)
        for (int px = 0; px < w; ++px) {
            double s = 0.0;
            const int i0 = std::max(0, px - kWin + 1);
            const int i1 = std::min(valid.w - 1, px);
            for (int i = i0; i <= i1; ++i) s += k[px - i] * tmp.at(i, py);
            out.at(px, py) = s;
        }
    return out;
}

Grid channel_grid(const ImageBuffer& img, int c) {
    Grid g(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) g.at(x, y) = img.at(x, y, c);
    return g;
}

Grid product_grid(const Grid& a, const Grid& b) {
    Grid g(a.w, a.h);
    for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] = a.v[i] * b.v[i];
    return g;
}

void require_windowable(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    if (a.width() < kWin || a.height() < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
    double mse = 0.0;
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        mse += d * d;
    }
    mse /= static_cast<double>(av.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    require_windowable(a, b);
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Grid x = channel_grid(a, c);
        const Grid y = channel_grid(b, c);
        const Grid mu_x = filter_valid(x);
        const Grid mu_y = filter_valid(y);
        const Grid e_xx = filter_valid(product_grid(x, x));
        const Grid e_yy = filter_valid(product_grid(y, y));
        const Grid e_xy = filter_valid(product_grid(x, y));
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_x.v.size(); ++i) {
            const double mx = mu_x.v[i], my = mu_y.v[i];
            const double sxx = e_xx.v[i] - mx * mx;
            const double syy = e_yy.v[i] - my * my;
            const double sxy = e_xy.v[i] - mx * my;
            const double a1 = 2.0 * mx * my + kC1;
            const double a2 = 2.0 * sxy + kC2;
            const double b1 = mx * mx + my * my + kC1;
            const double b2 = sxx + syy + kC2;
            sum += (a1 * a2) / (b1 * b2);
        }
        total += sum / static_cast<double>(mu_x.v.size());
    }
    return total / 3.0;
}

double ssim_with_gradient(const ImageBuffer& pred, const ImageBuffer& target, ImageBuffer& grad,
                          double weight) {
    require_windowable(pred, target);
    if (!grad.same_shape(pred)) throw std::invalid_argument("ssim_with_gradient: grad shape mismatch");

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Grid x = channel_grid(pred, c);
        const Grid y = channel_grid(target, c);
        const Grid mu_x = filter_valid(x);
        const Grid mu_y = filter_valid(y);
        const Grid e_xx = filter_valid(product_grid(x, x));
        const Grid e_yy = filter_valid(product_grid(y, y));
        const Grid e_xy = filter_valid(product_grid(x, y));

        const std::size_t n_windows = mu_x.v.size();
        // per-window gradient decomposes as w_k (c0 + c1 x_k + c2 y_k)
        Grid c0(mu_x.w, mu_x.h), c1(mu_x.w, mu_x.h), c2(mu_x.w, mu_x.h);
        const double gw = weight / (3.0 * static_cast<double>(n_windows));
        double sum = 0.0;
        for (std::size_t i = 0; i < n_windows; ++i) {
            const double mx = mu_x.v[i], my = mu_y.v[i];
            const double sxx = e_xx.v[i] - mx * mx;
            const double syy = e_yy.v[i] - my * my;
            const double sxy = e_xy.v[i] - mx * my;
            const double a1 = 2.0 * mx * my + kC1;
            const double a2 = 2.0 * sxy + kC2;
            const double b1 = mx * mx + my * my + kC1;
            const double b2 = sxx + syy + kC2;
            const double s = (a1 * a2) / (b1 * b2);
            sum += s;
            c0.v[i] = gw * (2.0 * my * (a2 - a1) / (b1 * b2) + 2.0 * s * mx * (1.0 / b2 - 1.0 / b1));
            c1.v[i] = gw * (-2.0 * s / b2);
            c2.v[i] = gw * (2.0 * a1 / (b1 * b2));
        }
        total += sum / static_cast<double>(n_windows);

        const Grid s0 = scatter_full(c0, pred.width(), pred.height());
        const Grid s1 = scatter_full(c1, pred.width(), pred.height());
        const Grid s2 = scatter_full(c2, pred.width(), pred.height());
        for (int py = 0; py < pred.height(); ++py)
            for (int px = 0; px < pred.width(); ++px)
                grad.at(px, py, c) +=
                    s0.at(px, py) + s1.at(px, py) * x.at(px, py) + s2.at(px, py) * y.at(px, py);
    }
    return total / 3.0;
}

ApeStats ape(const std::vector<SE3Pose>& estimate, const std::vector<SE3Pose>& ground_truth,
             bool align) {
    if (estimate.size() != ground_truth.size())
        throw std::invalid_argument("ape: trajectory length mismatch");
    if (estimate.empty()) throw std::invalid_argument("ape: empty trajectories");
    const std::size_t n = estimate.size();

    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    if (align && n >= 2) {
        // Umeyama without scale: argmin sum |gt - (R est + t)|^2
        Eigen::Vector3d mean_e = Eigen::Vector3d::Zero(), mean_g = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            mean_e += estimate[i].translation;
            mean_g += ground_truth[i].translation;
        }
        mean_e /= static_cast<double>(n);
        mean_g /= static_cast<double>(n);
        Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
        for (std::size_t i = 0; i < n; ++i)
            H += (estimate[i].translation - mean_e) * (ground_truth[i].translation - mean_g).transpose();
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
        if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
        R = svd.matrixV() * D * svd.matrixU().transpose();
        t = mean_g - R * mean_e;
    }

    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i)
        err[i] = (ground_truth[i].translation - (R * estimate[i].translation + t)).norm();

    ApeStats st;
    st.count = n;
    double sq = 0.0, sum = 0.0;
    for (double e : err) {
        sq += e * e;
        sum += e;
        st.max = std::max(st.max, e);
    }
    st.rmse = std::sqrt(sq / static_cast<double>(n));
    st.mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double e : err) var += (e - st.mean) * (e - st.mean);
    st.std_dev = std::sqrt(var / static_cast<double>(n));
    std::vector<double> sorted = err;
    std::sort(sorted.begin(), sorted.end());
    st.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return st;
}

void EvalReport::add_view(const std::string& name, double psnr_db, double ssim_value) {
    view_names.push_back(name);
    view_psnr.push_back(psnr_db);
    view_ssim.push_back(ssim_value);
}

namespace {
double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}
}  // namespace

void EvalReport::finalize() {
    if (view_psnr.empty()) return;
    mean_psnr = std::accumulate(view_psnr.begin(), view_psnr.end(), 0.0) / view_psnr.size();
    mean_ssim = std::accumulate(view_ssim.begin(), view_ssim.end(), 0.0) / view_ssim.size();
    median_psnr = median_of(view_psnr);
    median_ssim = median_of(view_ssim);
}

std::string EvalReport::to_text() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-16s %10s %10s\n", "view", "psnr_db", "ssim");
    out += buf;
    for (std::size_t i = 0; i < view_names.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%-16s %10.4f %10.6f\n", view_names[i].c_str(), view_psnr[i],
                      view_ssim[i]);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-16s %10.4f %10.6f\n", "mean", mean_psnr, mean_ssim);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-16s %10.4f %10.6f\n", "median", median_psnr, median_ssim);
    out += buf;
    if (has_ape) {
        auto row = [&](const char* name, const ApeStats& s) {
            std::snprintf(buf, sizeof(buf), "%-16s rmse %.6f mean %.6f median %.6f std %.6f max %.6f\n",
                          name, s.rmse, s.mean, s.median, s.std_dev, s.max);
            out += buf;
        };
        row("ape_raw", ape_raw);
        row("ape_aligned", ape_aligned);
    }
    return out;
}

std::string EvalReport::to_csv() const {
    std::string out = "view,psnr_db,ssim\n";
    char buf[256];
    for (std::size_t i = 0; i < view_names.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g\n", view_names[i].c_str(), view_psnr[i],
                      view_ssim[i]);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "mean,%.10g,%.10g\nmedian,%.10g,%.10g\n", mean_psnr, mean_ssim,
                  median_psnr, median_ssim);
    out += buf;
    if (has_ape) {
        out += "ape,rmse,mean,median,std,max\n";
        std::snprintf(buf, sizeof(buf), "raw,%.10g,%.10g,%.10g,%.10g,%.10g\n", ape_raw.rmse,
                      ape_raw.mean, ape_raw.median, ape_raw.std_dev, ape_raw.max);
        out += buf;
        std::snprintf(buf, sizeof(buf), "aligned,%.10g,%.10g,%.10g,%.10g,%.10g\n", ape_aligned.rmse,
                      ape_aligned.mean, ape_aligned.median, ape_aligned.std_dev, ape_aligned.max);
        out += buf;
    }
    return out;
}

void EvalReport::save(const std::string& path_base) const {
    std::ofstream txt(path_base + ".txt");
    if (!txt) throw std::runtime_error("EvalReport: cannot write " + path_base + ".txt");
    txt << to_text();
    std::ofstream csv(path_base + ".csv");
    if (!csv) throw std::runtime_error("EvalReport: cannot write " + path_base + ".csv");
    csv << to_csv();
}

}  // namespace gems
