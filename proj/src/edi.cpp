#include "gems/edi.hpp"

#include <cmath>
#include <stdexcept>

namespace gems {

void EdiConfig::validate() const {
    if (!(threshold > 0.0)) throw std::invalid_argument("EdiConfig: threshold must be > 0");
    if (bins < 2) throw std::invalid_argument("EdiConfig: bins must be >= 2");
    if (latent_time < 0.0 || latent_time > 1.0)
        throw std::invalid_argument("EdiConfig: latent_time must be in [0, 1]");
}

namespace {

// Per-pixel scale factor b / sum_k exp(theta * (N(c_k) - N(t_f))) with N the
// signed cumulative event count and c_k the bin midpoints.
std::vector<double> edi_scale_map(int width, int height, const EventStream& stream,
                                  const EdiConfig& cfg) {
    const double t_exp = stream.exposure();
    if (!(t_exp > 0.0)) throw std::invalid_argument("edi: stream window is empty");
    for (const Event& e : stream.events) {
        if (e.t <= stream.t_start || e.t > stream.t_end)
            throw std::invalid_argument("edi: event outside the blur exposure window");
        if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height)
            throw std::invalid_argument("edi: event outside the image");
    }

    const int b = cfg.bins;
    const double t_latent = stream.t_start + cfg.latent_time * t_exp;
    std::vector<double> samples(b);
    for (int k = 0; k < b; ++k) samples[k] = stream.t_start + (k + 0.5) / b * t_exp;

    // bucket events per pixel; the stream is already time sorted
    std::vector<std::vector<std::pair<double, int>>> per_pixel(static_cast<std::size_t>(width) *
                                                               height);
    for (const Event& e : stream.events)
        per_pixel[static_cast<std::size_t>(e.y) * width + e.x].emplace_back(e.t, e.polarity);

    std::vector<double> scale(per_pixel.size(), 1.0);
    for (std::size_t px = 0; px < per_pixel.size(); ++px) {
        const auto& evs = per_pixel[px];
        if (evs.empty()) continue;  // all E_k = 1, scale stays 1
        auto cum_at = [&](double t) {
            int c = 0;
            for (const auto& [ts, p] : evs) {
                if (ts > t) break;
                c += p;
            }
            return c;
        };
        const int c_latent = cum_at(t_latent);
        double denom = 0.0;
        for (int k = 0; k < b; ++k)
            denom += std::exp(cfg.threshold * (cum_at(samples[k]) - c_latent));
        scale[px] = static_cast<double>(b) / denom;
    }
    return scale;
}

}  // namespace

ImageBuffer edi_deblur(const ImageBuffer& blur, const EventStream& stream, const EdiConfig& cfg) {
    cfg.validate();
    const std::vector<double> scale = edi_scale_map(blur.width(), blur.height(), stream, cfg);
    ImageBuffer out(blur.width(), blur.height());
    for (int y = 0; y < blur.height(); ++y)
        for (int x = 0; x < blur.width(); ++x) {
            const double s = scale[static_cast<std::size_t>(y) * blur.width() + x];
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = std::min(1.0, std::max(0.0, blur.at(x, y, c) * s));
        }
    return out;
}

ImageBuffer edi_deblur_per_channel(const ImageBuffer& blur, const std::array<EventStream, 3>& streams,
                                   const EdiConfig& cfg) {
    cfg.validate();
    ImageBuffer out(blur.width(), blur.height());
    for (int c = 0; c < 3; ++c) {
        const std::vector<double> scale = edi_scale_map(blur.width(), blur.height(), streams[c], cfg);
        for (int y = 0; y < blur.height(); ++y)
            for (int x = 0; x < blur.width(); ++x) {
                const double s = scale[static_cast<std::size_t>(y) * blur.width() + x];
                out.at(x, y, c) = std::min(1.0, std::max(0.0, blur.at(x, y, c) * s));
            }
    }
    return out;
}

std::vector<InitOnlyImage> edi_init_views(const std::vector<ImageBuffer>& blurred,
                                          const std::vector<EventStream>& streams,
                                          const EdiConfig& cfg) {
    if (blurred.size() != streams.size())
        throw std::invalid_argument("edi_init_views: one stream per view required");
    std::vector<InitOnlyImage> out;
    out.reserve(blurred.size());
    for (std::size_t v = 0; v < blurred.size(); ++v) {
        InitOnlyImage res;
        if (streams[v].events.empty()) {
            res.image = blurred[v];
            res.degraded = true;
            res.note = "empty event stream, passthrough";
        } else {
            try {
                res.image = edi_deblur(blurred[v], streams[v], cfg);
            } catch (const std::exception& e) {
                res.image = blurred[v];
                res.degraded = true;
                res.note = e.what();
            }
        }
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace gems
