#pragma once

#include <string>
#include <vector>

#include "gems/eventsim.hpp"
#include "gems/image.hpp"

namespace gems {

struct EdiConfig {
    double threshold = 0.2;   // must match the stream's theta for exact recovery
    int bins = 13;
    double latent_time = 0.5;  // normalized position in the exposure

    void validate() const;
};

// Event-based double integral: recovers the latent sharp image at
// latent_time from one blurred frame plus its in-exposure events.
//
// Per pixel, with N(t) the signed event count between the latent time and t,
// the relative exposure E(t) = exp(theta N(t)) is sampled once per bin (at the
// bin midpoint, piecewise constant between bin edges) and
//   L = B * bins / sum_k E_k.
// Events are luminance based; chroma is transferred from the blurred frame by
// ratio scaling. Output clamped to [0, 1].
ImageBuffer edi_deblur(const ImageBuffer& blur, const EventStream& stream, const EdiConfig& cfg);

// Per-channel variant for per-channel event streams.
ImageBuffer edi_deblur_per_channel(const ImageBuffer& blur, const std::array<EventStream, 3>& streams,
                                   const EdiConfig& cfg);

// Deblurred views are initialization data only; the optimizer's supervision
// API does not accept this type.
struct InitOnlyImage {
    ImageBuffer image;
    bool supervision_ok = false;  // always false for EDI outputs
    bool degraded = false;        // set when the view had no events (passthrough)
    std::string note;
};

// Batch EDI over views; per-view failures are recorded and the batch continues.
std::vector<InitOnlyImage> edi_init_views(const std::vector<ImageBuffer>& blurred,
                                          const std::vector<EventStream>& streams,
                                          const EdiConfig& cfg);

}  // namespace gems
