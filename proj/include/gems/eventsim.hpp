#pragma once

#include <array>
#include <string>
#include <vector>

#include "gems/image.hpp"
#include "gems/renderer.hpp"
#include "gems/scene.hpp"
#include "gems/trajectory.hpp"

namespace gems {

inline constexpr double kLogFloor = 1e-4;  // radiance floor before log

struct Event {
    int x = 0;
    int y = 0;
    double t = 0.0;
    int polarity = 0;  // +1 or -1
};

struct EventStream {
    std::vector<Event> events;  // nondecreasing timestamps
    double threshold = 0.2;     // log-radiance units
    double t_start = 0.0;
    double t_end = 0.0;

    double exposure() const { return t_end - t_start; }
    // Events with t_start < t <= t_end, shifted so the window starts at 0.
    EventStream slice(double window_start, double window_end) const;
};

struct TimedFrame {
    double timestamp = 0.0;
    ImageBuffer image;
};

// Renders `count` sharp frames at uniform times across the trajectory exposure.
std::vector<TimedFrame> synthesize_burst(const SceneModel& scene, const Trajectory& traj,
                                         const Camera& cam, int count);

// Log-luminance threshold model: per pixel, one event per full threshold
// crossing between consecutive frames, timestamps linearly interpolated in log
// intensity, reference advanced by polarity * threshold per event. Output is
// time sorted (stable per-pixel merge).
EventStream generate_events(const std::vector<TimedFrame>& burst, double threshold);

// Same model run independently on each RGB channel.
std::array<EventStream, 3> generate_events_per_channel(const std::vector<TimedFrame>& burst,
                                                       double threshold);

// Bin k (1-based) holds events with t_{k-1} < t <= t_k, t_k = t_start + (k/b) t_exp.
std::vector<std::vector<Event>> bin_events(const EventStream& stream, int bins);

// Plain text, one "t x y p" line per event, ascending t.
void save_events(const std::string& path, const EventStream& stream);
EventStream load_events(const std::string& path, double threshold, double t_start, double t_end);

}  // namespace gems
