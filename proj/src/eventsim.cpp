#include "gems/eventsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gems {

EventStream EventStream::slice(double window_start, double window_end) const {
    EventStream out;
    out.threshold = threshold;
    out.t_start = 0.0;
    out.t_end = window_end - window_start;
    for (const Event& e : events)
        if (e.t > window_start && e.t <= window_end)
            out.events.push_back({e.x, e.y, e.t - window_start, e.polarity});
    return out;
}

std::vector<TimedFrame> synthesize_burst(const SceneModel& scene, const Trajectory& traj,
                                         const Camera& cam, int count) {
    if (count < 1) throw std::invalid_argument("synthesize_burst: count must be >= 1");
    std::vector<TimedFrame> burst;
    burst.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        TimedFrame f;
        f.timestamp = u * traj.exposure();
        f.image = render(scene, traj.pose_at_u(u), cam);
        burst.push_back(std::move(f));
    }
    return burst;
}

namespace {

// Emits the threshold crossings of one pixel between two frames. `ref` is the
// per-pixel reference log intensity, advanced by polarity * theta per event.
// The 1e-12 slack makes an exact k*theta ramp emit exactly k events.
void emit_crossings(int x, int y, double log_prev, double log_cur, double t_prev, double t_cur,
                    double theta, double& ref, std::vector<Event>& out) {
    if (log_cur == log_prev) return;
    const double pol = log_cur > log_prev ? 1.0 : -1.0;
    constexpr double kSlack = 1e-12;
    for (;;) {
        const double cross = ref + pol * theta;
        const bool hit = pol > 0 ? (cross > log_prev && cross <= log_cur + kSlack)
                                 : (cross < log_prev && cross >= log_cur - kSlack);
        if (!hit) break;
        double ts = t_prev + (cross - log_prev) / (log_cur - log_prev) * (t_cur - t_prev);
        ts = std::min(std::max(ts, t_prev), t_cur);
        out.push_back({x, y, ts, pol > 0 ? 1 : -1});
        ref = cross;
    }
}

EventStream generate_events_impl(const std::vector<TimedFrame>& burst, double theta,
                                 int channel /* -1 = luminance */) {
    if (!(theta > 0.0)) throw std::invalid_argument("generate_events: threshold must be > 0");
    if (burst.empty()) throw std::invalid_argument("generate_events: empty burst");
    for (std::size_t i = 1; i < burst.size(); ++i) {
        if (!(burst[i].timestamp > burst[i - 1].timestamp))
            throw std::invalid_argument("generate_events: non-monotonic timestamps");
        if (!burst[i].image.same_shape(burst[0].image))
            throw std::invalid_argument("generate_events: frame shape mismatch");
    }

    const int w = burst[0].image.width();
    const int h = burst[0].image.height();
    auto log_value = [&](const ImageBuffer& img, int x, int y) {
        double v = channel < 0 ? luminance(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2))
                               : img.at(x, y, channel);
        return std::log(std::max(v, kLogFloor));
    };

    EventStream stream;
    stream.threshold = theta;
    stream.t_start = burst.front().timestamp;
    stream.t_end = burst.back().timestamp;

    // per pixel, then one stable sort by time: deterministic
    std::vector<Event> all;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double ref = log_value(burst[0].image, x, y);
            double prev = ref;
            for (std::size_t m = 1; m < burst.size(); ++m) {
                const double cur = log_value(burst[m].image, x, y);
                emit_crossings(x, y, prev, cur, burst[m - 1].timestamp, burst[m].timestamp, theta,
                               ref, all);
                prev = cur;
            }
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    stream.events = std::move(all);
    return stream;
}

}  // namespace

EventStream generate_events(const std::vector<TimedFrame>& burst, double threshold) {
    return generate_events_impl(burst, threshold, -1);
}

std::array<EventStream, 3> generate_events_per_channel(const std::vector<TimedFrame>& burst,
                                                       double threshold) {
    return {generate_events_impl(burst, threshold, 0), generate_events_impl(burst, threshold, 1),
            generate_events_impl(burst, threshold, 2)};
}

std::vector<std::vector<Event>> bin_events(const EventStream& stream, int bins) {
    if (bins < 1) throw std::invalid_argument("bin_events: bins must be >= 1");
    std::vector<std::vector<Event>> out(bins);
    const double t_exp = stream.exposure();
    if (!(t_exp > 0.0)) {
        if (!stream.events.empty()) throw std::invalid_argument("bin_events: empty window with events");
        return out;
    }
    // edges computed once so the closed-right boundary rule is exact
    std::vector<double> edges(bins + 1);
    for (int k = 0; k <= bins; ++k)
        edges[k] = stream.t_start + (static_cast<double>(k) / bins) * t_exp;
    for (const Event& e : stream.events) {
        if (e.t <= edges[0] || e.t > edges[bins]) continue;
        // smallest k >= 1 with t <= edges[k]: half-open (edges[k-1], edges[k]]
        const auto it = std::lower_bound(edges.begin() + 1, edges.end(), e.t);
        const int k = static_cast<int>(it - edges.begin()) - 1;
        out[k].push_back(e);
    }
    return out;
}

void save_events(const std::string& path, const EventStream& stream) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_events: cannot open " + path);
    char buf[128];
    for (const Event& e : stream.events) {
        std::snprintf(buf, sizeof(buf), "%.17g %d %d %d", e.t, e.x, e.y, e.polarity);
        out << buf << "\n";
    }
}

EventStream load_events(const std::string& path, double threshold, double t_start, double t_end) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_events: cannot open " + path);
    EventStream stream;
    stream.threshold = threshold;
    stream.t_start = t_start;
    stream.t_end = t_end;
    std::string line;
    double last_t = -std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        Event e;
        if (!(ss >> e.t >> e.x >> e.y >> e.polarity))
            throw std::runtime_error("load_events: malformed line: " + line);
        if (e.t < last_t) throw std::runtime_error("load_events: timestamps not ascending");
        last_t = e.t;
        stream.events.push_back(e);
    }
    return stream;
}

}  // namespace gems
