#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gems/eventsim.hpp"
#include "gems/rng.hpp"

using namespace gems;

namespace {

ImageBuffer constant_image(int w, int h, double value) { return ImageBuffer(w, h, value); }

std::vector<TimedFrame> make_burst(const std::vector<ImageBuffer>& images, double t0, double dt) {
    std::vector<TimedFrame> burst;
    for (std::size_t i = 0; i < images.size(); ++i)
        burst.push_back({t0 + dt * static_cast<double>(i), images[i]});
    return burst;
}

// smooth random per-pixel intensity ramps
std::vector<ImageBuffer> random_burst_images(int w, int h, int frames, Pcg32& rng) {
    ImageBuffer base(w, h);
    ImageBuffer rate(w, h);
    for (std::size_t i = 0; i < base.size(); ++i) {
        base.data()[i] = rng.uniform(0.05, 0.9);
        rate.data()[i] = rng.uniform(-1.2, 1.2);
    }
    std::vector<ImageBuffer> images;
    for (int f = 0; f < frames; ++f) {
        ImageBuffer img(w, h);
        const double t = frames == 1 ? 0.0 : static_cast<double>(f) / (frames - 1);
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data()[i] = std::min(1.0, base.data()[i] * std::exp(rate.data()[i] * t));
        images.push_back(img);
    }
    return images;
}

}  // namespace

TEST_CASE("static burst produces no events") {
    const ImageBuffer frame = constant_image(6, 5, 0.4);
    for (double k : {0.5, 1.0, 2.0, 10.0}) {
        ImageBuffer scaled = frame;
        for (double& v : scaled.data()) v *= k;
        const EventStream s = generate_events(make_burst({scaled, scaled, scaled}, 0.0, 0.1), 0.2);
        CHECK(s.events.empty());
    }
}

TEST_CASE("a 3-theta step emits exactly 3 positive events") {
    const double theta = 0.2;
    const double v0 = 0.1;
    const double v1 = v0 * std::exp(3.0 * theta);
    std::vector<ImageBuffer> images = {constant_image(3, 3, v0), constant_image(3, 3, v1)};
    const EventStream s = generate_events(make_burst(images, 0.0, 0.5), theta);
    CHECK(s.events.size() == 9 * 3);
    int per_pixel = 0;
    for (const Event& e : s.events) {
        CHECK(e.polarity == 1);
        CHECK(e.t > 0.0);
        CHECK(e.t <= 0.5);
        if (e.x == 1 && e.y == 1) ++per_pixel;
    }
    CHECK(per_pixel == 3);

    // falling edge mirror
    std::vector<ImageBuffer> falling = {constant_image(3, 3, v1), constant_image(3, 3, v0)};
    const EventStream f = generate_events(make_burst(falling, 0.0, 0.5), theta);
    CHECK(f.events.size() == 9 * 3);
    for (const Event& e : f.events) CHECK(e.polarity == -1);
}

TEST_CASE("replay oracle: events reconstruct the final log intensity within theta") {
    Pcg32 rng(113);
    const double theta = 0.15;
    const auto images = random_burst_images(12, 10, 7, rng);
    const EventStream s = generate_events(make_burst(images, 0.0, 0.1), theta);

    const ImageBuffer& first = images.front();
    const ImageBuffer& last = images.back();
    std::vector<double> signed_count(12 * 10, 0.0);
    for (const Event& e : s.events) signed_count[e.y * 12 + e.x] += e.polarity;

    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 12; ++x) {
            const double l0 =
                std::log(std::max(luminance(first.at(x, y, 0), first.at(x, y, 1), first.at(x, y, 2)),
                                  kLogFloor));
            const double l1 =
                std::log(std::max(luminance(last.at(x, y, 0), last.at(x, y, 1), last.at(x, y, 2)),
                                  kLogFloor));
            const double replay = l0 + theta * signed_count[y * 12 + x];
            CHECK(std::abs(replay - l1) <= theta + 1e-9);
        }
    }
}

TEST_CASE("event timestamps are sorted and within the window") {
    Pcg32 rng(127);
    const auto images = random_burst_images(8, 8, 5, rng);
    const EventStream s = generate_events(make_burst(images, 2.0, 0.25), 0.1);
    CHECK(!s.events.empty());
    CHECK(s.t_start == doctest::Approx(2.0));
    CHECK(s.t_end == doctest::Approx(3.0));
    for (std::size_t i = 1; i < s.events.size(); ++i)
        CHECK(s.events[i].t >= s.events[i - 1].t);
    for (const Event& e : s.events) {
        CHECK(e.t >= 2.0);
        CHECK(e.t <= 3.0);
    }
}

TEST_CASE("generate_events input validation") {
    const ImageBuffer a = constant_image(4, 4, 0.5);
    CHECK_THROWS_AS(generate_events(make_burst({a, a}, 0.0, 0.1), 0.0), std::invalid_argument);
    auto burst = make_burst({a, a}, 0.0, 0.1);
    burst[1].timestamp = burst[0].timestamp;  // non-monotonic
    CHECK_THROWS_AS(generate_events(burst, 0.2), std::invalid_argument);
}

TEST_CASE("bin_events boundary rule and partition") {
    EventStream s;
    s.t_start = 0.0;
    s.t_end = 1.3;
    s.threshold = 0.2;

    auto empty_bins = bin_events(s, 13);
    CHECK(empty_bins.size() == 13);
    for (const auto& b : empty_bins) CHECK(b.empty());

    // event exactly on the first edge falls in bin 1 (closed right edge)
    s.events.push_back({0, 0, 0.0 + 1.3 / 13.0, 1});
    auto bins = bin_events(s, 13);
    CHECK(bins[0].size() == 1);
    for (int k = 1; k < 13; ++k) CHECK(bins[k].empty());

    // uniform synthetic stream: 1300 events, 100 per bin
    s.events.clear();
    for (int i = 0; i < 1300; ++i) {
        // strictly inside bin i / 100, away from edges
        const double bin_width = 1.3 / 13.0;
        const int bin = i / 100;
        const double frac = (0.5 + (i % 100)) / 100.0;
        s.events.push_back({0, 0, bin * bin_width + frac * bin_width, 1});
    }
    bins = bin_events(s, 13);
    std::size_t total = 0;
    for (const auto& b : bins) {
        CHECK(b.size() == 100);
        total += b.size();
    }
    CHECK(total == s.events.size());

    CHECK_THROWS_AS(bin_events(s, 0), std::invalid_argument);
}

TEST_CASE("bin partition is exhaustive on random streams") {
    Pcg32 rng(131);
    EventStream s;
    s.t_start = 0.5;
    s.t_end = 2.5;
    for (int i = 0; i < 500; ++i)
        s.events.push_back({0, 0, rng.uniform(0.5000001, 2.5), 1});
    std::sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    const auto bins = bin_events(s, 7);
    std::size_t total = 0;
    for (const auto& b : bins) total += b.size();
    CHECK(total == s.events.size());
}

TEST_CASE("event file roundtrip") {
    Pcg32 rng(137);
    const auto images = random_burst_images(6, 6, 4, rng);
    const EventStream s = generate_events(make_burst(images, 0.0, 0.2), 0.1);
    const std::string path = (std::filesystem::temp_directory_path() / "gems_events.txt").string();
    save_events(path, s);
    const EventStream back = load_events(path, s.threshold, s.t_start, s.t_end);
    REQUIRE(back.events.size() == s.events.size());
    for (std::size_t i = 0; i < s.events.size(); ++i) {
        CHECK(back.events[i].t == s.events[i].t);
        CHECK(back.events[i].x == s.events[i].x);
        CHECK(back.events[i].y == s.events[i].y);
        CHECK(back.events[i].polarity == s.events[i].polarity);
    }
    std::filesystem::remove(path);
}

TEST_CASE("per-channel mode matches luminance on gray bursts") {
    Pcg32 rng(139);
    auto images = random_burst_images(5, 5, 4, rng);
    for (auto& img : images)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const double v = img.at(x, y, 0);
                img.at(x, y, 1) = v;
                img.at(x, y, 2) = v;
            }
    const auto burst = make_burst(images, 0.0, 0.1);
    const EventStream lum = generate_events(burst, 0.1);
    const auto channels = generate_events_per_channel(burst, 0.1);
    for (int c = 0; c < 3; ++c) CHECK(channels[c].events.size() == lum.events.size());
}

TEST_CASE("stream slicing shifts the window") {
    EventStream s;
    s.t_start = 0.0;
    s.t_end = 4.0;
    s.threshold = 0.2;
    s.events = {{0, 0, 0.5, 1}, {0, 0, 1.5, -1}, {0, 0, 2.5, 1}};
    const EventStream sliced = s.slice(1.0, 2.0);
    REQUIRE(sliced.events.size() == 1);
    CHECK(sliced.events[0].t == doctest::Approx(0.5));
    CHECK(sliced.events[0].polarity == -1);
    CHECK(sliced.exposure() == doctest::Approx(1.0));
}
