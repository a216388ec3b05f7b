#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gems {

// H x W x 3 linear-radiance image. All rendering and loss math happens in
// linear space at double precision; gamma is applied only at the PNG boundary.
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(int width, int height, double fill = 0.0)
        : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height * 3, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }
    bool empty() const { return pixels_.empty(); }

    double& at(int x, int y, int c) { return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
    double at(int x, int y, int c) const {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
    }
    double* row(int y) { return pixels_.data() + static_cast<std::size_t>(y) * width_ * 3; }
    const double* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y) * width_ * 3; }

    std::vector<double>& data() { return pixels_; }
    const std::vector<double>& data() const { return pixels_; }

    bool same_shape(const ImageBuffer& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool all_finite() const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
};

// Pixel-wise arithmetic mean. Throws on empty input or shape mismatch.
ImageBuffer average_frames(const std::vector<ImageBuffer>& frames);
ImageBuffer average_frames(const std::vector<ImageBuffer>& frames, std::size_t first,
                           std::size_t count);

double luminance(double r, double g, double b);  // Rec.709 weights

// 8-bit PNG with gamma 2.2 encoding on write and decoding on read.
void save_png(const std::string& path, const ImageBuffer& img);
ImageBuffer load_png(const std::string& path);

// NPY v1.0, shape (H, W, 3). Writes <f4 by default per the dataset contract;
// float64=true keeps full precision for lossless roundtrips. Reads either.
void save_npy(const std::string& path, const ImageBuffer& img, bool float64 = false);
ImageBuffer load_npy(const std::string& path);

}  // namespace gems
