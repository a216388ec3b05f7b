#include "gems/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace gems {

bool ImageBuffer::all_finite() const {
    for (double v : pixels_)
        if (!std::isfinite(v)) return false;
    return true;
}

ImageBuffer average_frames(const std::vector<ImageBuffer>& frames, std::size_t first,
                           std::size_t count) {
    if (count == 0 || first + count > frames.size())
        throw std::invalid_argument("average_frames: empty or out-of-range selection");
    ImageBuffer out(frames[first].width(), frames[first].height());
    for (std::size_t f = first; f < first + count; ++f) {
        if (!frames[f].same_shape(out)) throw std::invalid_argument("average_frames: shape mismatch");
        const auto& src = frames[f].data();
        auto& dst = out.data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (double& v : out.data()) v *= inv;
    return out;
}

ImageBuffer average_frames(const std::vector<ImageBuffer>& frames) {
    return average_frames(frames, 0, frames.size());
}

double luminance(double r, double g, double b) { return 0.2126 * r + 0.7152 * g + 0.0722 * b; }

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t encode_gamma(double linear) {
    double v = std::min(1.0, std::max(0.0, linear));
    return static_cast<uint8_t>(std::lround(255.0 * std::pow(v, 1.0 / 2.2)));
}

double decode_gamma(uint8_t v) { return std::pow(v / 255.0, 2.2); }

}  // namespace

void save_png(const std::string& path, const ImageBuffer& img) {
    if (img.empty()) throw std::invalid_argument("save_png: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("save_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("save_png: libpng write error on " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<std::size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) row[x * 3 + c] = encode_gamma(img.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageBuffer load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("load_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: malformed PNG " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("load_png: expected 3 channels in " + path);
    }

    ImageBuffer img(width, height);
    std::vector<uint8_t> row(static_cast<std::size_t>(width) * 3);
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = decode_gamma(row[x * 3 + c]);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

namespace {

void write_npy_header(std::FILE* f, const std::string& dtype, int h, int w) {
    char shape[128];
    std::snprintf(shape, sizeof(shape), "{'descr': '%s', 'fortran_order': False, 'shape': (%d, %d, 3), }",
                  dtype.c_str(), h, w);
    std::string header = shape;
    // pad with spaces so magic + len + header is a multiple of 64, ending in \n
    std::size_t total = 10 + header.size() + 1;
    std::size_t pad = (64 - total % 64) % 64;
    header += std::string(pad, ' ');
    header += '\n';
    const uint8_t magic[8] = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
    std::fwrite(magic, 1, 8, f);
    uint16_t len = static_cast<uint16_t>(header.size());
    uint8_t len_le[2] = {static_cast<uint8_t>(len & 0xff), static_cast<uint8_t>(len >> 8)};
    std::fwrite(len_le, 1, 2, f);
    std::fwrite(header.data(), 1, header.size(), f);
}

}  // namespace

void save_npy(const std::string& path, const ImageBuffer& img, bool float64) {
    if (img.empty()) throw std::invalid_argument("save_npy: empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("save_npy: cannot open " + path);
    write_npy_header(fp.get(), float64 ? "<f8" : "<f4", img.height(), img.width());
    if (float64) {
        std::fwrite(img.data().data(), sizeof(double), img.data().size(), fp.get());
    } else {
        std::vector<float> buf(img.data().size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(img.data()[i]);
        std::fwrite(buf.data(), sizeof(float), buf.size(), fp.get());
    }
}

ImageBuffer load_npy(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("load_npy: cannot open " + path);
    uint8_t magic[8];
    if (std::fread(magic, 1, 8, fp.get()) != 8 || magic[0] != 0x93 ||
        std::memcmp(magic + 1, "NUMPY", 5) != 0)
        throw std::runtime_error("load_npy: not an NPY file: " + path);
    uint8_t len_le[2];
    if (std::fread(len_le, 1, 2, fp.get()) != 2) throw std::runtime_error("load_npy: truncated header");
    const std::size_t header_len = len_le[0] | (len_le[1] << 8);
    std::string header(header_len, '\0');
    if (std::fread(header.data(), 1, header_len, fp.get()) != header_len)
        throw std::runtime_error("load_npy: truncated header");

    bool f64;
    if (header.find("'<f4'") != std::string::npos)
        f64 = false;
    else if (header.find("'<f8'") != std::string::npos)
        f64 = true;
    else
        throw std::runtime_error("load_npy: unsupported dtype in " + path);
    if (header.find("'fortran_order': False") == std::string::npos)
        throw std::runtime_error("load_npy: fortran order not supported");

    int h = 0, w = 0, ch = 0;
    const auto pos = header.find("'shape': (");
    if (pos == std::string::npos || std::sscanf(header.c_str() + pos, "'shape': (%d, %d, %d", &h, &w, &ch) != 3 ||
        ch != 3 || h <= 0 || w <= 0)
        throw std::runtime_error("load_npy: bad shape in " + path);

    ImageBuffer img(w, h);
    const std::size_t n = img.data().size();
    if (f64) {
        if (std::fread(img.data().data(), sizeof(double), n, fp.get()) != n)
            throw std::runtime_error("load_npy: truncated data in " + path);
    } else {
        std::vector<float> buf(n);
        if (std::fread(buf.data(), sizeof(float), n, fp.get()) != n)
            throw std::runtime_error("load_npy: truncated data in " + path);
        for (std::size_t i = 0; i < n; ++i) img.data()[i] = buf[i];
    }
    return img;
}

}  // namespace gems
