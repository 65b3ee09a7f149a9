#include "mozart/imageprep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>

#include <png.h>

#include "mozart/errors.hpp"

namespace mozart {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

struct Mat2 {
    // [[a, b], [c, d]]
    double a, b, c, d;

    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }

    Mat2 inverse() const {
        double det = a * d - b * c;
        return {d / det, -b / det, -c / det, a / det};
    }
};

// Bilinear sample at (sy, sx) with zero fill outside the image.
double sample_zero_fill(const RasterImage& img, double sy, double sx, std::size_t c) {
    double fy = std::floor(sy), fx = std::floor(sx);
    long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
    double dy = sy - fy, dx = sx - fx;

    auto px = [&](long y, long x) -> double {
        if (y < 0 || x < 0 || y >= static_cast<long>(img.height) ||
            x >= static_cast<long>(img.width))
            return 0.0;
        return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c);
    };
    return px(y0, x0) * (1.0 - dy) * (1.0 - dx) + px(y0, x0 + 1) * (1.0 - dy) * dx +
           px(y0 + 1, x0) * dy * (1.0 - dx) + px(y0 + 1, x0 + 1) * dy * dx;
}

}  // namespace

RasterImage preprocess(const RasterImage& img, const PreprocessMode& mode) {
    RasterImage out = img;
    if (mode.kind == PreprocessKind::ScaleToPlusMinusOne) {
        for (double& v : out.pixels) v = v / 127.5 - 1.0;
    } else {
        if (img.channels != 3)
            throw std::invalid_argument("preprocess: MeanSubtract needs a 3-channel image");
        for (std::size_t k = 0; k < out.pixels.size(); ++k)
            out.pixels[k] -= mode.channel_means[k % 3];
    }
    return out;
}

AffineSample sample_augment(const AugmentParams& params, Rng& rng) {
    if (params.zoom_fraction < 0.0 || params.zoom_fraction >= 1.0)
        throw std::invalid_argument("augment: zoom_fraction must be in [0,1)");
    if (params.rotation_degrees < 0.0)
        throw std::invalid_argument("augment: rotation_degrees must be >= 0");

    AffineSample s;
    s.shear = rng.uniform(-params.shear_factor, params.shear_factor);
    s.zoom = rng.uniform(1.0 - params.zoom_fraction, 1.0 + params.zoom_fraction);
    s.angle_degrees = rng.uniform(-params.rotation_degrees, params.rotation_degrees);
    s.flip = params.horizontal_flip && rng.bernoulli(0.5);
    return s;
}

RasterImage apply_augment(const RasterImage& img, const AffineSample& sample) {
    double theta = sample.angle_degrees * kDegToRad;
    Mat2 rotate{std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)};
    Mat2 shear{1.0, sample.shear, 0.0, 1.0};
    Mat2 zoom{sample.zoom, 0.0, 0.0, sample.zoom};
    Mat2 inv = (rotate * shear * zoom).inverse();

    double cx = (static_cast<double>(img.width) - 1.0) / 2.0;
    double cy = (static_cast<double>(img.height) - 1.0) / 2.0;

    RasterImage out(img.height, img.width, img.channels);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            double ox = static_cast<double>(x) - cx;
            double oy = static_cast<double>(y) - cy;
            if (sample.flip) ox = -ox;
            double sx = inv.a * ox + inv.b * oy + cx;
            double sy = inv.c * ox + inv.d * oy + cy;
            for (std::size_t c = 0; c < img.channels; ++c)
                out.at(y, x, c) = sample_zero_fill(img, sy, sx, c);
        }
    return out;
}

RasterImage augment(const RasterImage& img, const AugmentParams& params, Rng& rng) {
    return apply_augment(img, sample_augment(params, rng));
}

RasterImage resize(const RasterImage& img, std::size_t h, std::size_t w) {
    if (h == 0 || w == 0) throw std::invalid_argument("resize: target dimensions must be >= 1");

    RasterImage out(h, w, img.channels);
    double sy_scale = static_cast<double>(img.height) / static_cast<double>(h);
    double sx_scale = static_cast<double>(img.width) / static_cast<double>(w);

    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            // Half-pixel centers, clamped to the edge so borders replicate.
            double sy = (static_cast<double>(y) + 0.5) * sy_scale - 0.5;
            double sx = (static_cast<double>(x) + 0.5) * sx_scale - 0.5;
            sy = std::clamp(sy, 0.0, static_cast<double>(img.height) - 1.0);
            sx = std::clamp(sx, 0.0, static_cast<double>(img.width) - 1.0);
            for (std::size_t c = 0; c < img.channels; ++c)
                out.at(y, x, c) = sample_zero_fill(img, sy, sx, c);
        }
    return out;
}

RasterImage read_png(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw ValidationError("read_png: " + path + ": " + image.message);

    bool color = PNG_IMAGE_PIXEL_CHANNELS(image.format) >= 3;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ValidationError("read_png: " + path + ": " + msg);
    }

    RasterImage out(image.height, image.width, color ? 3 : 1);
    for (std::size_t k = 0; k < buffer.size(); ++k)
        out.pixels[k] = static_cast<double>(buffer[k]);
    return out;
}

void write_png(const RasterImage& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("write_png: only 1- or 3-channel images");

    std::vector<std::uint8_t> buffer(img.pixels.size());
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
        double v = std::clamp(img.pixels[k], 0.0, 255.0);
        buffer[k] = static_cast<std::uint8_t>(std::lround(v));
    }

    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
        throw ValidationError("write_png: " + path + ": " + image.message);
}

}  // namespace mozart
