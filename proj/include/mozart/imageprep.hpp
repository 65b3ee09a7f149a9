#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "mozart/rng.hpp"

namespace mozart {

// In-memory raster, channel-interleaved row-major doubles on the raw [0,255]
// scale until preprocessed.
struct RasterImage {
    std::size_t height = 0, width = 0, channels = 1;
    std::vector<double> pixels;

    RasterImage() = default;
    RasterImage(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return pixels[(y * width + x) * channels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }

    bool operator==(const RasterImage& o) const = default;
};

enum class PreprocessKind {
    ScaleToPlusMinusOne,  // v -> v/127.5 - 1, the InceptionV3/Xception convention
    MeanSubtract,         // per-channel v -> v - mean_c, the ResNet50 convention
};

struct PreprocessMode {
    PreprocessKind kind = PreprocessKind::ScaleToPlusMinusOne;
    // ImageNet per-channel means in blue-green-red order; configuration, not
    // hard-coded policy.
    std::array<double, 3> channel_means{103.939, 116.779, 123.68};
};

RasterImage preprocess(const RasterImage& img, const PreprocessMode& mode);

struct AugmentParams {
    double shear_factor = 0.1;      // shear s drawn from [-s, s]
    double zoom_fraction = 0.10;    // zoom drawn from [1-z, 1+z]
    double rotation_degrees = 10.0; // angle drawn from [-r, r]
    bool horizontal_flip = true;    // flip with probability 0.5 when enabled
};

// One concrete draw from AugmentParams.
struct AffineSample {
    double shear = 0.0;
    double zoom = 1.0;
    double angle_degrees = 0.0;
    bool flip = false;
};

AffineSample sample_augment(const AugmentParams& params, Rng& rng);

// Applies rotate * shear * zoom about the image center, then the optional
// horizontal flip. Bilinear resampling, zero fill outside bounds, output
// dimensions unchanged.
RasterImage apply_augment(const RasterImage& img, const AffineSample& sample);

RasterImage augment(const RasterImage& img, const AugmentParams& params, Rng& rng);

// Bilinear resize with half-pixel-center sampling; same-size resize is identity.
RasterImage resize(const RasterImage& img, std::size_t h, std::size_t w);

// 8-bit grayscale/RGB PNG in and out; decoded values are the file's raw bytes
// converted losslessly to doubles.
RasterImage read_png(const std::string& path);
void write_png(const RasterImage& img, const std::string& path);

}  // namespace mozart
