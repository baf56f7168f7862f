#pragma once

// Shared validation and small helpers for kernels.cpp / kernels_serial.cpp.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "strokeforge/kernels.hpp"

namespace strokeforge::detail {

inline void check_kernel(const Kernel2d& k) {
    if (k.width <= 0 || k.height <= 0 || k.width % 2 == 0 || k.height % 2 == 0) {
        throw std::invalid_argument("convolve2d: kernel dimensions must be odd");
    }
    if (k.weights.size() != static_cast<std::size_t>(k.width) * k.height) {
        throw std::invalid_argument("convolve2d: kernel weight count mismatch");
    }
}

inline void check_sobel_input(const ScalarField& f) {
    if (f.width() < 3 || f.height() < 3) {
        throw std::invalid_argument("sobel_gradients: image must be at least 3x3");
    }
}

// Sobel response as paired differences, so flat neighbourhoods give exact zeros.
inline std::pair<double, double> sobel_at(const ScalarField& f, int x, int y) {
    const int w = f.width();
    const int h = f.height();
    const int xm = clamp_index(x - 1, w), xp = clamp_index(x + 1, w);
    const int ym = clamp_index(y - 1, h), yp = clamp_index(y + 1, h);
    const double gx = (f.at(xp, ym) - f.at(xm, ym)) + 2.0 * (f.at(xp, y) - f.at(xm, y)) + (f.at(xp, yp) - f.at(xm, yp));
    const double gy = (f.at(xm, yp) - f.at(xm, ym)) + 2.0 * (f.at(x, yp) - f.at(x, ym)) + (f.at(xp, yp) - f.at(xp, ym));
    return {gx, gy};
}

inline void check_sigma(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("gaussian_blur: sigma must be finite and >= 0");
    }
}

inline void check_luminance_input(const RasterImage& image) {
    const int c = image.channels();
    if (c != 1 && c != 3 && c != 4) throw std::invalid_argument("luminance: unsupported channel count");
}

// 0.299 R + 0.587 G + 0.114 B, summed so that white maps to exactly 1.
inline double luma(double r, double g, double b) {
    const double v = (0.114 * b + 0.587 * g) + 0.299 * r;
    return std::clamp(v, 0.0, 1.0);
}

inline double angle_of(double gx, double gy, double magnitude) {
    if (magnitude < kDegenerateGradient) return 0.0;
    return normalize_angle(std::atan2(gy, gx));
}

inline int color_channels(const RasterImage& image) { return std::min(image.channels(), 3); }

// Per-channel [min, max] of a strided plane.
inline std::pair<double, double> plane_range(const double* data, std::size_t count, int stride) {
    double lo = data[0];
    double hi = data[0];
    for (std::size_t i = 0; i < count; ++i) {
        const double v = data[i * stride];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

inline double seed_distance2(double px, double py, const Point2& s) {
    const double dx = px - s.x;
    const double dy = py - s.y;
    return dx * dx + dy * dy;
}

}  // namespace strokeforge::detail
