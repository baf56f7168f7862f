#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace strokeforge {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Row-major, interleaved float image. Samples are kept in [0,1].
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, int channels, double fill = 0.0);
    RasterImage(int width, int height, int channels, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const RasterImage& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Single-channel field of unbounded (finite) values.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0);
    ScalarField(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }

    double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    /// Nearest-pixel lookup with coordinates clamped into the field.
    double sample(double x, double y) const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double max_value() const;
    double min_value() const;

    bool same_shape(const ScalarField& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

struct GradientField {
    ScalarField gx;
    ScalarField gy;
};

/// Expand gray to RGB and drop alpha; RGB input is returned as-is.
RasterImage to_rgb(const RasterImage& image);

/// Field -> single-channel image, clamping into [0,1].
RasterImage field_to_image(const ScalarField& field);

/// Root of the summed squared sample differences. Shapes must match.
double l2_distance(const RasterImage& a, const RasterImage& b);

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace strokeforge
