#include "strokeforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace strokeforge {

namespace {

constexpr int kMaxDimension = 16384;

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0 || width > kMaxDimension || height > kMaxDimension) {
        throw std::invalid_argument("image dimensions out of range: " + std::to_string(width) + "x" +
                                    std::to_string(height));
    }
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height);
    if (channels != 1 && channels != 3 && channels != 4) {
        throw std::invalid_argument("unsupported channel count " + std::to_string(channels));
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

RasterImage::RasterImage(int width, int height, int channels, std::vector<double> data)
    : RasterImage(width, height, channels) {
    if (data.size() != data_.size()) {
        throw std::invalid_argument("image data length does not match width*height*channels");
    }
    data_ = std::move(data);
}

ScalarField::ScalarField(int width, int height, double fill) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

ScalarField::ScalarField(int width, int height, std::vector<double> data) : ScalarField(width, height) {
    if (data.size() != data_.size()) {
        throw std::invalid_argument("field data length does not match width*height");
    }
    data_ = std::move(data);
}

double ScalarField::sample(double x, double y) const {
    const int ix = clamp_index(static_cast<int>(std::lround(x)), width_);
    const int iy = clamp_index(static_cast<int>(std::lround(y)), height_);
    return at(ix, iy);
}

double ScalarField::max_value() const {
    return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double ScalarField::min_value() const {
    return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

RasterImage to_rgb(const RasterImage& image) {
    if (image.channels() == 3) return image;
    RasterImage out(image.width(), image.height(), 3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = image.channels() == 1 ? image.at(x, y, 0) : image.at(x, y, c);
            }
        }
    }
    return out;
}

RasterImage field_to_image(const ScalarField& field) {
    RasterImage out(field.width(), field.height(), 1);
    auto dst = out.data();
    auto src = field.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = std::clamp(src[i], 0.0, 1.0);
    return out;
}

double l2_distance(const RasterImage& a, const RasterImage& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("l2_distance: shape mismatch");
    double sum = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

}  // namespace strokeforge
