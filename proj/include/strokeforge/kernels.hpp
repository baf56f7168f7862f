#pragma once

// Low-level numeric kernels. Every kernel has an OpenMP implementation in
// namespace strokeforge and a plain single-threaded reference with the same
// signature in strokeforge::serial. Both evaluate each output sample with the
// same arithmetic, so results are bit-identical; the serial versions exist for
// tests and the benchmark.

#include <span>
#include <vector>

#include "strokeforge/raster.hpp"

namespace strokeforge {

struct Kernel2d {
    int width = 1;
    int height = 1;
    std::vector<double> weights;  // row-major

    double at(int x, int y) const { return weights[static_cast<std::size_t>(y) * width + x]; }
    double sum() const;
};

Kernel2d box_kernel(int size);
Kernel2d sobel_x_kernel();
Kernel2d sobel_y_kernel();

/// 1-D normalized Gaussian taps, radius ceil(3 sigma). sigma must be > 0.
std::vector<double> gaussian_taps(double sigma);

struct MagnitudeAngle {
    ScalarField magnitude;
    ScalarField angle;  // radians in (-pi, pi]
};

/// Gradient magnitudes below this count as degenerate (angle 0).
inline constexpr double kDegenerateGradient = 1e-12;

/// Map any angle into (-pi, pi].
double normalize_angle(double theta);

/// Cell grid used by the layered painter: cells of `step` pixels, the last
/// row/column possibly narrower.
struct CellGrid {
    int width = 0;
    int height = 0;
    int step = 1;

    int cols() const { return (width + step - 1) / step; }
    int rows() const { return (height + step - 1) / step; }
};

struct CellError {
    double mean = 0.0;  // mean per-pixel Euclidean RGB distance
    int argmax_x = 0;   // first pixel (scan order) attaining the max distance
    int argmax_y = 0;
};

// Cross-correlation (kernel not flipped), replicate-edge border.
ScalarField convolve2d(const ScalarField& image, const Kernel2d& kernel);
GradientField sobel_gradients(const ScalarField& image);
MagnitudeAngle gradient_magnitude_and_angle(const GradientField& g);
RasterImage gaussian_blur(const RasterImage& image, double sigma);
ScalarField gaussian_blur(const ScalarField& field, double sigma);
ScalarField luminance(const RasterImage& image);
/// Edge-preserving bilateral filter on color channels; alpha passes through.
RasterImage bilateral_filter(const RasterImage& image, double spatial_sigma, double range_sigma);
/// Label each pixel with its nearest seed (Euclidean, ties to lower index).
std::vector<int> label_nearest(int width, int height, std::span<const Point2> seeds);
/// Per-cell error between two RGB(A) images of identical shape.
std::vector<CellError> cell_errors(const RasterImage& canvas, const RasterImage& reference, const CellGrid& grid);

namespace serial {
ScalarField convolve2d(const ScalarField& image, const Kernel2d& kernel);
GradientField sobel_gradients(const ScalarField& image);
MagnitudeAngle gradient_magnitude_and_angle(const GradientField& g);
RasterImage gaussian_blur(const RasterImage& image, double sigma);
ScalarField gaussian_blur(const ScalarField& field, double sigma);
ScalarField luminance(const RasterImage& image);
RasterImage bilateral_filter(const RasterImage& image, double spatial_sigma, double range_sigma);
std::vector<int> label_nearest(int width, int height, std::span<const Point2> seeds);
std::vector<CellError> cell_errors(const RasterImage& canvas, const RasterImage& reference, const CellGrid& grid);
}  // namespace serial

}  // namespace strokeforge
