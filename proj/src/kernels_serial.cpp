// Single-threaded reference kernels. Straightforward loops, kept for
// equivalence tests against the OpenMP versions and for benchmarking.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernel_detail.hpp"
#include "strokeforge/kernels.hpp"

namespace strokeforge::serial {

ScalarField convolve2d(const ScalarField& image, const Kernel2d& kernel) {
    detail::check_kernel(kernel);
    const int w = image.width();
    const int h = image.height();
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    ScalarField out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int ky = 0; ky < kernel.height; ++ky) {
                for (int kx = 0; kx < kernel.width; ++kx) {
                    acc += kernel.at(kx, ky) * image.at(clamp_index(x + kx - rx, w), clamp_index(y + ky - ry, h));
                }
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

GradientField sobel_gradients(const ScalarField& image) {
    detail::check_sobel_input(image);
    GradientField g{ScalarField(image.width(), image.height()), ScalarField(image.width(), image.height())};
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const auto [gx, gy] = detail::sobel_at(image, x, y);
            g.gx.at(x, y) = gx;
            g.gy.at(x, y) = gy;
        }
    }
    return g;
}

MagnitudeAngle gradient_magnitude_and_angle(const GradientField& g) {
    MagnitudeAngle out{ScalarField(g.gx.width(), g.gx.height()), ScalarField(g.gx.width(), g.gx.height())};
    for (int y = 0; y < g.gx.height(); ++y) {
        for (int x = 0; x < g.gx.width(); ++x) {
            const double gx = g.gx.at(x, y);
            const double gy = g.gy.at(x, y);
            const double m = std::sqrt(gx * gx + gy * gy);
            out.magnitude.at(x, y) = m;
            out.angle.at(x, y) = detail::angle_of(gx, gy, m);
        }
    }
    return out;
}

namespace {

std::vector<double> blur_plane(const std::vector<double>& plane, int w, int h, const std::vector<double>& taps) {
    const int r = static_cast<int>(taps.size() / 2);
    const auto [lo, hi] = detail::plane_range(plane.data(), plane.size(), 1);
    auto at = [w](const std::vector<double>& p, int x, int y) { return p[static_cast<std::size_t>(y) * w + x]; };

    std::vector<double> tmp(plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = at(plane, x, y);
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                if (k != 0) acc += taps[k + r] * (at(plane, clamp_index(x + k, w), y) - c);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = std::clamp(c + acc, lo, hi);
        }
    }
    std::vector<double> out(plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = at(tmp, x, y);
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                if (k != 0) acc += taps[k + r] * (at(tmp, x, clamp_index(y + k, h)) - c);
            }
            out[static_cast<std::size_t>(y) * w + x] = std::clamp(c + acc, lo, hi);
        }
    }
    return out;
}

}  // namespace

RasterImage gaussian_blur(const RasterImage& image, double sigma) {
    detail::check_sigma(sigma);
    if (sigma == 0.0 || image.empty()) return image;
    const auto taps = gaussian_taps(sigma);
    const int w = image.width();
    const int h = image.height();
    RasterImage out(w, h, image.channels());
    for (int c = 0; c < image.channels(); ++c) {
        std::vector<double> plane(image.pixel_count());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) plane[static_cast<std::size_t>(y) * w + x] = image.at(x, y, c);
        const auto blurred = blur_plane(plane, w, h, taps);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(x, y, c) = blurred[static_cast<std::size_t>(y) * w + x];
    }
    return out;
}

ScalarField gaussian_blur(const ScalarField& field, double sigma) {
    detail::check_sigma(sigma);
    if (sigma == 0.0 || field.size() == 0) return field;
    std::vector<double> plane(field.data().begin(), field.data().end());
    return ScalarField(field.width(), field.height(),
                       blur_plane(plane, field.width(), field.height(), gaussian_taps(sigma)));
}

ScalarField luminance(const RasterImage& image) {
    detail::check_luminance_input(image);
    ScalarField out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            out.at(x, y) = image.channels() == 1
                               ? image.at(x, y, 0)
                               : detail::luma(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));
        }
    }
    return out;
}

RasterImage bilateral_filter(const RasterImage& image, double spatial_sigma, double range_sigma) {
    if (!(spatial_sigma > 0.0) || !(range_sigma > 0.0)) return image;
    const int w = image.width();
    const int h = image.height();
    const int cc = detail::color_channels(image);
    const int r = static_cast<int>(std::ceil(3.0 * spatial_sigma));
    const double inv_s = 1.0 / (2.0 * spatial_sigma * spatial_sigma);
    const double inv_r = 1.0 / (2.0 * range_sigma * range_sigma);
    RasterImage out = image;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            double wsum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int qx = clamp_index(x + dx, w);
                    const int qy = clamp_index(y + dy, h);
                    double d2 = 0.0;
                    for (int c = 0; c < cc; ++c) {
                        const double d = image.at(qx, qy, c) - image.at(x, y, c);
                        d2 += d * d;
                    }
                    const double wt = std::exp(-(dx * dx + dy * dy) * inv_s - d2 * inv_r);
                    wsum += wt;
                    for (int c = 0; c < cc; ++c) acc[c] += wt * image.at(qx, qy, c);
                }
            }
            for (int c = 0; c < cc; ++c) out.at(x, y, c) = std::clamp(acc[c] / wsum, 0.0, 1.0);
        }
    }
    return out;
}

std::vector<int> label_nearest(int width, int height, std::span<const Point2> seeds) {
    if (seeds.empty()) throw std::invalid_argument("label_nearest: no seeds");
    std::vector<int> labels(static_cast<std::size_t>(width) * height, 0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double best = std::numeric_limits<double>::infinity();
            int best_i = 0;
            for (std::size_t i = 0; i < seeds.size(); ++i) {
                const double d2 = detail::seed_distance2(x, y, seeds[i]);
                if (d2 < best) {
                    best = d2;
                    best_i = static_cast<int>(i);
                }
            }
            labels[static_cast<std::size_t>(y) * width + x] = best_i;
        }
    }
    return labels;
}

std::vector<CellError> cell_errors(const RasterImage& canvas, const RasterImage& reference, const CellGrid& grid) {
    if (!canvas.same_shape(reference)) throw std::invalid_argument("cell_errors: shape mismatch");
    const int cc = detail::color_channels(canvas);
    std::vector<CellError> out;
    out.reserve(static_cast<std::size_t>(grid.cols()) * grid.rows());
    for (int cy = 0; cy < grid.rows(); ++cy) {
        for (int cx = 0; cx < grid.cols(); ++cx) {
            const int x0 = cx * grid.step;
            const int y0 = cy * grid.step;
            const int x1 = std::min(x0 + grid.step, grid.width);
            const int y1 = std::min(y0 + grid.step, grid.height);
            double sum = 0.0;
            double best = -1.0;
            CellError e;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    double d2 = 0.0;
                    for (int c = 0; c < cc; ++c) {
                        const double d = canvas.at(x, y, c) - reference.at(x, y, c);
                        d2 += d * d;
                    }
                    const double d = std::sqrt(d2);
                    sum += d;
                    if (d > best) {
                        best = d;
                        e.argmax_x = x;
                        e.argmax_y = y;
                    }
                }
            }
            e.mean = sum / (static_cast<double>(x1 - x0) * (y1 - y0));
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace strokeforge::serial
