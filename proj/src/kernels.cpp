#include "strokeforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "kernel_detail.hpp"

namespace strokeforge {

double Kernel2d::sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

Kernel2d box_kernel(int size) {
    if (size <= 0) throw std::invalid_argument("box_kernel: size must be positive");
    const double w = 1.0 / (static_cast<double>(size) * size);
    return Kernel2d{size, size, std::vector<double>(static_cast<std::size_t>(size) * size, w)};
}

Kernel2d sobel_x_kernel() { return Kernel2d{3, 3, {-1, 0, 1, -2, 0, 2, -1, 0, 1}}; }

Kernel2d sobel_y_kernel() { return Kernel2d{3, 3, {-1, -2, -1, 0, 0, 0, 1, 2, 1}}; }

std::vector<double> gaussian_taps(double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_taps: sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        taps[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
        sum += taps[k + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

double normalize_angle(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(theta, two_pi);
    if (r <= -std::numbers::pi) r += two_pi;
    return r;
}

ScalarField convolve2d(const ScalarField& image, const Kernel2d& kernel) {
    detail::check_kernel(kernel);
    const int w = image.width();
    const int h = image.height();
    const int rx = kernel.width / 2;
    const int ry = kernel.height / 2;
    ScalarField out(w, h);
    const auto src = image.data();
    auto dst = out.data();

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        std::vector<int> cols(static_cast<std::size_t>(kernel.width));
        for (int x = 0; x < w; ++x) {
            for (int kx = 0; kx < kernel.width; ++kx) cols[kx] = clamp_index(x + kx - rx, w);
            double acc = 0.0;
            for (int ky = 0; ky < kernel.height; ++ky) {
                const double* row = src.data() + static_cast<std::size_t>(clamp_index(y + ky - ry, h)) * w;
                const double* krow = kernel.weights.data() + static_cast<std::size_t>(ky) * kernel.width;
                for (int kx = 0; kx < kernel.width; ++kx) acc += krow[kx] * row[cols[kx]];
            }
            dst[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

GradientField sobel_gradients(const ScalarField& image) {
    detail::check_sobel_input(image);
    GradientField g{ScalarField(image.width(), image.height()), ScalarField(image.width(), image.height())};
    const int w = image.width();
    const int h = image.height();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto [gx, gy] = detail::sobel_at(image, x, y);
            g.gx.at(x, y) = gx;
            g.gy.at(x, y) = gy;
        }
    }
    return g;
}

MagnitudeAngle gradient_magnitude_and_angle(const GradientField& g) {
    if (!g.gx.same_shape(g.gy)) throw std::invalid_argument("gradient components differ in shape");
    MagnitudeAngle out{ScalarField(g.gx.width(), g.gx.height()), ScalarField(g.gx.width(), g.gx.height())};
    const auto gx = g.gx.data();
    const auto gy = g.gy.data();
    auto mag = out.magnitude.data();
    auto ang = out.angle.data();
    const auto n = static_cast<std::ptrdiff_t>(gx.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double m = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
        mag[i] = m;
        ang[i] = detail::angle_of(gx[i], gy[i], m);
    }
    return out;
}

namespace {

// Separable blur of one strided plane; result clamped to the plane's input range.
void blur_plane(const double* src, double* dst, int w, int h, int stride, const std::vector<double>& taps) {
    const int r = static_cast<int>(taps.size() / 2);
    const auto [lo, hi] = detail::plane_range(src, static_cast<std::size_t>(w) * h, stride);
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = src[(static_cast<std::size_t>(y) * w + x) * stride];
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                if (k == 0) continue;
                const double v = src[(static_cast<std::size_t>(y) * w + clamp_index(x + k, w)) * stride];
                acc += taps[k + r] * (v - c);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = std::clamp(c + acc, lo, hi);
        }
    }

#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = tmp[static_cast<std::size_t>(y) * w + x];
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                if (k == 0) continue;
                const double v = tmp[static_cast<std::size_t>(clamp_index(y + k, h)) * w + x];
                acc += taps[k + r] * (v - c);
            }
            dst[(static_cast<std::size_t>(y) * w + x) * stride] = std::clamp(c + acc, lo, hi);
        }
    }
}

}  // namespace

RasterImage gaussian_blur(const RasterImage& image, double sigma) {
    detail::check_sigma(sigma);
    if (sigma == 0.0 || image.empty()) return image;
    const auto taps = gaussian_taps(sigma);
    RasterImage out(image.width(), image.height(), image.channels());
    for (int c = 0; c < image.channels(); ++c) {
        blur_plane(image.data().data() + c, out.data().data() + c, image.width(), image.height(),
                   image.channels(), taps);
    }
    return out;
}

ScalarField gaussian_blur(const ScalarField& field, double sigma) {
    detail::check_sigma(sigma);
    if (sigma == 0.0 || field.size() == 0) return field;
    ScalarField out(field.width(), field.height());
    blur_plane(field.data().data(), out.data().data(), field.width(), field.height(), 1, gaussian_taps(sigma));
    return out;
}

ScalarField luminance(const RasterImage& image) {
    detail::check_luminance_input(image);
    ScalarField out(image.width(), image.height());
    const int ch = image.channels();
    const auto src = image.data();
    auto dst = out.data();
    const auto n = static_cast<std::ptrdiff_t>(image.pixel_count());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const double* p = src.data() + i * ch;
        dst[i] = ch == 1 ? p[0] : detail::luma(p[0], p[1], p[2]);
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

#pragma omp parallel for schedule(dynamic, 4)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc[3] = {0.0, 0.0, 0.0};
            double wsum = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int qy = clamp_index(y + dy, h);
                for (int dx = -r; dx <= r; ++dx) {
                    const int qx = clamp_index(x + dx, w);
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

namespace {

// Uniform bucket grid over seed positions for exact nearest-seed queries.
class SeedGrid {
public:
    SeedGrid(int width, int height, std::span<const Point2> seeds) : seeds_(seeds) {
        const double area = static_cast<double>(width) * height;
        cell_ = std::max(1.0, std::sqrt(area / static_cast<double>(std::max<std::size_t>(1, seeds.size()))));
        cols_ = std::max(1, static_cast<int>(std::ceil(width / cell_)));
        rows_ = std::max(1, static_cast<int>(std::ceil(height / cell_)));
        buckets_.resize(static_cast<std::size_t>(cols_) * rows_);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            buckets_[bucket_index(bucket_x(seeds[i].x), bucket_y(seeds[i].y))].push_back(static_cast<int>(i));
        }
    }

    int nearest(double px, double py) const {
        const int bx = bucket_x(px);
        const int by = bucket_y(py);
        double best = std::numeric_limits<double>::infinity();
        int best_i = -1;
        const int max_ring = std::max(cols_, rows_);
        for (int ring = 0; ring <= max_ring; ++ring) {
            for (int y = by - ring; y <= by + ring; ++y) {
                if (y < 0 || y >= rows_) continue;
                const bool edge_row = (y == by - ring || y == by + ring);
                for (int x = bx - ring; x <= bx + ring; x += (edge_row ? 1 : 2 * ring)) {
                    if (x >= 0 && x < cols_) {
                        for (int i : buckets_[bucket_index(x, y)]) {
                            const double d2 = detail::seed_distance2(px, py, seeds_[i]);
                            if (d2 < best || (d2 == best && i < best_i)) {
                                best = d2;
                                best_i = i;
                            }
                        }
                    }
                    if (ring == 0) break;
                }
            }
            if (best_i >= 0) {
                // Any seed outside the searched block is at least this far away.
                const double left = px - (bx - ring) * cell_;
                const double right = (bx + ring + 1) * cell_ - px;
                const double top = py - (by - ring) * cell_;
                const double bottom = (by + ring + 1) * cell_ - py;
                const double bound = std::min(std::min(left, right), std::min(top, bottom));
                if (bound > 0.0 && best < bound * bound) break;
            }
        }
        return best_i;
    }

private:
    int bucket_x(double x) const { return std::clamp(static_cast<int>(std::floor(x / cell_)), 0, cols_ - 1); }
    int bucket_y(double y) const { return std::clamp(static_cast<int>(std::floor(y / cell_)), 0, rows_ - 1); }
    std::size_t bucket_index(int x, int y) const { return static_cast<std::size_t>(y) * cols_ + x; }

    std::span<const Point2> seeds_;
    double cell_ = 1.0;
    int cols_ = 1;
    int rows_ = 1;
    std::vector<std::vector<int>> buckets_;
};

}  // namespace

std::vector<int> label_nearest(int width, int height, std::span<const Point2> seeds) {
    if (seeds.empty()) throw std::invalid_argument("label_nearest: no seeds");
    std::vector<int> labels(static_cast<std::size_t>(width) * height, 0);
    const SeedGrid grid(width, height, seeds);

#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            labels[static_cast<std::size_t>(y) * width + x] = grid.nearest(x, y);
        }
    }
    return labels;
}

std::vector<CellError> cell_errors(const RasterImage& canvas, const RasterImage& reference, const CellGrid& grid) {
    if (!canvas.same_shape(reference)) throw std::invalid_argument("cell_errors: shape mismatch");
    const int cc = detail::color_channels(canvas);
    const int cols = grid.cols();
    const int rows = grid.rows();
    std::vector<CellError> out(static_cast<std::size_t>(cols) * rows);

#pragma omp parallel for schedule(static)
    for (int cell = 0; cell < cols * rows; ++cell) {
        const int x0 = (cell % cols) * grid.step;
        const int y0 = (cell / cols) * grid.step;
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
        out[cell] = e;
    }
    return out;
}

}  // namespace strokeforge
