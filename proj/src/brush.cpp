#include "strokeforge/brush.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "strokeforge/rng.hpp"

namespace strokeforge {

namespace {

struct Vec {
    double x;
    double y;
};

Vec operator-(Vec a, Vec b) { return {a.x - b.x, a.y - b.y}; }
double dot(Vec a, Vec b) { return a.x * b.x + a.y * b.y; }
double cross(Vec a, Vec b) { return a.x * b.y - a.y * b.x; }

double segment_distance(Vec p, Vec a, Vec b) {
    const Vec ab = b - a;
    const Vec ap = p - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
    const Vec d{ap.x - t * ab.x, ap.y - t * ab.y};
    return std::sqrt(dot(d, d));
}

// Signed distance to a counter-clockwise or clockwise convex polygon.
template <std::size_t N>
double polygon_distance(Vec p, const std::array<Vec, N>& v) {
    double d = std::numeric_limits<double>::infinity();
    bool inside = true;
    double orient = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const Vec a = v[i];
        const Vec b = v[(i + 1) % N];
        d = std::min(d, segment_distance(p, a, b));
        const double c = cross(b - a, p - a);
        if (orient == 0.0) orient = c;
        if (c * orient < 0.0) inside = false;
    }
    return inside ? -d : d;
}

double box_distance(Vec local, double half_len, double half_wid) {
    const double qx = std::abs(local.x) - half_len;
    const double qy = std::abs(local.y) - half_wid;
    const double ox = std::max(qx, 0.0);
    const double oy = std::max(qy, 0.0);
    return std::sqrt(ox * ox + oy * oy) + std::min(std::max(qx, qy), 0.0);
}

double coverage_from_distance(double sd) { return std::clamp(0.5 - sd, 0.0, 1.0); }

struct Window {
    int x0, y0, x1, y1;  // inclusive-exclusive
};

Window clip_window(double min_x, double min_y, double max_x, double max_y, int width, int height) {
    Window w{static_cast<int>(std::floor(min_x)) - 1, static_cast<int>(std::floor(min_y)) - 1,
             static_cast<int>(std::ceil(max_x)) + 2, static_cast<int>(std::ceil(max_y)) + 2};
    w.x0 = std::clamp(w.x0, 0, width);
    w.y0 = std::clamp(w.y0, 0, height);
    w.x1 = std::clamp(w.x1, 0, width);
    w.y1 = std::clamp(w.y1, 0, height);
    return w;
}

Footprint make_footprint(const Window& w) {
    Footprint fp;
    fp.x0 = w.x0;
    fp.y0 = w.y0;
    fp.width = std::max(0, w.x1 - w.x0);
    fp.height = std::max(0, w.y1 - w.y0);
    fp.coverage.assign(static_cast<std::size_t>(fp.width) * fp.height, 0.0);
    return fp;
}

std::uint64_t stroke_seed(const Stroke& s) {
    std::uint64_t h = mix64(std::bit_cast<std::uint64_t>(s.x));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(s.y));
    return mix64(h ^ std::bit_cast<std::uint64_t>(s.theta));
}

}  // namespace

double Footprint::total() const {
    double t = 0.0;
    for (double c : coverage) t += c;
    return t;
}

Footprint stroke_footprint(const Stroke& stroke, BrushModel brush, int width, int height) {
    const Vec dir{std::cos(stroke.theta), std::sin(stroke.theta)};
    const Vec nrm{-dir.y, dir.x};
    const double half = 0.5 * stroke.length;
    const Vec a{stroke.x, stroke.y};
    const Vec tail{a.x - half * dir.x, a.y - half * dir.y};
    const Vec head{a.x + half * dir.x, a.y + half * dir.y};
    const double half_t = 0.5 * stroke.thickness;

    const bool capsule = brush == BrushModel::curved || brush == BrushModel::random_raster;
    const double reach = half + (capsule ? stroke.size : half_t) + 1.0;
    Footprint fp = make_footprint(clip_window(a.x - reach, a.y - reach, a.x + reach, a.y + reach, width, height));
    if (fp.empty()) return fp;

    const std::array<Vec, 3> tri{Vec{tail.x + half_t * nrm.x, tail.y + half_t * nrm.y},
                                 Vec{tail.x - half_t * nrm.x, tail.y - half_t * nrm.y}, head};
    const std::uint64_t seed = stroke_seed(stroke);

    for (int y = fp.y0; y < fp.y0 + fp.height; ++y) {
        for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
            const Vec p{double(x), double(y)};
            double sd = 0.0;
            switch (brush) {
                case BrushModel::curved:
                case BrushModel::random_raster: sd = segment_distance(p, tail, head) - stroke.size; break;
                case BrushModel::rectangle: {
                    const Vec rel = p - a;
                    sd = box_distance({dot(rel, dir), dot(rel, nrm)}, half, half_t);
                    break;
                }
                case BrushModel::triangle: sd = polygon_distance(p, tri); break;
            }
            double cov = coverage_from_distance(sd);
            if (cov <= 0.0) continue;
            if (brush == BrushModel::random_raster && hash_unit(seed, x, y) >= kRandomRasterKeep) cov = 0.0;
            if (stroke.texture == Texture::stipple && hash_unit(~seed, x, y) >= kStippleKeep) cov = 0.0;
            if (stroke.texture == Texture::hatch) {
                const double across = dot(p - a, nrm);
                if (static_cast<long>(std::floor(across / 2.0)) % 2 != 0) cov = 0.0;
            }
            fp.coverage[static_cast<std::size_t>(y - fp.y0) * fp.width + (x - fp.x0)] = cov;
        }
    }
    return fp;
}

Footprint polyline_footprint(std::span<const Point2> points, double radius, BrushModel brush, std::uint64_t seed,
                             int width, int height) {
    if (points.empty()) return {};
    double min_x = points[0].x, max_x = points[0].x, min_y = points[0].y, max_y = points[0].y;
    for (const auto& p : points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    Footprint fp = make_footprint(
        clip_window(min_x - radius - 1, min_y - radius - 1, max_x + radius + 1, max_y + radius + 1, width, height));
    if (fp.empty()) return fp;

    // Rectangle and triangle stamps are inscribed in the brush disc.
    const double half_len = 0.8 * radius;
    const double half_wid = 0.6 * radius;

    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec c{points[i].x, points[i].y};
        Vec dir{1.0, 0.0};
        if (points.size() > 1) {
            const Point2 from = i + 1 < points.size() ? points[i] : points[i - 1];
            const Point2 to = i + 1 < points.size() ? points[i + 1] : points[i];
            const double len = std::hypot(to.x - from.x, to.y - from.y);
            if (len > 0.0) dir = {(to.x - from.x) / len, (to.y - from.y) / len};
        }
        const Vec nrm{-dir.y, dir.x};
        const double third = 2.0 * std::numbers::pi / 3.0;
        const double phi = std::atan2(dir.y, dir.x);
        const std::array<Vec, 3> tri{Vec{c.x + radius * std::cos(phi), c.y + radius * std::sin(phi)},
                                     Vec{c.x + radius * std::cos(phi + third), c.y + radius * std::sin(phi + third)},
                                     Vec{c.x + radius * std::cos(phi - third), c.y + radius * std::sin(phi - third)}};

        const int sx0 = std::max(fp.x0, static_cast<int>(std::floor(c.x - radius)) - 1);
        const int sy0 = std::max(fp.y0, static_cast<int>(std::floor(c.y - radius)) - 1);
        const int sx1 = std::min(fp.x0 + fp.width, static_cast<int>(std::ceil(c.x + radius)) + 2);
        const int sy1 = std::min(fp.y0 + fp.height, static_cast<int>(std::ceil(c.y + radius)) + 2);
        for (int y = sy0; y < sy1; ++y) {
            for (int x = sx0; x < sx1; ++x) {
                const Vec p{double(x), double(y)};
                const Vec rel = p - c;
                double sd = 0.0;
                switch (brush) {
                    case BrushModel::curved:
                    case BrushModel::random_raster: sd = std::sqrt(dot(rel, rel)) - radius; break;
                    case BrushModel::rectangle: sd = box_distance({dot(rel, dir), dot(rel, nrm)}, half_len, half_wid); break;
                    case BrushModel::triangle: sd = polygon_distance(p, tri); break;
                }
                auto& cell = fp.coverage[static_cast<std::size_t>(y - fp.y0) * fp.width + (x - fp.x0)];
                cell = std::max(cell, coverage_from_distance(sd));
            }
        }
    }
    if (brush == BrushModel::random_raster) {
        for (int y = fp.y0; y < fp.y0 + fp.height; ++y) {
            for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
                if (hash_unit(seed, x, y) >= kRandomRasterKeep) {
                    fp.coverage[static_cast<std::size_t>(y - fp.y0) * fp.width + (x - fp.x0)] = 0.0;
                }
            }
        }
    }
    return fp;
}

namespace {

// Source-over on one opaque sample; full coverage and equal colours are exact.
double over(double src, double dst, double a) {
    if (a >= 1.0 || src == dst) return src;
    return std::clamp(src * a + dst * (1.0 - a), 0.0, 1.0);
}

}  // namespace

void composite(RasterImage& canvas, const Footprint& fp, const std::array<double, 3>& rgb, double alpha) {
    if (!(alpha > 0.0) || fp.empty()) return;
    const int ch = canvas.channels();
    const double gray = (0.114 * rgb[2] + 0.587 * rgb[1]) + 0.299 * rgb[0];
    for (int y = fp.y0; y < fp.y0 + fp.height; ++y) {
        for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
            const double a = std::min(1.0, alpha * fp.at(x, y));
            if (!(a > 0.0)) continue;
            if (ch == 1) {
                canvas.at(x, y, 0) = over(gray, canvas.at(x, y, 0), a);
                continue;
            }
            const double da = ch == 4 ? canvas.at(x, y, 3) : 1.0;
            if (da >= 1.0) {
                for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = over(rgb[c], canvas.at(x, y, c), a);
                continue;
            }
            const double oa = std::min(1.0, a + da * (1.0 - a));
            for (int c = 0; c < 3; ++c) {
                const double v = oa > 0.0 ? (rgb[c] * a + canvas.at(x, y, c) * da * (1.0 - a)) / oa : 0.0;
                canvas.at(x, y, c) = std::clamp(v, 0.0, 1.0);
            }
            canvas.at(x, y, 3) = oa;
        }
    }
}

}  // namespace strokeforge
