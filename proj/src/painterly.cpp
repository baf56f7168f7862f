#include "strokeforge/painterly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "strokeforge/brush.hpp"
#include "strokeforge/kernels.hpp"
#include "strokeforge/rng.hpp"

namespace strokeforge {

int LayerSpec::grid_step() const { return std::max(1, static_cast<int>(std::lround(grid_step_factor * radius))); }

void PainterlyConfig::validate() const {
    if (layers.empty()) throw std::invalid_argument("painterly: at least one layer is required");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (!(l.radius >= 1.0) || !std::isfinite(l.radius)) throw std::invalid_argument("painterly: layer radius must be >= 1");
        if (!(l.error_threshold >= 0.0)) throw std::invalid_argument("painterly: error_threshold must be >= 0");
        if (!(l.grid_step_factor > 0.0) || !std::isfinite(l.grid_step_factor)) {
            throw std::invalid_argument("painterly: grid_step_factor must be > 0");
        }
        if (i > 0 && !(l.radius < layers[i - 1].radius)) {
            throw std::invalid_argument("painterly: layer radii must be strictly decreasing");
        }
    }
    if (quantize_levels && *quantize_levels < 2) throw std::invalid_argument("painterly: quantize_levels must be >= 2");
    if (min_stroke_len < 1 || max_stroke_len < 1) throw std::invalid_argument("painterly: stroke lengths must be >= 1");
    if (min_stroke_len > max_stroke_len) throw std::invalid_argument("painterly: min_stroke_len exceeds max_stroke_len");
    if (!(opacity >= 0.0 && opacity <= 1.0)) throw std::invalid_argument("painterly: opacity must lie in [0,1]");
    if (!(curvature_filter >= 0.0 && curvature_filter <= 1.0)) {
        throw std::invalid_argument("painterly: curvature_filter must lie in [0,1]");
    }
}

RasterImage quantize_tones(const RasterImage& image, int levels) {
    if (levels < 2) throw std::invalid_argument("quantize_tones: levels must be >= 2");
    const double steps = levels - 1;
    RasterImage out = image;
    const int cc = std::min(image.channels(), 3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < cc; ++c) {
                out.at(x, y, c) = std::floor(image.at(x, y, c) * steps + 0.5) / steps;
            }
        }
    }
    return out;
}

namespace {

std::array<double, 3> color_at(const RasterImage& img, int x, int y) {
    return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

double color_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

std::uint64_t layer_seed(std::uint64_t seed, int layer) { return mix64(seed ^ mix64(static_cast<std::uint64_t>(layer) + 1)); }

}  // namespace

PaintStroke trace_curved_stroke(Point2 start, const RasterImage& reference, const GradientField& gradients,
                                const RasterImage* canvas, const LayerSpec& spec, const PainterlyConfig& config) {
    const int w = reference.width();
    const int h = reference.height();
    const int sx = clamp_index(static_cast<int>(std::lround(start.x)), w);
    const int sy = clamp_index(static_cast<int>(std::lround(start.y)), h);

    PaintStroke stroke;
    stroke.radius = spec.radius;
    stroke.color = color_at(reference, sx, sy);
    stroke.points.push_back(start);

    double last_dx = 0.0;
    double last_dy = 0.0;
    bool has_last = false;
    const double fc = config.curvature_filter;

    while (static_cast<int>(stroke.points.size()) < config.max_stroke_len) {
        const Point2 p = stroke.points.back();
        const int px = clamp_index(static_cast<int>(std::lround(p.x)), w);
        const int py = clamp_index(static_cast<int>(std::lround(p.y)), h);
        const bool past_min = static_cast<int>(stroke.points.size()) >= config.min_stroke_len;

        if (past_min && canvas != nullptr) {
            const auto ref = color_at(reference, px, py);
            if (color_distance(ref, color_at(*canvas, px, py)) < color_distance(ref, stroke.color)) break;
        }

        const double gx = gradients.gx.at(px, py);
        const double gy = gradients.gy.at(px, py);
        const double mag = std::sqrt(gx * gx + gy * gy);
        double dx = 0.0;
        double dy = 1.0;  // degenerate gradient: angle 0 rotated onto the contour
        if (mag < kDegenerateGradient) {
            if (past_min) break;
        } else {
            dx = -gy / mag;
            dy = gx / mag;
        }
        if (has_last) {
            if (last_dx * dx + last_dy * dy < 0.0) {
                dx = -dx;
                dy = -dy;
            }
            dx = fc * dx + (1.0 - fc) * last_dx;
            dy = fc * dy + (1.0 - fc) * last_dy;
            const double n = std::sqrt(dx * dx + dy * dy);
            if (n > 0.0) {
                dx /= n;
                dy /= n;
            } else {
                dx = last_dx;
                dy = last_dy;
            }
        }
        const Point2 next{p.x + spec.radius * dx, p.y + spec.radius * dy};
        if (next.x < 0.0 || next.x > w - 1.0 || next.y < 0.0 || next.y > h - 1.0) break;
        stroke.points.push_back(next);
        last_dx = dx;
        last_dy = dy;
        has_last = true;
    }
    return stroke;
}

LayerResult paint_layer(RasterImage canvas, const RasterImage& reference, const LayerSpec& spec, BrushModel brush,
                        const PainterlyConfig& config, bool first_layer, int layer_index) {
    if (canvas.width() != reference.width() || canvas.height() != reference.height()) {
        throw std::invalid_argument("paint_layer: canvas and reference dimensions differ");
    }
    if (canvas.channels() < 3 || reference.channels() < 3) {
        throw std::invalid_argument("paint_layer: canvas and reference must be RGB");
    }
    const RasterImage ref = to_rgb(reference);
    canvas = to_rgb(canvas);

    const CellGrid grid{ref.width(), ref.height(), spec.grid_step()};
    const auto errors = cell_errors(canvas, ref, grid);
    const GradientField gradients = sobel_gradients(luminance(ref));
    const RasterImage* canvas_for_trace = first_layer ? nullptr : &canvas;

    std::vector<std::optional<PaintStroke>> traced(errors.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(errors.size()); ++i) {
        const CellError& e = errors[i];
        if (!first_layer && !(e.mean > spec.error_threshold)) continue;
        PaintStroke s = trace_curved_stroke({double(e.argmax_x), double(e.argmax_y)}, ref, gradients,
                                            canvas_for_trace, spec, config);
        s.layer = layer_index;
        traced[i] = std::move(s);
    }

    LayerResult result;
    for (auto& s : traced) {
        if (s) result.strokes.push_back(std::move(*s));
    }

    const std::uint64_t seed = layer_seed(config.rng_seed, layer_index);
    Rng rng(seed);
    rng.shuffle(result.strokes);
    for (std::size_t i = 0; i < result.strokes.size(); ++i) {
        const auto& s = result.strokes[i];
        const Footprint fp =
            polyline_footprint(s.points, s.radius, brush, mix64(seed + i), canvas.width(), canvas.height());
        composite(canvas, fp, s.color, config.opacity);
    }
    result.canvas = std::move(canvas);
    return result;
}

PainterlyResult render_painterly(const RasterImage& image, const PainterlyConfig& config) {
    config.validate();
    RasterImage reference = to_rgb(image);
    if (config.quantize_levels) reference = quantize_tones(reference, *config.quantize_levels);

    PainterlyResult result;
    RasterImage canvas(reference.width(), reference.height(), 3, 0.0);
    for (std::size_t k = 0; k < config.layers.size(); ++k) {
        const LayerSpec& spec = config.layers[k];
        const RasterImage blurred = gaussian_blur(reference, spec.radius);
        LayerResult layer = paint_layer(std::move(canvas), blurred, spec, config.brush, config, k == 0,
                                        static_cast<int>(k));
        canvas = std::move(layer.canvas);
        result.strokes.insert(result.strokes.end(), std::make_move_iterator(layer.strokes.begin()),
                              std::make_move_iterator(layer.strokes.end()));
        result.layer_canvases.push_back(canvas);
    }
    result.image = std::move(canvas);
    return result;
}

}  // namespace strokeforge
