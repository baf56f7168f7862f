#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "strokeforge/raster.hpp"
#include "strokeforge/stroke.hpp"

namespace strokeforge {

struct LayerSpec {
    double radius = 8.0;           // brush radius, pixels
    double error_threshold = 0.1;  // T, mean RGB distance in [0,1] units
    double grid_step_factor = 1.0;

    int grid_step() const;
    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct PainterlyConfig {
    std::vector<LayerSpec> layers{{8.0, 0.1, 1.0}, {4.0, 0.1, 1.0}, {2.0, 0.1, 1.0}};
    std::optional<int> quantize_levels;
    int max_stroke_len = 16;  // control points
    int min_stroke_len = 4;   // control points
    double opacity = 1.0;
    double curvature_filter = 1.0;
    BrushModel brush = BrushModel::curved;
    std::uint64_t rng_seed = 0;

    void validate() const;
    friend bool operator==(const PainterlyConfig&, const PainterlyConfig&) = default;
};

/// A traced brush path. `points[0]` is the seed pixel.
struct PaintStroke {
    std::vector<Point2> points;
    std::array<double, 3> color{};
    double radius = 1.0;
    int layer = 0;
};

struct LayerResult {
    RasterImage canvas;
    std::vector<PaintStroke> strokes;  // in paint order
};

struct PainterlyResult {
    RasterImage image;
    std::vector<PaintStroke> strokes;         // concatenated paint order
    std::vector<RasterImage> layer_canvases;  // canvas after each layer
};

/// v -> round(v (n-1)) / (n-1) on colour channels, halves rounded up.
RasterImage quantize_tones(const RasterImage& image, int levels);

/// `canvas` may be null for the first layer, whose canvas is undefined.
PaintStroke trace_curved_stroke(Point2 start, const RasterImage& reference, const GradientField& gradients,
                                const RasterImage* canvas, const LayerSpec& spec, const PainterlyConfig& config);

LayerResult paint_layer(RasterImage canvas, const RasterImage& reference, const LayerSpec& spec, BrushModel brush,
                        const PainterlyConfig& config, bool first_layer, int layer_index = 0);

PainterlyResult render_painterly(const RasterImage& image, const PainterlyConfig& config);

}  // namespace strokeforge
