#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "strokeforge/brush.hpp"
#include "strokeforge/raster.hpp"
#include "strokeforge/stroke.hpp"

namespace strokeforge {

enum class OrderPolicy { priority_ascending, input_order };

struct PostOptions {
    std::optional<double> edge_enhance;  // unsharp amount
    std::optional<double> denoise;       // bilateral spatial sigma, pixels
    std::optional<double> harmonize;     // chroma pull strength in [0,1]

    friend bool operator==(const PostOptions&, const PostOptions&) = default;
};

struct RenderOptions {
    std::array<double, 4> background{1.0, 1.0, 1.0, 1.0};
    OrderPolicy order_policy = OrderPolicy::priority_ascending;
    BrushModel brush = BrushModel::rectangle;
    PostOptions post;

    void validate() const;
    friend bool operator==(const RenderOptions&, const RenderOptions&) = default;
};

inline constexpr double kDenoiseRangeSigma = 0.1;
inline constexpr double kUnsharpSigma = 1.5;

RasterImage rasterize_stroke(RasterImage canvas, const Stroke& stroke, BrushModel brush);

/// Composite onto `canvas` in place (no copy); used by the renderers' inner loops.
void rasterize_stroke_into(RasterImage& canvas, const Stroke& stroke, BrushModel brush);

/// Background-filled RGBA canvas.
RasterImage blank_canvas(int width, int height, const std::array<double, 4>& background);

/// Indices of `strokes` in the order the policy composites them.
std::vector<std::size_t> render_order(std::span<const Stroke> strokes, OrderPolicy policy);

RasterImage render_sequence(std::span<const Stroke> strokes, int width, int height, const RenderOptions& options);

/// denoise -> edge_enhance -> harmonize, each only when present.
RasterImage post_process(const RasterImage& image, const PostOptions& post);

RasterImage harmonize_colors(const RasterImage& image, double strength);
RasterImage unsharp_mask(const RasterImage& image, double amount);

/// Opponent chroma axes (R - G, B - (R + G) / 2).
std::array<double, 2> opponent_chroma(double r, double g, double b);

}  // namespace strokeforge
