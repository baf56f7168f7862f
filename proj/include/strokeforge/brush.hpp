#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "strokeforge/raster.hpp"
#include "strokeforge/stroke.hpp"

namespace strokeforge {

/// Anti-aliased coverage of a shape over a clipped pixel window.
struct Footprint {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
    std::vector<double> coverage;  // row-major over the window, each in [0,1]

    bool empty() const { return width <= 0 || height <= 0; }
    double at(int x, int y) const { return coverage[static_cast<std::size_t>(y - y0) * width + (x - x0)]; }
    double total() const;
};

/// Keep probability of the random-raster brush.
inline constexpr double kRandomRasterKeep = 0.7;
inline constexpr double kStippleKeep = 0.6;

/// Footprint of a planned stroke within a width x height image.
Footprint stroke_footprint(const Stroke& stroke, BrushModel brush, int width, int height);

/// Footprint of a painterly polyline stamped with a brush of the given radius.
Footprint polyline_footprint(std::span<const Point2> points, double radius, BrushModel brush, std::uint64_t seed,
                             int width, int height);

/// Source-over composite of `rgb` at `alpha` x coverage. Canvases with 3
/// channels are treated as opaque; 4-channel canvases carry their own alpha;
/// 1-channel canvases receive the colour's luminance.
void composite(RasterImage& canvas, const Footprint& fp, const std::array<double, 3>& rgb, double alpha);

}  // namespace strokeforge
