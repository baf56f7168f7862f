#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace strokeforge {

enum class Texture { solid, stipple, hatch };

enum class BrushModel { curved, triangle, rectangle, random_raster };

std::string_view to_string(Texture t);
std::string_view to_string(BrushModel b);
std::optional<Texture> parse_texture(std::string_view s);
std::optional<BrushModel> parse_brush(std::string_view s);

/// One renderable stroke: a straight spine of `length` centred on the anchor,
/// oriented by `theta`, with width `thickness` and brush radius `size`.
/// Opacity lives in rgba[3].
struct Stroke {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // (-pi, pi]
    double length = 0.0;
    double thickness = 1.0;
    double size = 1.0;
    std::array<double, 4> rgba{0.0, 0.0, 0.0, 1.0};
    Texture texture = Texture::solid;
    double weight = 0.0;
    double priority = 0.0;

    friend bool operator==(const Stroke&, const Stroke&) = default;
};

/// Empty string when `s` satisfies every stroke invariant for a width x height image,
/// otherwise a description of the first violation.
std::string stroke_violation(const Stroke& s, int width, int height);

/// Force a stroke back into its invariants. Returns true if anything changed.
bool clamp_stroke(Stroke& s, int width, int height);

}  // namespace strokeforge
