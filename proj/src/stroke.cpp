#include "strokeforge/stroke.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "strokeforge/kernels.hpp"

namespace strokeforge {

std::string_view to_string(Texture t) {
    switch (t) {
        case Texture::solid: return "solid";
        case Texture::stipple: return "stipple";
        case Texture::hatch: return "hatch";
    }
    return "solid";
}

std::string_view to_string(BrushModel b) {
    switch (b) {
        case BrushModel::curved: return "curved";
        case BrushModel::triangle: return "triangle";
        case BrushModel::rectangle: return "rectangle";
        case BrushModel::random_raster: return "random_raster";
    }
    return "curved";
}

std::optional<Texture> parse_texture(std::string_view s) {
    if (s == "solid") return Texture::solid;
    if (s == "stipple") return Texture::stipple;
    if (s == "hatch") return Texture::hatch;
    return std::nullopt;
}

std::optional<BrushModel> parse_brush(std::string_view s) {
    if (s == "curved") return BrushModel::curved;
    if (s == "triangle") return BrushModel::triangle;
    if (s == "rectangle") return BrushModel::rectangle;
    if (s == "random_raster") return BrushModel::random_raster;
    return std::nullopt;
}

std::string stroke_violation(const Stroke& s, int width, int height) {
    if (!(s.x >= 0.0 && s.x <= width - 1.0 && s.y >= 0.0 && s.y <= height - 1.0)) return "anchor outside image";
    if (!(s.theta > -std::numbers::pi && s.theta <= std::numbers::pi)) return "orientation not in (-pi, pi]";
    if (!(s.length >= 0.0) || !std::isfinite(s.length)) return "negative or non-finite length";
    if (!(s.thickness > 0.0) || !std::isfinite(s.thickness)) return "thickness must be positive";
    if (!(s.size > 0.0) || !std::isfinite(s.size)) return "size must be positive";
    for (double c : s.rgba) {
        if (!(c >= 0.0 && c <= 1.0)) return "color component outside [0,1]";
    }
    if (!std::isfinite(s.weight) || !std::isfinite(s.priority)) return "non-finite weight or priority";
    return {};
}

namespace {

constexpr double kMinExtent = 0.5;

bool assign(double& field, double value) {
    if (field == value || (std::isnan(field) && std::isnan(value))) return false;
    field = value;
    return true;
}

double finite_or(double v, double fallback) { return std::isfinite(v) ? v : fallback; }

}  // namespace

bool clamp_stroke(Stroke& s, int width, int height) {
    bool changed = false;
    changed |= assign(s.x, std::clamp(finite_or(s.x, 0.0), 0.0, width - 1.0));
    changed |= assign(s.y, std::clamp(finite_or(s.y, 0.0), 0.0, height - 1.0));
    changed |= assign(s.theta, normalize_angle(finite_or(s.theta, 0.0)));
    changed |= assign(s.length, std::max(finite_or(s.length, 0.0), 0.0));
    if (!(s.thickness > 0.0) || !std::isfinite(s.thickness)) changed |= assign(s.thickness, kMinExtent);
    if (!(s.size > 0.0) || !std::isfinite(s.size)) changed |= assign(s.size, kMinExtent);
    for (double& c : s.rgba) changed |= assign(c, std::clamp(finite_or(c, 0.0), 0.0, 1.0));
    changed |= assign(s.weight, finite_or(s.weight, 0.0));
    changed |= assign(s.priority, finite_or(s.priority, 0.0));
    return changed;
}

}  // namespace strokeforge
