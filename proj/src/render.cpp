#include "strokeforge/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "strokeforge/kernels.hpp"

namespace strokeforge {

void RenderOptions::validate() const {
    for (double c : background) {
        if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("background components must lie in [0,1]");
    }
    if (post.edge_enhance && !std::isfinite(*post.edge_enhance)) {
        throw std::invalid_argument("edge_enhance amount must be finite");
    }
    if (post.denoise && !(*post.denoise >= 0.0 && std::isfinite(*post.denoise))) {
        throw std::invalid_argument("denoise radius must be >= 0");
    }
    if (post.harmonize && !(*post.harmonize >= 0.0 && *post.harmonize <= 1.0)) {
        throw std::invalid_argument("harmonize strength must lie in [0,1]");
    }
}

void rasterize_stroke_into(RasterImage& canvas, const Stroke& stroke, BrushModel brush) {
    if (!(stroke.rgba[3] > 0.0)) return;
    const Footprint fp = stroke_footprint(stroke, brush, canvas.width(), canvas.height());
    composite(canvas, fp, {stroke.rgba[0], stroke.rgba[1], stroke.rgba[2]}, stroke.rgba[3]);
}

RasterImage rasterize_stroke(RasterImage canvas, const Stroke& stroke, BrushModel brush) {
    rasterize_stroke_into(canvas, stroke, brush);
    return canvas;
}

RasterImage blank_canvas(int width, int height, const std::array<double, 4>& background) {
    RasterImage canvas(width, height, 4);
    auto d = canvas.data();
    for (std::size_t i = 0; i < canvas.pixel_count(); ++i) {
        for (int c = 0; c < 4; ++c) d[i * 4 + c] = background[c];
    }
    return canvas;
}

std::vector<std::size_t> render_order(std::span<const Stroke> strokes, OrderPolicy policy) {
    std::vector<std::size_t> order(strokes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (policy == OrderPolicy::priority_ascending) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return strokes[a].priority < strokes[b].priority; });
    }
    return order;
}

RasterImage render_sequence(std::span<const Stroke> strokes, int width, int height, const RenderOptions& options) {
    options.validate();
    RasterImage canvas = blank_canvas(width, height, options.background);
    for (std::size_t i : render_order(strokes, options.order_policy)) {
        rasterize_stroke_into(canvas, strokes[i], options.brush);
    }
    return post_process(canvas, options.post);
}

std::array<double, 2> opponent_chroma(double r, double g, double b) { return {r - g, b - 0.5 * (r + g)}; }

RasterImage unsharp_mask(const RasterImage& image, double amount) {
    if (amount == 0.0) return image;
    const RasterImage blurred = gaussian_blur(image, kUnsharpSigma);
    RasterImage out = image;
    const int cc = std::min(image.channels(), 3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < cc; ++c) {
                const double v = image.at(x, y, c);
                out.at(x, y, c) = std::clamp(v + amount * (v - blurred.at(x, y, c)), 0.0, 1.0);
            }
        }
    }
    return out;
}

RasterImage harmonize_colors(const RasterImage& image, double strength) {
    if (image.channels() < 3 || strength == 0.0) return image;
    const std::size_t n = image.pixel_count();
    double m1 = 0.0;
    double m2 = 0.0;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const auto ch = opponent_chroma(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));
            m1 += ch[0];
            m2 += ch[1];
        }
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);

    RasterImage out = image;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const double r = image.at(x, y, 0);
            const double g = image.at(x, y, 1);
            const double b = image.at(x, y, 2);
            const double lum = 0.299 * r + 0.587 * g + 0.114 * b;
            const auto ch = opponent_chroma(r, g, b);
            const double c1 = (1.0 - strength) * ch[0] + strength * m1;
            const double c2 = (1.0 - strength) * ch[1] + strength * m2;
            // Invert (lum, c1, c2) -> RGB; the luma weights sum to one.
            const double nr = lum + 0.644 * c1 - 0.114 * c2;
            const double ng = nr - c1;
            const double nb = c2 + nr - 0.5 * c1;
            out.at(x, y, 0) = std::clamp(nr, 0.0, 1.0);
            out.at(x, y, 1) = std::clamp(ng, 0.0, 1.0);
            out.at(x, y, 2) = std::clamp(nb, 0.0, 1.0);
        }
    }
    return out;
}

RasterImage post_process(const RasterImage& image, const PostOptions& post) {
    RasterImage out = image;
    if (post.denoise && *post.denoise > 0.0) out = bilateral_filter(out, *post.denoise, kDenoiseRangeSigma);
    if (post.edge_enhance) out = unsharp_mask(out, *post.edge_enhance);
    if (post.harmonize) out = harmonize_colors(out, *post.harmonize);
    return out;
}

}  // namespace strokeforge
