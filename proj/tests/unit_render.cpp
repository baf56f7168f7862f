#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "strokeforge/brush.hpp"
#include "strokeforge/render.hpp"
#include "test_support.hpp"

using namespace strokeforge;

namespace {

Stroke bar(double x, double y, std::array<double, 4> rgba, double priority = 0.0) {
    Stroke s;
    s.x = x;
    s.y = y;
    s.theta = 0.0;
    s.length = 10;
    s.thickness = 6;
    s.size = 3;
    s.rgba = rgba;
    s.priority = priority;
    return s;
}

RasterImage muted_image(int w, int h, std::uint64_t seed) {
    auto img = sft::random_image(w, h, 3, seed);
    for (auto& v : img.data()) v = 0.35 + 0.3 * v;
    return img;
}

}  // namespace

TEST_CASE("stroke validity and clamping") {
    Stroke s = bar(5, 5, {0.2, 0.3, 0.4, 1.0});
    CHECK(stroke_violation(s, 10, 10).empty());
    s.thickness = 0;
    CHECK_FALSE(stroke_violation(s, 10, 10).empty());
    s = bar(12, 5, {0.2, 0.3, 0.4, 1.0});
    CHECK_FALSE(stroke_violation(s, 10, 10).empty());
    s.theta = 7.0;
    s.rgba[3] = 1.5;
    CHECK(clamp_stroke(s, 10, 10));
    CHECK(stroke_violation(s, 10, 10).empty());
    CHECK_FALSE(clamp_stroke(s, 10, 10));
    CHECK(parse_brush(to_string(BrushModel::random_raster)) == BrushModel::random_raster);
    CHECK(parse_texture(to_string(Texture::hatch)) == Texture::hatch);
    CHECK_FALSE(parse_brush("spray").has_value());
}

TEST_CASE("opaque stroke interior takes the stroke colour") {
    for (auto brush : {BrushModel::curved, BrushModel::rectangle, BrushModel::triangle}) {
        const auto canvas = blank_canvas(30, 30, {0.1, 0.7, 0.3, 1.0});
        const Stroke s = bar(15, 15, {0.25, 0.5, 0.75, 1.0});
        const auto out = rasterize_stroke(canvas, s, brush);
        const Footprint fp = stroke_footprint(s, brush, 30, 30);
        int interior = 0;
        for (int y = fp.y0; y < fp.y0 + fp.height; ++y)
            for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
                if (fp.at(x, y) < 1.0) continue;
                ++interior;
                CHECK(out.at(x, y, 0) == 0.25);
                CHECK(out.at(x, y, 1) == 0.5);
                CHECK(out.at(x, y, 2) == 0.75);
                CHECK(out.at(x, y, 3) == 1.0);
            }
        CHECK(interior > 0);
    }
}

TEST_CASE("transparent stroke is a no-op and half opacity blends") {
    const auto canvas = blank_canvas(20, 20, {0, 0, 0, 1});
    CHECK(rasterize_stroke(canvas, bar(10, 10, {1, 0, 0, 0}), BrushModel::rectangle) == canvas);

    const Stroke s = bar(10, 10, {1, 0, 0, 0.5});
    const auto out = rasterize_stroke(canvas, s, BrushModel::rectangle);
    const Footprint fp = stroke_footprint(s, BrushModel::rectangle, 20, 20);
    for (int y = fp.y0; y < fp.y0 + fp.height; ++y)
        for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
            if (fp.at(x, y) < 1.0) continue;
            CHECK(std::abs(out.at(x, y, 0) - 0.5) <= 1e-12);
            CHECK(out.at(x, y, 1) == 0.0);
            CHECK(out.at(x, y, 2) == 0.0);
        }
}

TEST_CASE("footprints stay in bounds and in [0,1]") {
    sft::Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const Stroke s = sft::random_stroke(rng, 40, 30);
        for (auto brush : {BrushModel::curved, BrushModel::triangle, BrushModel::rectangle, BrushModel::random_raster}) {
            const Footprint fp = stroke_footprint(s, brush, 40, 30);
            if (fp.empty()) continue;
            CHECK(fp.x0 >= 0);
            CHECK(fp.y0 >= 0);
            CHECK(fp.x0 + fp.width <= 40);
            CHECK(fp.y0 + fp.height <= 30);
            for (double c : fp.coverage) {
                CHECK(c >= 0.0);
                CHECK(c <= 1.0);
            }
        }
    }
}

TEST_CASE("empty plan renders the background") {
    RenderOptions opt;
    opt.background = {0.2, 0.4, 0.6, 1.0};
    const auto out = render_sequence({}, 7, 5, opt);
    CHECK(out == blank_canvas(7, 5, opt.background));
    CHECK(out.channels() == 4);
}

TEST_CASE("higher priority wins the overlap") {
    const std::vector<Stroke> strokes{bar(10, 10, {0, 0, 1, 1}, 0.9), bar(12, 10, {1, 0, 0, 1}, 0.1)};
    RenderOptions opt;
    const auto out = render_sequence(strokes, 24, 20, opt);
    CHECK(out.at(11, 10, 2) == 1.0);
    CHECK(out.at(11, 10, 0) == 0.0);

    opt.order_policy = OrderPolicy::input_order;
    const auto in_order = render_sequence(strokes, 24, 20, opt);
    CHECK(in_order.at(11, 10, 0) == 1.0);
    CHECK(render_order(strokes, OrderPolicy::priority_ascending) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("one-at-a-time compositing equals the batch render") {
    sft::Rng rng(3);
    std::vector<Stroke> strokes;
    for (int i = 0; i < 60; ++i) strokes.push_back(sft::random_stroke(rng, 48, 40));
    for (auto brush : {BrushModel::curved, BrushModel::triangle, BrushModel::rectangle, BrushModel::random_raster}) {
        RenderOptions opt;
        opt.brush = brush;
        auto canvas = blank_canvas(48, 40, opt.background);
        for (std::size_t i : render_order(strokes, opt.order_policy)) canvas = rasterize_stroke(canvas, strokes[i], brush);
        const auto batch = render_sequence(strokes, 48, 40, opt);
        CHECK(canvas == batch);
        CHECK(render_sequence(strokes, 48, 40, opt) == batch);
    }
}

TEST_CASE("disjoint strokes commute") {
    const Stroke a = bar(8, 8, {1, 0, 0, 0.7}, 0.5);
    const Stroke b = bar(30, 25, {0, 1, 0, 0.6}, 0.5);
    RenderOptions opt;
    opt.order_policy = OrderPolicy::input_order;
    const std::vector<Stroke> ab{a, b}, ba{b, a};
    CHECK(render_sequence(ab, 40, 34, opt) == render_sequence(ba, 40, 34, opt));
}

TEST_CASE("textures thin the footprint") {
    Stroke s = bar(20, 20, {0, 0, 0, 1});
    s.length = 20;
    s.thickness = 12;
    const double solid = stroke_footprint(s, BrushModel::rectangle, 40, 40).total();
    s.texture = Texture::stipple;
    const double stipple = stroke_footprint(s, BrushModel::rectangle, 40, 40).total();
    s.texture = Texture::hatch;
    const double hatch = stroke_footprint(s, BrushModel::rectangle, 40, 40).total();
    CHECK(stipple < solid);
    CHECK(hatch < solid);
    CHECK(stipple > 0.0);
    CHECK(hatch > 0.0);
}

TEST_CASE("post-processing identities") {
    const auto img = muted_image(24, 20, 5);
    CHECK(post_process(img, {}) == img);
    PostOptions zero;
    zero.edge_enhance = 0.0;
    CHECK(post_process(img, zero) == img);
}

TEST_CASE("full harmonize sets every chroma to the mean") {
    const auto img = muted_image(16, 12, 6);
    const auto out = harmonize_colors(img, 1.0);
    double m1 = 0, m2 = 0;
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) {
            const auto c = opponent_chroma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
            m1 += c[0];
            m2 += c[1];
        }
    m1 /= 192;
    m2 /= 192;
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) {
            const auto c = opponent_chroma(out.at(x, y, 0), out.at(x, y, 1), out.at(x, y, 2));
            CHECK(std::abs(c[0] - m1) <= 1e-12);
            CHECK(std::abs(c[1] - m2) <= 1e-12);
            const double l0 = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            const double l1 = 0.299 * out.at(x, y, 0) + 0.587 * out.at(x, y, 1) + 0.114 * out.at(x, y, 2);
            CHECK(std::abs(l0 - l1) <= 1e-12);
        }
}

TEST_CASE("post-processing output stays in range") {
    sft::Rng rng(9);
    for (int t = 0; t < 10; ++t) {
        const auto img = sft::random_image(20, 16, rng.below(2) ? 3 : 4, 100 + t);
        PostOptions p;
        p.edge_enhance = 5.0 * rng.uniform();
        p.denoise = 3.0 * rng.uniform();
        p.harmonize = rng.uniform();
        const auto out = post_process(img, p);
        for (double v : out.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("render options validation") {
    RenderOptions opt;
    CHECK_NOTHROW(opt.validate());
    opt.post.harmonize = 1.5;
    CHECK_THROWS(opt.validate());
    opt = {};
    opt.post.denoise = -1.0;
    CHECK_THROWS(opt.validate());
}
