#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "strokeforge/features.hpp"
#include "strokeforge/kernels.hpp"
#include "test_support.hpp"

using namespace strokeforge;

namespace {

// Direct 2-D Gaussian with clamped reads, normalized.
ScalarField brute_blur(const ScalarField& f, double sigma) {
    const int r = static_cast<int>(std::ceil(3 * sigma));
    double norm = 0.0;
    for (int i = -r; i <= r; ++i) norm += std::exp(-i * i / (2 * sigma * sigma));
    ScalarField out(f.width(), f.height());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            double acc = 0.0;
            for (int j = -r; j <= r; ++j)
                for (int i = -r; i <= r; ++i) {
                    const double w = std::exp(-i * i / (2 * sigma * sigma)) * std::exp(-j * j / (2 * sigma * sigma));
                    acc += w * f.at(clamp_index(x + i, f.width()), clamp_index(y + j, f.height()));
                }
            out.at(x, y) = acc / (norm * norm);
        }
    return out;
}

RasterImage vertical_step(int w, int h, int at) {
    RasterImage img(w, h, 3, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = at; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0;
    return img;
}

}  // namespace

TEST_CASE("edges of a constant image vanish") {
    for (double t : {0.0, 0.3, 1.0}) {
        const auto e = extract_edges(sft::constant_rgb(12, 10, 0.2, 0.4, 0.6), t);
        for (double v : e.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("threshold 0 gives the normalized gradient magnitude") {
    const auto img = sft::random_image(14, 11, 3, 2);
    const auto e = extract_edges(img, 0.0);
    const auto mag = gradient_magnitude_and_angle(sobel_gradients(luminance(img))).magnitude;
    const double peak = mag.max_value();
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(e.data()[i] == mag.data()[i] / peak);
    CHECK_THROWS_AS(extract_edges(img, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(extract_edges(img, -0.1), std::invalid_argument);
}

TEST_CASE("vertical step edges sit in a two-pixel band") {
    const auto e = extract_edges(vertical_step(16, 8, 8), 0.5);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x) {
            // Sobel gx is 4 at columns 7 and 8 and zero elsewhere.
            if (x == 7 || x == 8) {
                CHECK(e.at(x, y) == 1.0);
            } else {
                CHECK(e.at(x, y) == 0.0);
            }
        }
}

TEST_CASE("saliency basics") {
    const auto flat = compute_saliency(sft::constant_rgb(20, 20, 0.5, 0.5, 0.5));
    for (double v : flat.data()) CHECK(v == 0.0);
    CHECK_THROWS_AS(compute_saliency(sft::constant_rgb(15, 40, 0, 0, 0)), std::invalid_argument);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto s = compute_saliency(sft::random_image(24, 17, 3, seed));
        CHECK(s.min_value() >= 0.0);
        CHECK(s.max_value() == doctest::Approx(1.0));
    }
}

TEST_CASE("saliency peaks inside a lone disc") {
    struct Disc {
        int w, h;
        double cx, cy, r;
    };
    for (const Disc d : {Disc{64, 64, 20, 24, 6}, Disc{64, 48, 45, 30, 5}, Disc{80, 64, 40, 32, 8}}) {
        const auto s = compute_saliency(sft::disc_image(d.w, d.h, d.cx, d.cy, d.r));
        const auto data = s.data();
        const auto it = std::max_element(data.begin(), data.end());
        const auto idx = static_cast<int>(it - data.begin());
        const int x = idx % d.w, y = idx / d.w;
        CHECK(std::hypot(x - d.cx, y - d.cy) <= d.r);
    }
}

TEST_CASE("density fallback and formula") {
    const auto uniform = estimate_density(ScalarField(10, 9), ScalarField(10, 9), 2.0);
    for (double v : uniform.data()) CHECK(v == 1.0);

    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto e = sft::random_field(18, 13, seed);
        const auto s = sft::random_field(18, 13, seed + 7);
        const auto d = estimate_density(e, s, 1.5);
        ScalarField blend(18, 13);
        for (std::size_t i = 0; i < blend.size(); ++i) blend.data()[i] = 0.5 * e.data()[i] + 0.5 * s.data()[i];
        auto expect = brute_blur(blend, 1.5);
        const double peak = expect.max_value();
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(d.data()[i] == doctest::Approx(expect.data()[i] / peak).epsilon(1e-12));
    }

    const auto edges_only = estimate_density(sft::random_field(12, 12, 4), ScalarField(12, 12), 1.0);
    CHECK(edges_only.max_value() == doctest::Approx(1.0));
}

TEST_CASE("voronoi partition") {
    const ScalarField flat(16, 16, 1.0);
    const auto one = voronoi_partition(16, 16, 1, flat, 5);
    for (int l : one.labels) CHECK(l == 0);

    const auto a = voronoi_partition(16, 16, 4, flat, 42);
    const auto b = voronoi_partition(16, 16, 4, flat, 42);
    CHECK(a.seeds == b.seeds);
    CHECK(a.labels == b.labels);

    CHECK_THROWS_AS(voronoi_partition(4, 4, 17, ScalarField(4, 4, 1.0), 0), std::invalid_argument);
    CHECK_THROWS_AS(voronoi_partition(4, 4, 0, ScalarField(4, 4, 1.0), 0), std::invalid_argument);
}

TEST_CASE("voronoi labels form a nearest-seed partition") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto density = sft::random_field(21, 17, seed + 300);
        const int count = 5 + int(seed) * 3;
        const auto p = voronoi_partition(21, 17, count, density, seed);
        REQUIRE(p.seeds.size() == std::size_t(count));
        std::set<std::pair<int, int>> distinct;
        for (auto s : p.seeds) distinct.insert({s.x, s.y});
        CHECK(distinct.size() == p.seeds.size());
        std::vector<int> area(count, 0);
        for (int y = 0; y < 17; ++y)
            for (int x = 0; x < 21; ++x) {
                const int l = p.label_at(x, y);
                REQUIRE(l >= 0);
                REQUIRE(l < count);
                ++area[l];
                // Oracle: nearest seed, ties to the lowest index.
                int best = 0;
                double bd = 1e300;
                for (int i = 0; i < count; ++i) {
                    const double d = std::hypot(x - p.seeds[i].x, y - p.seeds[i].y);
                    if (d < bd) {
                        bd = d;
                        best = i;
                    }
                }
                CHECK(l == best);
            }
        for (int a : area) CHECK(a > 0);
    }
}

TEST_CASE("weighted sampling favours dense regions") {
    ScalarField density(32, 32, 0.1);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 16; ++x) density.at(x, y) = 1.0;
    int left = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto p = voronoi_partition(32, 32, 8, density, seed);
        for (auto s : p.seeds) {
            left += s.x < 16 ? 1 : 0;
            ++total;
        }
    }
    CHECK(double(left) / total >= 0.7);
}

TEST_CASE("candidate weights follow the linear formula") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto bundle = sft::random_bundle(30, 24, seed);
        const FeatureWeights w{0.7, 1.3, 0.4};
        const auto cands = generate_candidates(bundle, w, 200, seed);
        REQUIRE(cands.size() == 200);
        for (const auto& c : cands) {
            const double e = bundle.edges.at(c.anchor.x, c.anchor.y);
            const double s = bundle.saliency.at(c.anchor.x, c.anchor.y);
            const double d = bundle.density.at(c.anchor.x, c.anchor.y);
            CHECK(std::abs(c.weight - (0.7 * e + 1.3 * s + 0.4 * d)) <= 1e-12);
        }
        for (std::size_t i = 1; i < cands.size(); ++i) {
            const auto& a = cands[i - 1];
            const auto& b = cands[i];
            const bool ordered = a.weight > b.weight ||
                                 (a.weight == b.weight && (a.anchor.y < b.anchor.y ||
                                                           (a.anchor.y == b.anchor.y && a.anchor.x < b.anchor.x)));
            CHECK(ordered);
        }
    }
}

TEST_CASE("basis weight vectors") {
    const auto bundle = sft::random_bundle(20, 20, 9);
    for (const auto& c : generate_candidates(bundle, {1, 0, 0}, 40, 1)) {
        CHECK(c.weight == bundle.edges.at(c.anchor.x, c.anchor.y));
    }
    FeatureBundle flat = bundle;
    flat.density = ScalarField(20, 20, 1.0);
    for (const auto& c : generate_candidates(flat, {0, 0, 1}, 40, 1)) CHECK(c.weight == 1.0);
    CHECK_THROWS_AS(generate_candidates(bundle, {0, 0, 0}, 4, 0), std::invalid_argument);
}

TEST_CASE("weight linearity in alpha_e") {
    const auto bundle = sft::random_bundle(16, 16, 3);
    sft::Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const PixelCoord p{int(rng.below(16)), int(rng.below(16))};
        const double a = rng.uniform(), extra = rng.uniform(), b = rng.uniform(), c = rng.uniform();
        const double lhs = candidate_weight(bundle, {a + extra, b, c}, p);
        const double rhs = candidate_weight(bundle, {a, b, c}, p) + extra * bundle.edges.at(p.x, p.y);
        CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("uniform weight scaling keeps candidate order") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto bundle = sft::random_bundle(24, 20, seed + 20);
        const auto base = generate_candidates(bundle, {0.5, 0.25, 0.125}, 60, seed);
        const auto scaled = generate_candidates(bundle, {2.0, 1.0, 0.5}, 60, seed);
        REQUIRE(base.size() == scaled.size());
        for (std::size_t i = 0; i < base.size(); ++i) CHECK(base[i].anchor == scaled[i].anchor);
    }
}

TEST_CASE("feature extraction is deterministic and bounded") {
    const auto img = sft::test_photo(48, 40, 1);
    const auto a = extract_features(img, {});
    const auto b = extract_features(img, {});
    CHECK(a.edges == b.edges);
    CHECK(a.saliency == b.saliency);
    CHECK(a.density == b.density);
    for (const ScalarField* f : {&a.edges, &a.saliency, &a.density}) {
        CHECK(f->min_value() >= 0.0);
        CHECK(f->max_value() <= 1.0);
    }
    const auto c1 = generate_candidates(a, {}, 100, 3);
    const auto c2 = generate_candidates(b, {}, 100, 3);
    REQUIRE(c1.size() == c2.size());
    for (std::size_t i = 0; i < c1.size(); ++i) {
        CHECK(c1[i].anchor == c2[i].anchor);
        CHECK(c1[i].weight == c2[i].weight);
    }
}
