#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "httplib.h"
#include "json.hpp"
#include "strokeforge/config.hpp"
#include "strokeforge/image_io.hpp"
#include "strokeforge/kernels.hpp"
#include "strokeforge/neural.hpp"
#include "strokeforge/painterly.hpp"
#include "strokeforge/pipeline.hpp"
#include "strokeforge/plan_codec.hpp"
#include "strokeforge/planning.hpp"
#include "strokeforge/render.hpp"
#include "strokeforge/service.hpp"
#include "test_support.hpp"

#ifndef STROKEFORGE_CLI_PATH
#error "STROKEFORGE_CLI_PATH must point at the CLI binary"
#endif

using namespace strokeforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool bit_equal(const Stroke& a, const Stroke& b) {
    bool ok = same_bits(a.x, b.x) && same_bits(a.y, b.y) && same_bits(a.theta, b.theta) &&
              same_bits(a.length, b.length) && same_bits(a.thickness, b.thickness) && same_bits(a.size, b.size) &&
              same_bits(a.weight, b.weight) && same_bits(a.priority, b.priority) && a.texture == b.texture;
    for (int k = 0; k < 4; ++k) ok = ok && same_bits(a.rgba[k], b.rgba[k]);
    return ok;
}

bool between(double v, double a, double b) { return v >= std::min(a, b) && v <= std::max(a, b); }

std::string slurp(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return {bytes.begin(), bytes.end()};
}

// 1
Outcome blend_endpoints() {
    Outcome o;
    sft::Rng rng(1001);
    for (int i = 0; i < 1000; ++i) {
        const Stroke h = sft::random_stroke(rng, 256, 256);
        const Stroke r = sft::random_stroke(rng, 256, 256);
        o.require(bit_equal(blend_correction(h, r, 0.0), h), "gamma 0 differs from heuristic at pair " + std::to_string(i));
        o.require(bit_equal(blend_correction(h, r, 1.0), r), "gamma 1 differs from refined at pair " + std::to_string(i));
    }
    o.detail = o.ok ? "1000 pairs" : o.detail;
    return o;
}

// 2
std::vector<std::size_t> priority_order(const std::vector<Stroke>& s) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (s[a].priority != s[b].priority) return s[a].priority < s[b].priority;
        if (s[a].y != s[b].y) return s[a].y < s[b].y;
        return s[a].x < s[b].x;
    });
    return idx;
}

Outcome priority_invariance() {
    Outcome o;
    const HybridParams params;
    const StrokeDefaults defaults;
    for (std::uint64_t k = 0; k < 10; ++k) {
        const int w = 48, h = 40;
        const auto bundle = sft::random_bundle(w, h, 200 + k);
        const auto reference = sft::random_image(w, h, 3, 300 + k);
        const auto gradients = sobel_gradients(luminance(reference));
        const auto cands = generate_candidates(bundle, {}, 400, k);
        const auto base = priority_order(init_strokes(cands, gradients, bundle, reference, params, defaults));
        for (double c : {0.1, 2.0, 10.0}) {
            FeatureBundle scaled = bundle;
            for (double& v : scaled.saliency.data()) v *= c;
            for (double& v : scaled.edges.data()) v *= c;
            const auto order = priority_order(init_strokes(cands, gradients, scaled, reference, params, defaults));
            o.require(order == base, "order changed for bundle " + std::to_string(k) + " at c=" + std::to_string(c));
        }
    }
    o.detail = o.ok ? "10 bundles x 3 scales, 400 strokes each" : o.detail;
    return o;
}

// 3
Outcome weight_formula() {
    Outcome o;
    const FeatureWeights fw{0.6, 1.1, 0.35};
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 5; ++k) {
        const auto bundle = sft::random_bundle(40, 32, 500 + k);
        const auto cands = generate_candidates(bundle, fw, 200, k);
        o.require(cands.size() == 200, "expected 200 candidates");
        for (const auto& c : cands) {
            const double e = bundle.edges.at(c.anchor.x, c.anchor.y);
            const double s = bundle.saliency.at(c.anchor.x, c.anchor.y);
            const double d = bundle.density.at(c.anchor.x, c.anchor.y);
            worst = std::max(worst, std::abs(c.weight - (0.6 * e + 1.1 * s + 0.35 * d)));
        }
    }
    o.require(worst <= 1e-12, "max deviation " + std::to_string(worst));
    char buf[64];
    std::snprintf(buf, sizeof buf, "max |W - oracle| = %.3g", worst);
    if (o.ok) o.detail = buf;
    return o;
}

// 4
Outcome gram_properties() {
    Outcome o;
    sft::Rng rng(404);
    for (int k = 0; k < 100; ++k) {
        const int c = 1 + int(rng.below(8));
        FeatureTensor t(c, 1 + int(rng.below(6)), 1 + int(rng.below(6)));
        for (double& v : t.data) v = rng.normal();
        const auto g = gram(t);
        std::vector<double> x(c);
        for (double& v : x) v = rng.normal();
        double q = 0.0;
        for (int i = 0; i < c; ++i)
            for (int j = 0; j < c; ++j) {
                o.require(std::abs(g.at(i, j) - g.at(j, i)) <= 1e-12, "asymmetric gram");
                q += x[i] * g.at(i, j) * x[j];
            }
        o.require(q >= -1e-9, "negative quadratic form");
    }
    FeatureTensor t(2, 2, 2);
    for (double& v : t.data) v = rng.normal();
    const auto g = gram(t);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int y = 0; y < 2; ++y)
                for (int x = 0; x < 2; ++x) acc += t.at(i, y, x) * t.at(j, y, x);
            o.require(g.at(i, j) == acc / 8.0, "2x2x2 gram differs from the double loop");
        }
    if (o.ok) o.detail = "100 tensors, 2x2x2 exact";
    return o;
}

// 5
Outcome gradient_check() {
    Outcome o;
    const auto ex = default_extractor(0);
    const StylizeConfig cfg;
    double worst = 0.0;
    sft::Rng rng(55);
    for (std::uint64_t k = 0; k < 10; ++k) {
        const auto t = sft::random_image(8, 8, 1, 600 + k);
        const StyleObjective obj(sft::random_image(8, 8, 1, 700 + k), sft::random_image(8, 8, 1, 800 + k), ex, cfg);
        const auto lg = obj.evaluate(t);
        for (int p = 0; p < 50; ++p) {
            const int x = int(rng.below(8)), y = int(rng.below(8));
            auto tp = t, tm = t;
            tp.at(x, y, 0) += 1e-5;
            tm.at(x, y, 0) -= 1e-5;
            const double fd = (obj.loss(tp) - obj.loss(tm)) / 2e-5;
            const double an = lg.gradient.at(x, y, 0);
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}));
        }
    }
    o.require(worst < 1e-4, "max relative error " + std::to_string(worst));
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.3g", worst);
    if (o.ok) o.detail = buf;
    return o;
}

// 6
Outcome descent_progress() {
    Outcome o;
    const auto ex = default_extractor(0);
    StylizeConfig cfg;
    const auto r = stylize(sft::stylize_content(), sft::stylize_style(), ex, cfg);
    const double ratio = r.loss_history.back() / r.loss_history.front();
    o.require(ratio <= 0.5, "final/initial = " + std::to_string(ratio));
    cfg.eta = 0.05;
    const auto slow = stylize(sft::stylize_content(), sft::stylize_style(), ex, cfg);
    for (std::size_t i = 1; i < slow.loss_history.size(); ++i)
        o.require(slow.loss_history[i] <= slow.loss_history[i - 1] + 1e-9,
                  "loss rose at iteration " + std::to_string(i) + " with eta 0.05");
    char buf[64];
    std::snprintf(buf, sizeof buf, "final/initial %.3f, eta 0.05 monotone", ratio);
    if (o.ok) o.detail = buf;
    return o;
}

// 7
double cell_mean_error(const RasterImage& canvas, const RasterImage& ref, int cx, int cy, int step) {
    double sum = 0.0;
    int n = 0;
    for (int y = cy * step; y < std::min(ref.height(), (cy + 1) * step); ++y)
        for (int x = cx * step; x < std::min(ref.width(), (cx + 1) * step); ++x) {
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) d2 += std::pow(canvas.at(x, y, c) - ref.at(x, y, c), 2);
            sum += std::sqrt(d2);
            ++n;
        }
    return sum / n;
}

Outcome layered_painting() {
    Outcome o;
    std::size_t later = 0;
    for (std::uint64_t v = 0; v < 3; ++v) {
        const auto img = sft::test_photo(72, 60, 900 + v);
        PainterlyConfig three;
        three.rng_seed = v;
        const auto out = render_painterly(img, three);
        for (const auto& s : out.strokes) {
            if (s.layer == 0) continue;
            ++later;
            const auto& spec = three.layers[s.layer];
            const auto ref = gaussian_blur(img, spec.radius);
            const int step = spec.grid_step();
            const int cx = int(s.points[0].x) / step, cy = int(s.points[0].y) / step;
            o.require(cell_mean_error(out.layer_canvases[s.layer - 1], ref, cx, cy, step) > spec.error_threshold,
                      "stroke seeded in a cell at or below threshold on image " + std::to_string(v));
        }
        PainterlyConfig one;
        one.layers = {three.layers.front()};
        one.rng_seed = v;
        o.require(l2_distance(out.image, img) <= l2_distance(render_painterly(img, one).image, img),
                  "3-layer error exceeds 1-layer error on image " + std::to_string(v));
    }
    if (o.ok) o.detail = std::to_string(later) + " later-layer strokes checked";
    return o;
}

// 8
Outcome merge_convexity() {
    Outcome o;
    sft::Rng rng(808);
    const auto luma = luminance(sft::random_image(64, 64, 3, 8));
    for (int i = 0; i < 1000; ++i) {
        const Stroke a = sft::random_stroke(rng, 64, 64);
        Stroke b = sft::random_stroke(rng, 64, 64);
        b.x = std::clamp(a.x + rng.uniform() * 4 - 2, 0.0, 63.0);
        b.y = std::clamp(a.y + rng.uniform() * 4 - 2, 0.0, 63.0);
        const Stroke m = merge_strokes(a, b, luma, 3.0);
        bool ok = between(m.x, a.x, b.x) && between(m.y, a.y, b.y) && between(m.length, a.length, b.length) &&
                  between(m.thickness, a.thickness, b.thickness) && between(m.size, a.size, b.size) &&
                  between(m.weight, a.weight, b.weight) && between(m.priority, a.priority, b.priority);
        for (int k = 0; k < 4; ++k) ok = ok && between(m.rgba[k], a.rgba[k], b.rgba[k]);
        ok = ok && sft::angle_distance(a.theta, m.theta) + sft::angle_distance(m.theta, b.theta) <=
                       sft::angle_distance(a.theta, b.theta) + 1e-12;
        o.require(ok, "merged stroke leaves the parents' interval at pair " + std::to_string(i));
    }

    ScalarField mirrored(40, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            mirrored.at(x, y) = rng.uniform();
            mirrored.at(x + 20, y) = 1.0 - mirrored.at(x, y);
        }
    o.require(patch_similarity(mirrored, {9, 10}, {9, 10}) == 1.0, "identical patches give omega != 1");
    o.require(patch_similarity(mirrored, {9, 10}, {29, 10}) == 0.0, "negated patches give omega != 0");
    Stroke a = sft::random_stroke(rng, 40, 20), b = sft::random_stroke(rng, 40, 20);
    a.x = 9;
    a.y = 10;
    b.x = 29;
    b.y = 10;
    o.require(merge_strokes(a, b, mirrored, 25.0) == b, "omega 0 merge is not the second stroke");
    b.x = 9;
    o.require(merge_strokes(a, b, mirrored, 1.0) == a, "omega 1 merge is not the first stroke");
    if (o.ok) o.detail = "1000 pairs, omega endpoints";
    return o;
}

// 9
Outcome discard_monotonicity() {
    Outcome o;
    const auto img = sft::test_photo(64, 56, 77);
    PlanParams params;
    params.seed = 9;
    params.hybrid.merge_radius = 0.0;
    const IdentityRefiner refiner;
    Planner planner;
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    std::string counts;
    for (int i = 0; i < 10; ++i) {
        params.hybrid.q_discard_threshold = -0.3 + 0.1 * i;
        const auto r = planner.plan(img, params, refiner);
        const std::size_t n = r.strokes.size();
        o.require(n <= prev, "count rose at threshold " + std::to_string(params.hybrid.q_discard_threshold));
        counts += (counts.empty() ? "" : ",") + std::to_string(n);
        prev = n;
    }
    if (o.ok) o.detail = "survivors " + counts;
    return o;
}

// 10
Outcome determinism() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / ("sf_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto p = [&](const char* name) { return (dir / name).string(); };
    const auto img = sft::to_8bit(sft::test_photo(64, 48, 10));
    write_png(p("in.png"), img);
    const std::string cfg_text = R"({"seed":7,"refiner":"local_search"})";
    save_config(p("cfg.json"), parse_config(cfg_text));
    for (const char* tag : {"a", "b"}) {
        const std::string cmd = std::string("\"") + STROKEFORGE_CLI_PATH + "\" plan " + p("in.png") + " " +
                                (dir / (std::string(tag) + ".png")).string() + " --config " + p("cfg.json") +
                                " --strokes-out " + (dir / (std::string(tag) + ".json")).string() + " >/dev/null 2>&1";
        const int st = std::system(cmd.c_str());
        o.require(WIFEXITED(st) && WEXITSTATUS(st) == 0, "CLI plan failed");
    }
    if (o.ok) {
        o.require(slurp(p("a.png")) == slurp(p("b.png")), "CLI PNGs differ");
        o.require(slurp(p("a.json")) == slurp(p("b.json")), "CLI plan JSON differs");
    }

    ServiceOptions opt;
    opt.port = 0;
    HttpService service(opt);
    const int port = service.bind();
    std::thread th([&] { service.listen(); });
    for (int i = 0; i < 200 && !service.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    const std::string png = slurp(p("in.png"));
    const auto res = c.Post("/api/jobs", httplib::MultipartFormDataItems{{"image", png, "in.png", "image/png"},
                                                                        {"config", cfg_text, "c.json", "application/json"}});
    o.require(res && res->status == 202, "HTTP submit failed");
    if (o.ok) {
        const std::string id = json::parse(res->body)["id"];
        std::string state;
        for (int i = 0; i < 6000 && state != "done" && state != "failed"; ++i) {
            const auto r = c.Get("/api/jobs/" + id);
            if (r) state = json::parse(r->body)["state"];
            if (state != "done") std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        o.require(state == "done", "HTTP job ended in state " + state);
        if (o.ok) {
            const auto rp = c.Get("/api/jobs/" + id + "/result.png");
            const auto rs = c.Get("/api/jobs/" + id + "/strokes");
            o.require(rp && rp->body == slurp(p("a.png")), "HTTP PNG differs from CLI");
            o.require(rs && rs->body == slurp(p("a.json")), "HTTP plan JSON differs from CLI");
        }
    }
    service.stop();
    th.join();
    fs::remove_all(dir);
    if (o.ok) o.detail = "CLI x2 and HTTP byte-identical";
    return o;
}

// 11
Outcome codec_round_trips() {
    Outcome o;
    sft::Rng rng(1111);
    const double extremes[] = {std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::min(),
                               std::numeric_limits<double>::max(), -0.0, 1e-310, 0.1 + 0.2,
                               std::nextafter(1.0, 0.0)};
    for (int k = 0; k < 50; ++k) {
        StrokePlan plan{1 + int(rng.below(4096)), 1 + int(rng.below(4096)), {}};
        const int n = k == 0 ? 0 : 1 + int(rng.below(40));
        for (int i = 0; i < n; ++i) plan.strokes.push_back(sft::random_stroke(rng, 512, 512));
        if (n > 0) {
            plan.strokes[0].theta = k % 2 ? kPi : -kPi;
            plan.strokes.back().theta = std::nextafter(kPi, 0.0);
            const double e = extremes[k % std::size(extremes)];
            plan.strokes[0].weight = e;
            plan.strokes[0].priority = -e;
            plan.strokes.back().x = e;
        }
        const auto back = parse_plan(serialize_plan(plan));
        bool ok = back.width == plan.width && back.height == plan.height && back.strokes.size() == plan.strokes.size();
        for (std::size_t i = 0; ok && i < plan.strokes.size(); ++i) ok = bit_equal(back.strokes[i], plan.strokes[i]);
        o.require(ok, "plan case " + std::to_string(k) + " did not round-trip");

        PlanConfig cfg;
        cfg.seed = rng.next();
        cfg.refiner = k % 2 ? "identity" : "local_search";
        cfg.weights = {rng.uniform(), rng.uniform() + 0.01, rng.uniform()};
        cfg.hybrid.blend_gamma = k % 5 == 0 ? 1.0 : rng.uniform();
        cfg.hybrid.q_discard_threshold = k % 3 == 0 ? -std::numeric_limits<double>::max() : rng.normal();
        cfg.hybrid.merge_radius = extremes[k % std::size(extremes)] == -0.0 ? 0.0 : std::abs(extremes[k % std::size(extremes)]);
        cfg.stylize.eta = rng.uniform() + 1e-300;
        cfg.painterly.layers.front().error_threshold = rng.uniform();
        cfg.render.background = {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
        if (k % 4 == 0) cfg.render.post.harmonize = rng.uniform();
        const auto text = dump_config(cfg);
        const auto parsed = parse_config(text);
        o.require(parsed == cfg, "config case " + std::to_string(k) + " did not round-trip");
        o.require(dump_config(parsed) == text, "config case " + std::to_string(k) + " is not canonical");
    }
    if (o.ok) o.detail = "50 plan + 50 config cases";
    return o;
}

// 12
double direct_footprint_error(const Stroke& s, const RasterImage& ref) {
    const Footprint fp = stroke_footprint(s, BrushModel::rectangle, ref.width(), ref.height());
    double num = 0.0, den = 0.0;
    for (int y = fp.y0; y < fp.y0 + fp.height; ++y)
        for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
            const double c = fp.at(x, y);
            if (c <= 0.0) continue;
            for (int k = 0; k < 3; ++k) num += c * std::pow(s.rgba[k] - ref.at(x, y, k), 2);
            den += c;
        }
    return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

Outcome refiner_improvement() {
    Outcome o;
    const auto img = sft::two_tone(64, 48);
    const auto features = extract_features(img, {});
    const LocalSearchRefiner refiner(BrushModel::rectangle);
    sft::Rng rng(1212);
    int improved = 0;
    for (int i = 0; i < 200; ++i) {
        const Stroke s = sft::random_stroke(rng, 64, 48);
        const double before = direct_footprint_error(s, img);
        const double after = direct_footprint_error(refiner.refine(s, img, features), img);
        o.require(after <= before, "stroke " + std::to_string(i) + " got worse");
        if (after < before) ++improved;
    }
    if (o.ok) o.detail = "200 strokes, " + std::to_string(improved) + " strictly improved";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "blend endpoints", 1.0, blend_endpoints},
        {2, "priority order under joint scaling", 5.0, priority_invariance},
        {3, "candidate weight formula", 0.0, weight_formula},
        {4, "gram properties", 0.0, gram_properties},
        {5, "gradient check", 30.0, gradient_check},
        {6, "descent progress", 60.0, descent_progress},
        {7, "layered painting", 0.0, layered_painting},
        {8, "merge convexity", 0.0, merge_convexity},
        {9, "discard monotonicity", 0.0, discard_monotonicity},
        {10, "determinism", 0.0, determinism},
        {11, "codec round-trips", 0.0, codec_round_trips},
        {12, "refiner improvement", 0.0, refiner_improvement},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.ok = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (out.ok && c.limit_s > 0.0 && secs >= c.limit_s) {
            out.ok = false;
            out.detail = "took " + std::to_string(secs) + " s, limit " + std::to_string(c.limit_s) + " s";
        }
        if (!out.ok) ++failed;
        std::printf("%s %2d %-36s %8.3f s  %s\n", out.ok ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.c_str());
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
