#include "strokeforge/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "strokeforge/image_io.hpp"
#include "strokeforge/neural.hpp"
#include "strokeforge/painterly.hpp"
#include "strokeforge/render.hpp"

namespace strokeforge {

PlanArtifacts run_plan(const RasterImage& image, const PlanConfig& config, Planner* planner) {
    config.validate();
    const auto refiner = make_refiner(config.refiner, config.render.brush);
    PlanResult result =
        planner ? planner->plan(image, config.plan_params(), *refiner) : plan(image, config.plan_params(), *refiner);

    PlanArtifacts out;
    out.stats = result.stats;
    out.plan.width = image.width();
    out.plan.height = image.height();
    out.plan.strokes = std::move(result.strokes);
    out.base_plan_hash = fnv1a_hex(serialize_plan(out.plan));

    if (!config.exclusion.indices.empty() && config.exclusion.plan_hash == out.base_plan_hash) {
        std::vector<char> drop(out.plan.strokes.size(), 0);
        for (int i : config.exclusion.indices) {
            if (i >= 0 && static_cast<std::size_t>(i) < drop.size()) drop[i] = 1;
        }
        std::vector<Stroke> kept;
        for (std::size_t i = 0; i < out.plan.strokes.size(); ++i) {
            if (drop[i]) {
                out.excluded.push_back(static_cast<int>(i));
            } else {
                kept.push_back(out.plan.strokes[i]);
            }
        }
        out.plan.strokes = std::move(kept);
    }
    out.plan_json = serialize_plan(out.plan);

    const auto t0 = std::chrono::steady_clock::now();
    out.image = render_plan(out.plan, config.render);
    out.png = encode_png(out.image);
    out.render_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

RasterImage render_plan(const StrokePlan& plan, const RenderOptions& options) {
    return render_sequence(plan.strokes, plan.width, plan.height, options);
}

RasterImage run_classical(const RasterImage& image, const PlanConfig& config) {
    config.validate();
    RasterImage out = render_painterly(image, config.painterly_params()).image;
    return post_process(out, config.render.post);
}

RasterImage run_stylize(const RasterImage& content, const RasterImage& style, const PlanConfig& config) {
    config.validate();
    const FilterBankExtractor extractor = default_extractor(config.stylize.extractor_seed);
    return stylize(content, style, extractor, config.stylize_params()).image;
}

}  // namespace strokeforge
