#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "strokeforge/config.hpp"
#include "strokeforge/plan_codec.hpp"
#include "strokeforge/planning.hpp"
#include "strokeforge/raster.hpp"

namespace strokeforge {

struct PlanArtifacts {
    StrokePlan plan;                 // strokes actually rendered
    std::string plan_json;           // serialize_plan(plan)
    std::string base_plan_hash;      // hash of the plan before exclusions
    std::vector<int> excluded;       // indices into the base plan that were dropped
    RasterImage image;               // RGBA render
    std::vector<std::uint8_t> png;
    PlanStats stats;
    double render_ms = 0.0;
};

/// Plan, apply the exclusion list, render and encode. `planner` may be null.
PlanArtifacts run_plan(const RasterImage& image, const PlanConfig& config, Planner* planner = nullptr);

/// Render a stored plan with the config's render options.
RasterImage render_plan(const StrokePlan& plan, const RenderOptions& options);

RasterImage run_classical(const RasterImage& image, const PlanConfig& config);

RasterImage run_stylize(const RasterImage& content, const RasterImage& style, const PlanConfig& config);

}  // namespace strokeforge
