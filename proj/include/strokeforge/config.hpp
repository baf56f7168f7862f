#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "strokeforge/features.hpp"
#include "strokeforge/neural.hpp"
#include "strokeforge/painterly.hpp"
#include "strokeforge/planning.hpp"
#include "strokeforge/render.hpp"

namespace strokeforge {

/// Invalid configuration; pointer() is the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& message)
        : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + message),
          pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

/// Stroke indices to leave out of the render, valid only for the plan whose
/// serialized form hashes to `plan_hash`.
struct StrokeExclusion {
    std::string plan_hash;
    std::vector<int> indices;

    friend bool operator==(const StrokeExclusion&, const StrokeExclusion&) = default;
};

struct PlanConfig {
    std::uint64_t seed = 0;
    std::string refiner = "local_search";
    FeatureWeights weights;
    FeatureParams features;
    int candidate_count = 1500;
    PainterlyConfig painterly;
    HybridParams hybrid;
    StrokeDefaults stroke_defaults;
    StylizeConfig stylize;
    RenderOptions render;
    StrokeExclusion exclusion;

    PlanParams plan_params() const;
    PainterlyConfig painterly_params() const;
    StylizeConfig stylize_params() const;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
    friend bool operator==(const PlanConfig&, const PlanConfig&) = default;
};

PlanConfig parse_config(std::string_view json_text);

/// Canonical form: every field present, keys sorted, two-space indent.
std::string dump_config(const PlanConfig& config);

PlanConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PlanConfig& config);

/// RFC 7386 merge patch of `patch_json` onto the canonical form of `base`,
/// validated as a whole.
PlanConfig patch_config(const PlanConfig& base, std::string_view patch_json);

}  // namespace strokeforge
