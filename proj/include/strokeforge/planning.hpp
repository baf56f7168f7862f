#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strokeforge/features.hpp"
#include "strokeforge/raster.hpp"
#include "strokeforge/stroke.hpp"

namespace strokeforge {

struct HybridParams {
    double blend_gamma = 0.5;
    double lambda_priority = 0.5;
    double q_saliency = 0.5;
    double q_edge = 0.4;
    double q_penalty = 0.1;
    double q_discard_threshold = -0.05;
    double merge_radius = 2.0;  // pixels; 0 disables merging
    int stroke_budget = 1200;

    void validate() const;
    friend bool operator==(const HybridParams&, const HybridParams&) = default;
};

/// Attribute defaults for freshly initialized strokes. Size falls linearly
/// from size_max at zero density to size_min at full density.
struct StrokeDefaults {
    bool follow_contours = true;
    double size_max = 10.0;
    double size_min = 3.0;
    double length_ratio = 2.5;     // length = ratio * size
    double thickness_ratio = 1.2;  // thickness = ratio * size
    double opacity = 1.0;
    Texture texture = Texture::solid;

    void validate() const;
    friend bool operator==(const StrokeDefaults&, const StrokeDefaults&) = default;
};

struct PlanParams {
    FeatureWeights weights;
    FeatureParams features;
    int candidate_count = 1500;
    HybridParams hybrid;
    StrokeDefaults defaults;
    BrushModel brush = BrushModel::rectangle;  // footprint model for refinement and scoring
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const PlanParams&, const PlanParams&) = default;
};

double priority_of(double saliency, double edge, double lambda);

std::vector<Stroke> init_strokes(std::span<const StrokeCandidate> candidates, const GradientField& gradients,
                                 const FeatureBundle& features, const RasterImage& reference,
                                 const HybridParams& params, const StrokeDefaults& defaults);

/// Largest-remainder split of `budget` seats proportional to `weights`,
/// never exceeding `capacities`. Seats a region cannot take are re-split
/// among the rest. All-zero weights fall back to capacities.
std::vector<int> apportion(std::span<const double> weights, std::span<const int> capacities, int budget);

/// Thin `strokes` to at most `budget`, keeping the highest-priority strokes of
/// each region. Regions come from `partition` when given, else a 16-px grid.
/// Surviving strokes keep their input order.
std::vector<Stroke> enforce_density(std::span<const Stroke> strokes, const ScalarField& density, int budget,
                                    const VoronoiPartition* partition = nullptr);

inline constexpr int kDensityGridStep = 16;

class Refiner {
public:
    virtual ~Refiner() = default;
    virtual Stroke refine(const Stroke& stroke, const RasterImage& reference, const FeatureBundle& features) const = 0;
    /// Identifies the refiner's behaviour for result caching; empty disables caching.
    virtual std::string cache_key() const = 0;
};

class IdentityRefiner final : public Refiner {
public:
    Stroke refine(const Stroke& stroke, const RasterImage&, const FeatureBundle&) const override { return stroke; }
    std::string cache_key() const override { return "identity"; }
};

/// Coordinate descent on the footprint colour error: anchor offsets in
/// [-2,2]^2, orientation +-15 degrees, thickness x0.5 / x2, colour snapped to
/// the footprint mean. Only strict improvements are accepted.
class LocalSearchRefiner final : public Refiner {
public:
    explicit LocalSearchRefiner(BrushModel brush = BrushModel::rectangle, int sweeps = 3);
    Stroke refine(const Stroke& stroke, const RasterImage& reference, const FeatureBundle& features) const override;
    std::string cache_key() const override;

private:
    BrushModel brush_;
    int sweeps_;
};

std::unique_ptr<Refiner> make_refiner(std::string_view name, BrushModel brush);

/// Coverage-weighted mean squared RGB error between the stroke colour and the
/// reference over the stroke footprint; +inf for an empty footprint.
double footprint_error(const Stroke& stroke, const RasterImage& reference, BrushModel brush);

struct RefinedPair {
    Stroke heuristic;
    Stroke refined;
    bool flagged = false;
    std::string note;
};

std::vector<RefinedPair> refine(std::span<const Stroke> strokes, const Refiner& refiner, const RasterImage& reference,
                                const FeatureBundle& features);

Stroke blend_correction(const Stroke& heuristic, const Stroke& refined, double gamma);

/// Circular interpolation from a toward b along the shorter arc.
double blend_angle(double a, double b, double gamma);

struct ConsistencyTerms {
    double saliency = 0.0;
    double edge = 0.0;
    double deviation = 0.0;
    double score = 0.0;
};

double consistency_formula(const HybridParams& params, double saliency, double edge, double deviation);

/// Relative modification of `blended` against `heuristic`, averaged over
/// anchor shift, orientation change and thickness change.
double stroke_deviation(const Stroke& blended, const Stroke& heuristic, int width, int height);

ConsistencyTerms consistency_terms(const Stroke& blended, const Stroke& heuristic, const FeatureBundle& features,
                                   const HybridParams& params, BrushModel brush = BrushModel::rectangle);

double consistency_score(const Stroke& blended, const Stroke& heuristic, const FeatureBundle& features,
                         const HybridParams& params, BrushModel brush = BrushModel::rectangle);

inline constexpr int kMergePatch = 9;

/// NCC of the 9x9 luminance patches around two pixels, mapped onto [0,1].
double patch_similarity(const ScalarField& luma, PixelCoord a, PixelCoord b);

Stroke merge_strokes(const Stroke& a, const Stroke& b, const ScalarField& luma, double merge_radius);
Stroke merge_strokes(const Stroke& a, const Stroke& b, const RasterImage& reference, double merge_radius);

struct PlanStats {
    std::size_t candidates = 0;
    std::size_t after_density = 0;
    std::size_t flagged = 0;
    std::size_t discarded = 0;
    std::size_t merged = 0;
    bool step1_cached = false;
    bool step2_cached = false;
    bool step3_cached = false;
    double step1_ms = 0.0;
    double step2_ms = 0.0;
    double step3_ms = 0.0;
    double step4_ms = 0.0;
};

struct PlanResult {
    std::vector<Stroke> strokes;  // ascending priority
    PlanStats stats;
};

/// Runs the planner with reusable intermediate results: step-1 features and
/// candidates, step-2 strokes, and step-3 refinements are memoized on the
/// inputs they depend on. Safe to share between threads.
class Planner {
public:
    explicit Planner(std::size_t cache_entries = 8);
    ~Planner();
    Planner(const Planner&) = delete;
    Planner& operator=(const Planner&) = delete;

    PlanResult plan(const RasterImage& image, const PlanParams& params, const Refiner& refiner);

private:
    struct Cache;
    std::unique_ptr<Cache> cache_;
};

PlanResult plan(const RasterImage& image, const PlanParams& params, const Refiner& refiner);

std::uint64_t image_hash(const RasterImage& image);

}  // namespace strokeforge
