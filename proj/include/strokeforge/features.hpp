#pragma once

#include <cstdint>
#include <vector>

#include "strokeforge/raster.hpp"

namespace strokeforge {

/// Per-pixel guidance fields, each in [0,1] and of identical size.
struct FeatureBundle {
    ScalarField edges;
    ScalarField saliency;
    ScalarField density;

    int width() const { return edges.width(); }
    int height() const { return edges.height(); }
};

/// Coefficients of the candidate weight W = alpha_e E + beta_s S + gamma_d D.
struct FeatureWeights {
    double alpha_e = 1.0;
    double beta_s = 1.0;
    double gamma_d = 0.5;

    void validate() const;
    friend bool operator==(const FeatureWeights&, const FeatureWeights&) = default;
};

struct FeatureParams {
    double edge_threshold = 0.1;
    double density_sigma = 4.0;

    friend bool operator==(const FeatureParams&, const FeatureParams&) = default;
};

struct PixelCoord {
    int x = 0;
    int y = 0;
    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

struct StrokeCandidate {
    PixelCoord anchor;
    double weight = 0.0;
    int cell = 0;  // label of the Voronoi cell this candidate seeds
};

struct VoronoiPartition {
    int width = 0;
    int height = 0;
    std::vector<PixelCoord> seeds;  // distinct pixels
    std::vector<int> labels;        // row-major, index into seeds

    int label_at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

struct CandidateSet {
    std::vector<StrokeCandidate> candidates;
    VoronoiPartition partition;
};

inline constexpr int kLloydIterations = 3;
inline constexpr double kSaliencySigma = 2.5;

/// Normalized Sobel magnitude of the luminance; values under `threshold`
/// are zeroed and the remainder rescaled onto [0,1].
ScalarField extract_edges(const RasterImage& image, double threshold);

/// Spectral-residual saliency of the luminance, max-normalized. Needs >= 16x16.
ScalarField compute_saliency(const RasterImage& image);

/// Smoothed, max-normalized blend 0.5 E + 0.5 S; all-zero input gives 1 everywhere.
ScalarField estimate_density(const ScalarField& edges, const ScalarField& saliency, double sigma);

FeatureBundle extract_features(const RasterImage& image, const FeatureParams& params);

/// Density-weighted seeds with Lloyd relaxation and nearest-seed labels.
VoronoiPartition voronoi_partition(int width, int height, int seed_count, const ScalarField& density,
                                   std::uint64_t rng_seed);

double candidate_weight(const FeatureBundle& bundle, const FeatureWeights& weights, PixelCoord at);

/// One candidate per Voronoi cell, sorted by weight descending then (y, x).
CandidateSet generate_candidate_set(const FeatureBundle& bundle, const FeatureWeights& weights, int count,
                                    std::uint64_t rng_seed);

std::vector<StrokeCandidate> generate_candidates(const FeatureBundle& bundle, const FeatureWeights& weights,
                                                 int count, std::uint64_t rng_seed);

}  // namespace strokeforge
