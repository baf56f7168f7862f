#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <vector>

#include "strokeforge/raster.hpp"

namespace strokeforge {

/// Activations of one layer, stored channel-major: data[(c * height + y) * width + x].
struct FeatureTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureTensor() = default;
    FeatureTensor(int c, int h, int w, double fill = 0.0);

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const FeatureTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

struct GramMatrix {
    int dim = 0;
    std::vector<double> data;  // row-major dim x dim

    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * dim + j]; }
};

/// A differentiable feature map over single-channel images.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::size_t layer_count() const = 0;
    virtual std::vector<FeatureTensor> extract(const ScalarField& image) const = 0;
    /// Vector-Jacobian product: given dL/d(layer activations) for every layer
    /// (empty tensors count as zero), return dL/d(image).
    virtual ScalarField backward(const ScalarField& image, const std::vector<FeatureTensor>& grads) const = 0;
};

struct ConvLayer {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_h = 3;
    int kernel_w = 3;
    int stride = 1;
    std::vector<double> weights;  // [out][in][kh][kw]

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
    }
    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

/// Stack of bias-free convolutions (replicated borders, output pixel i reads
/// input pixel i * stride at the kernel centre), each followed by softplus.
class FilterBankExtractor final : public FeatureExtractor {
public:
    explicit FilterBankExtractor(std::vector<ConvLayer> layers);

    std::size_t layer_count() const override { return layers_.size(); }
    std::vector<FeatureTensor> extract(const ScalarField& image) const override;
    ScalarField backward(const ScalarField& image, const std::vector<FeatureTensor>& grads) const override;

    const std::vector<ConvLayer>& layers() const { return layers_; }

    /// Pre-activation outputs of every layer, for inspection.
    std::vector<FeatureTensor> pre_activations(const ScalarField& image) const;

private:
    std::vector<ConvLayer> layers_;
};

inline constexpr int kDefaultFilters = 8;

/// Two softplus layers of 8 seeded 3x3 filters; the second has stride 2.
/// Filters are zero-mean and unit-norm.
FilterBankExtractor default_extractor(std::uint64_t rng_seed);

double softplus(double z);

GramMatrix gram(const FeatureTensor& t);

/// Mean squared difference at one layer.
double content_loss(const std::vector<FeatureTensor>& fc, const std::vector<FeatureTensor>& ft, std::size_t layer);

/// Sum over layers of the mean squared Gram difference.
double style_loss(const std::vector<GramMatrix>& gs, const std::vector<GramMatrix>& gt);

enum class StylizeInit { content, noise };

struct StylizeConfig {
    double alpha_content = 1.0;
    double beta_style = 10000.0;
    double eta = 0.5;
    int iterations = 200;
    StylizeInit init = StylizeInit::content;
    std::uint64_t noise_seed = 0;
    std::uint64_t extractor_seed = 0;
    std::size_t content_layer = 0;

    void validate() const;
    friend bool operator==(const StylizeConfig&, const StylizeConfig&) = default;
};

struct LossAndGradient {
    double loss = 0.0;
    double content = 0.0;  // unweighted
    double style = 0.0;    // unweighted
    RasterImage gradient;  // same shape as the evaluated image
};

/// Precomputed targets for L = alpha L_content + beta L_style. The content and
/// style images may differ in size; evaluated images must match the content.
class StyleObjective {
public:
    StyleObjective(const RasterImage& content, const RasterImage& style, const FeatureExtractor& extractor,
                   const StylizeConfig& config);

    LossAndGradient evaluate(const RasterImage& image) const;
    double loss(const RasterImage& image) const;

private:
    const FeatureExtractor& extractor_;
    StylizeConfig config_;
    int width_;
    int height_;
    std::vector<FeatureTensor> content_features_;
    std::vector<GramMatrix> style_grams_;
};

LossAndGradient total_loss_and_gradient(const RasterImage& target, const RasterImage& content,
                                        const RasterImage& style, const FeatureExtractor& extractor,
                                        const StylizeConfig& config);

struct StylizeResult {
    RasterImage image;
    std::vector<double> loss_history;  // initial loss, then the loss after each step
};

StylizeResult stylize(const RasterImage& content, const RasterImage& style, const FeatureExtractor& extractor,
                      const StylizeConfig& config);

/// Binary weight file: "SFNB", u16 version, u16 layer count, then per layer
/// u32 in, out, kh, kw, stride followed by the weights as little-endian f64.
void save_extractor(std::ostream& out, const FilterBankExtractor& extractor);
FilterBankExtractor load_extractor(std::istream& in);
void save_extractor(const std::filesystem::path& path, const FilterBankExtractor& extractor);
FilterBankExtractor load_extractor(const std::filesystem::path& path);

inline constexpr std::uint16_t kSfnbVersion = 1;

}  // namespace strokeforge
