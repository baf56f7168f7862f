#include "strokeforge/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "strokeforge/rng.hpp"

namespace strokeforge {

FeatureTensor::FeatureTensor(int c, int h, int w, double fill)
    : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

int out_extent(int n, int stride) { return (n + stride - 1) / stride; }

FeatureTensor convolve(const FeatureTensor& in, const ConvLayer& L) {
    const int oh = out_extent(in.height, L.stride);
    const int ow = out_extent(in.width, L.stride);
    FeatureTensor z(L.out_channels, oh, ow);
    const int ry = L.kernel_h / 2;
    const int rx = L.kernel_w / 2;
#pragma omp parallel for schedule(static)
    for (int o = 0; o < L.out_channels; ++o) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int i = 0; i < L.in_channels; ++i) {
                    const double* w = &L.weights[(static_cast<std::size_t>(o) * L.in_channels + i) * L.kernel_h * L.kernel_w];
                    for (int ky = 0; ky < L.kernel_h; ++ky) {
                        const int yy = clamp_index(oy * L.stride + ky - ry, in.height);
                        for (int kx = 0; kx < L.kernel_w; ++kx) {
                            const int xx = clamp_index(ox * L.stride + kx - rx, in.width);
                            acc += w[ky * L.kernel_w + kx] * in.at(i, yy, xx);
                        }
                    }
                }
                z.at(o, oy, ox) = acc;
            }
        }
    }
    return z;
}

FeatureTensor convolve_backward(const FeatureTensor& dz, const ConvLayer& L, int in_h, int in_w) {
    FeatureTensor din(L.in_channels, in_h, in_w);
    const int ry = L.kernel_h / 2;
    const int rx = L.kernel_w / 2;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < L.in_channels; ++i) {
        for (int o = 0; o < L.out_channels; ++o) {
            const double* w = &L.weights[(static_cast<std::size_t>(o) * L.in_channels + i) * L.kernel_h * L.kernel_w];
            for (int oy = 0; oy < dz.height; ++oy) {
                for (int ox = 0; ox < dz.width; ++ox) {
                    const double g = dz.at(o, oy, ox);
                    if (g == 0.0) continue;
                    for (int ky = 0; ky < L.kernel_h; ++ky) {
                        const int yy = clamp_index(oy * L.stride + ky - ry, in_h);
                        for (int kx = 0; kx < L.kernel_w; ++kx) {
                            const int xx = clamp_index(ox * L.stride + kx - rx, in_w);
                            din.at(i, yy, xx) += w[ky * L.kernel_w + kx] * g;
                        }
                    }
                }
            }
        }
    }
    return din;
}

FeatureTensor from_field(const ScalarField& f) {
    FeatureTensor t(1, f.height(), f.width());
    std::copy(f.data().begin(), f.data().end(), t.data.begin());
    return t;
}

ScalarField gray_of(const RasterImage& img) {
    ScalarField out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(x, y) = img.channels() == 1
                               ? img.at(x, y, 0)
                               : 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
        }
    }
    return out;
}

RasterImage spread_gradient(const ScalarField& g, const RasterImage& like) {
    RasterImage out(like.width(), like.height(), like.channels(), 0.0);
    static constexpr double kLuma[3] = {0.299, 0.587, 0.114};
    for (int y = 0; y < like.height(); ++y) {
        for (int x = 0; x < like.width(); ++x) {
            if (like.channels() == 1) {
                out.at(x, y, 0) = g.at(x, y);
            } else {
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = kLuma[c] * g.at(x, y);
            }
        }
    }
    return out;
}

}  // namespace

FilterBankExtractor::FilterBankExtractor(std::vector<ConvLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("extractor needs at least one layer");
    int expected_in = 1;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const ConvLayer& L = layers_[l];
        const std::string where = "extractor layer " + std::to_string(l) + ": ";
        if (L.in_channels != expected_in) throw std::invalid_argument(where + "input channel count mismatch");
        if (L.out_channels < 1) throw std::invalid_argument(where + "needs at least one output channel");
        if (L.kernel_h < 1 || L.kernel_w < 1 || L.kernel_h % 2 == 0 || L.kernel_w % 2 == 0) {
            throw std::invalid_argument(where + "kernel sides must be odd and positive");
        }
        if (L.stride < 1) throw std::invalid_argument(where + "stride must be >= 1");
        if (L.weights.size() != L.weight_count()) throw std::invalid_argument(where + "weight count mismatch");
        for (double w : L.weights) {
            if (!std::isfinite(w)) throw std::invalid_argument(where + "non-finite weight");
        }
        expected_in = L.out_channels;
    }
}

std::vector<FeatureTensor> FilterBankExtractor::pre_activations(const ScalarField& image) const {
    std::vector<FeatureTensor> out;
    FeatureTensor a = from_field(image);
    for (const ConvLayer& L : layers_) {
        FeatureTensor z = convolve(a, L);
        a = z;
        for (double& v : a.data) v = softplus(v);
        out.push_back(std::move(z));
    }
    return out;
}

std::vector<FeatureTensor> FilterBankExtractor::extract(const ScalarField& image) const {
    std::vector<FeatureTensor> out;
    FeatureTensor a = from_field(image);
    for (const ConvLayer& L : layers_) {
        a = convolve(a, L);
        for (double& v : a.data) v = softplus(v);
        out.push_back(a);
    }
    return out;
}

ScalarField FilterBankExtractor::backward(const ScalarField& image, const std::vector<FeatureTensor>& grads) const {
    if (grads.size() != layers_.size()) throw std::invalid_argument("backward: one gradient per layer required");
    const auto z = pre_activations(image);

    FeatureTensor upstream;  // dL/d(activation of the current layer) from deeper layers
    for (std::size_t l = layers_.size(); l-- > 0;) {
        FeatureTensor ga(z[l].channels, z[l].height, z[l].width);
        if (!grads[l].data.empty()) {
            if (!grads[l].same_shape(z[l])) throw std::invalid_argument("backward: gradient shape mismatch");
            ga.data = grads[l].data;
        }
        if (!upstream.data.empty()) {
            for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += upstream.data[i];
        }
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= sigmoid(z[l].data[i]);
        const int in_h = l == 0 ? image.height() : z[l - 1].height;
        const int in_w = l == 0 ? image.width() : z[l - 1].width;
        upstream = convolve_backward(ga, layers_[l], in_h, in_w);
    }
    ScalarField out(image.width(), image.height());
    std::copy(upstream.data.begin(), upstream.data.end(), out.data().begin());
    return out;
}

FilterBankExtractor default_extractor(std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    auto make = [&rng](int in, int out, int stride) {
        ConvLayer L{in, out, 3, 3, stride, {}};
        L.weights.resize(L.weight_count());
        const std::size_t per = static_cast<std::size_t>(in) * 9;
        for (int o = 0; o < out; ++o) {
            double* w = &L.weights[o * per];
            for (std::size_t k = 0; k < per; ++k) w[k] = rng.normal();
            double mean = 0.0;
            for (std::size_t k = 0; k < per; ++k) mean += w[k];
            mean /= static_cast<double>(per);
            double norm = 0.0;
            for (std::size_t k = 0; k < per; ++k) {
                w[k] -= mean;
                norm += w[k] * w[k];
            }
            norm = std::sqrt(norm);
            for (std::size_t k = 0; k < per; ++k) w[k] /= norm;
        }
        return L;
    };
    std::vector<ConvLayer> layers;
    layers.push_back(make(1, kDefaultFilters, 1));
    layers.push_back(make(kDefaultFilters, kDefaultFilters, 2));
    return FilterBankExtractor(std::move(layers));
}

GramMatrix gram(const FeatureTensor& t) {
    GramMatrix g;
    g.dim = t.channels;
    g.data.assign(static_cast<std::size_t>(t.channels) * t.channels, 0.0);
    const std::size_t m = t.plane();
    const double norm = static_cast<double>(t.channels) * static_cast<double>(m);
    if (norm == 0.0) return g;
    for (int i = 0; i < t.channels; ++i) {
        const double* fi = &t.data[i * m];
        for (int j = i; j < t.channels; ++j) {
            const double* fj = &t.data[j * m];
            double s = 0.0;
            for (std::size_t p = 0; p < m; ++p) s += fi[p] * fj[p];
            g.data[static_cast<std::size_t>(i) * g.dim + j] = s / norm;
            g.data[static_cast<std::size_t>(j) * g.dim + i] = s / norm;
        }
    }
    return g;
}

double content_loss(const std::vector<FeatureTensor>& fc, const std::vector<FeatureTensor>& ft, std::size_t layer) {
    if (layer >= fc.size() || layer >= ft.size()) throw std::invalid_argument("content_loss: layer out of range");
    const FeatureTensor& a = fc[layer];
    const FeatureTensor& b = ft[layer];
    if (!a.same_shape(b)) throw std::invalid_argument("content_loss: feature shapes differ");
    if (a.data.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

double style_loss(const std::vector<GramMatrix>& gs, const std::vector<GramMatrix>& gt) {
    if (gs.size() != gt.size()) throw std::invalid_argument("style_loss: layer counts differ");
    double total = 0.0;
    for (std::size_t l = 0; l < gs.size(); ++l) {
        if (gs[l].dim != gt[l].dim) throw std::invalid_argument("style_loss: Gram dimensions differ");
        if (gs[l].dim == 0) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < gs[l].data.size(); ++i) {
            const double d = gs[l].data[i] - gt[l].data[i];
            s += d * d;
        }
        total += s / static_cast<double>(gs[l].data.size());
    }
    return total;
}

void StylizeConfig::validate() const {
    if (!(alpha_content >= 0.0 && std::isfinite(alpha_content))) throw std::invalid_argument("alpha_content must be >= 0");
    if (!(beta_style >= 0.0 && std::isfinite(beta_style))) throw std::invalid_argument("beta_style must be >= 0");
    if (!(alpha_content + beta_style > 0.0)) throw std::invalid_argument("alpha_content + beta_style must be > 0");
    if (!(eta > 0.0 && std::isfinite(eta))) throw std::invalid_argument("eta must be > 0");
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
}

StyleObjective::StyleObjective(const RasterImage& content, const RasterImage& style,
                               const FeatureExtractor& extractor, const StylizeConfig& config)
    : extractor_(extractor), config_(config), width_(content.width()), height_(content.height()) {
    config_.validate();
    if (config_.content_layer >= extractor.layer_count()) {
        throw std::invalid_argument("content layer exceeds extractor depth");
    }
    content_features_ = extractor.extract(gray_of(content));
    for (const auto& t : extractor.extract(gray_of(style))) style_grams_.push_back(gram(t));
}

double StyleObjective::loss(const RasterImage& image) const {
    if (image.width() != width_ || image.height() != height_) {
        throw std::invalid_argument("stylize: target and content dimensions differ");
    }
    const auto ft = extractor_.extract(gray_of(image));
    std::vector<GramMatrix> gt;
    for (const auto& t : ft) gt.push_back(gram(t));
    return config_.alpha_content * content_loss(content_features_, ft, config_.content_layer) +
           config_.beta_style * style_loss(style_grams_, gt);
}

LossAndGradient StyleObjective::evaluate(const RasterImage& image) const {
    if (image.width() != width_ || image.height() != height_) {
        throw std::invalid_argument("stylize: target and content dimensions differ");
    }
    const ScalarField gray = gray_of(image);
    const auto ft = extractor_.extract(gray);
    std::vector<GramMatrix> gt;
    for (const auto& t : ft) gt.push_back(gram(t));

    LossAndGradient r;
    r.content = content_loss(content_features_, ft, config_.content_layer);
    r.style = style_loss(style_grams_, gt);
    r.loss = config_.alpha_content * r.content + config_.beta_style * r.style;

    std::vector<FeatureTensor> grads(ft.size());
    for (std::size_t l = 0; l < ft.size(); ++l) grads[l] = FeatureTensor(ft[l].channels, ft[l].height, ft[l].width);

    {
        const std::size_t cl = config_.content_layer;
        const double scale = 2.0 * config_.alpha_content / static_cast<double>(ft[cl].data.size());
        for (std::size_t i = 0; i < ft[cl].data.size(); ++i) {
            grads[cl].data[i] += scale * (ft[cl].data[i] - content_features_[cl].data[i]);
        }
    }
    for (std::size_t l = 0; l < ft.size(); ++l) {
        const int c = ft[l].channels;
        const std::size_t m = ft[l].plane();
        const double scale = 4.0 * config_.beta_style / (double(c) * double(c) * double(c) * double(m));
        for (int k = 0; k < c; ++k) {
            double* out = &grads[l].data[k * m];
            for (int j = 0; j < c; ++j) {
                const double d = scale * (gt[l].at(k, j) - style_grams_[l].at(k, j));
                if (d == 0.0) continue;
                const double* fj = &ft[l].data[j * m];
                for (std::size_t p = 0; p < m; ++p) out[p] += d * fj[p];
            }
        }
    }
    r.gradient = spread_gradient(extractor_.backward(gray, grads), image);
    return r;
}

LossAndGradient total_loss_and_gradient(const RasterImage& target, const RasterImage& content,
                                        const RasterImage& style, const FeatureExtractor& extractor,
                                        const StylizeConfig& config) {
    return StyleObjective(content, style, extractor, config).evaluate(target);
}

StylizeResult stylize(const RasterImage& content, const RasterImage& style, const FeatureExtractor& extractor,
                      const StylizeConfig& config) {
    const StyleObjective objective(content, style, extractor, config);
    StylizeResult result;
    result.image = content;
    if (config.init == StylizeInit::noise) {
        Rng rng(config.noise_seed);
        for (double& v : result.image.data()) v = rng.uniform();
    }
    const int cc = std::min(result.image.channels(), 3);
    for (int it = 0; it < config.iterations; ++it) {
        const LossAndGradient lg = objective.evaluate(result.image);
        if (!std::isfinite(lg.loss)) {
            throw std::runtime_error("stylize: non-finite loss at iteration " + std::to_string(it));
        }
        result.loss_history.push_back(lg.loss);
        for (int y = 0; y < result.image.height(); ++y) {
            for (int x = 0; x < result.image.width(); ++x) {
                for (int c = 0; c < cc; ++c) {
                    double& v = result.image.at(x, y, c);
                    v = std::clamp(v - config.eta * lg.gradient.at(x, y, c), 0.0, 1.0);
                }
            }
        }
    }
    const double last = objective.loss(result.image);
    if (!std::isfinite(last)) {
        throw std::runtime_error("stylize: non-finite loss at iteration " + std::to_string(config.iterations));
    }
    result.loss_history.push_back(last);
    return result;
}

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le(std::istream& in, int bytes) {
    unsigned char b[8] = {};
    in.read(reinterpret_cast<char*>(b), bytes);
    if (!in) throw std::runtime_error("SFNB: truncated file");
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

}  // namespace

void save_extractor(std::ostream& out, const FilterBankExtractor& extractor) {
    out.write("SFNB", 4);
    put_u16(out, kSfnbVersion);
    put_u16(out, static_cast<std::uint16_t>(extractor.layers().size()));
    for (const ConvLayer& L : extractor.layers()) {
        put_u32(out, static_cast<std::uint32_t>(L.in_channels));
        put_u32(out, static_cast<std::uint32_t>(L.out_channels));
        put_u32(out, static_cast<std::uint32_t>(L.kernel_h));
        put_u32(out, static_cast<std::uint32_t>(L.kernel_w));
        put_u32(out, static_cast<std::uint32_t>(L.stride));
        for (double w : L.weights) put_f64(out, w);
    }
    if (!out) throw std::runtime_error("SFNB: write failed");
}

FilterBankExtractor load_extractor(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SFNB", 4) != 0) throw std::runtime_error("SFNB: bad magic bytes");
    const auto version = get_le(in, 2);
    if (version != kSfnbVersion) throw std::runtime_error("SFNB: unsupported version " + std::to_string(version));
    const auto count = get_le(in, 2);
    constexpr std::uint64_t kMaxDim = 1u << 16;
    std::vector<ConvLayer> layers;
    for (std::uint64_t l = 0; l < count; ++l) {
        ConvLayer L;
        std::uint64_t dims[5];
        for (auto& d : dims) {
            d = get_le(in, 4);
            if (d == 0 || d > kMaxDim) throw std::runtime_error("SFNB: implausible layer dimension");
        }
        L.in_channels = static_cast<int>(dims[0]);
        L.out_channels = static_cast<int>(dims[1]);
        L.kernel_h = static_cast<int>(dims[2]);
        L.kernel_w = static_cast<int>(dims[3]);
        L.stride = static_cast<int>(dims[4]);
        const std::size_t n = L.weight_count();
        if (n > (std::size_t{1} << 28)) throw std::runtime_error("SFNB: layer too large");
        L.weights.resize(n);
        for (double& w : L.weights) w = std::bit_cast<double>(get_le(in, 8));
        layers.push_back(std::move(L));
    }
    return FilterBankExtractor(std::move(layers));
}

void save_extractor(const std::filesystem::path& path, const FilterBankExtractor& extractor) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    save_extractor(out, extractor);
}

FilterBankExtractor load_extractor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_extractor(in);
}

}  // namespace strokeforge
