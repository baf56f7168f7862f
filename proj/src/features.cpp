#include "strokeforge/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

#include "strokeforge/kernels.hpp"
#include "strokeforge/rng.hpp"

namespace strokeforge {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class FftBuffer {
public:
    FftBuffer(int width, int height)
        : width_(width), height_(height),
          data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * width * height))) {
        if (data_ == nullptr) throw std::bad_alloc();
        std::lock_guard lock(fftw_planner_mutex());
        // FFTW_ESTIMATE keeps the chosen algorithm, and hence the bits, stable across runs.
        forward_ = fftw_plan_dft_2d(height, width, data_, data_, FFTW_FORWARD, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_2d(height, width, data_, data_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftBuffer() {
        {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(forward_);
            fftw_destroy_plan(inverse_);
        }
        fftw_free(data_);
    }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;

    std::complex<double>* data() { return reinterpret_cast<std::complex<double>*>(data_); }
    std::size_t size() const { return static_cast<std::size_t>(width_) * height_; }
    void forward() { fftw_execute(forward_); }
    void inverse() { fftw_execute(inverse_); }

private:
    int width_;
    int height_;
    fftw_complex* data_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

void max_normalize(ScalarField& f) {
    const double m = f.max_value();
    if (!(m > 0.0)) {
        std::fill(f.data().begin(), f.data().end(), 0.0);
        return;
    }
    for (double& v : f.data()) v = std::clamp(v / m, 0.0, 1.0);
}

}  // namespace

void FeatureWeights::validate() const {
    if (!(alpha_e >= 0.0) || !(beta_s >= 0.0) || !(gamma_d >= 0.0) || !std::isfinite(alpha_e + beta_s + gamma_d)) {
        throw std::invalid_argument("feature weights must be finite and non-negative");
    }
    if (!(alpha_e + beta_s + gamma_d > 0.0)) throw std::invalid_argument("feature weights must not all be zero");
}

ScalarField extract_edges(const RasterImage& image, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("edge threshold must lie in [0,1]");
    auto edges = gradient_magnitude_and_angle(sobel_gradients(luminance(image))).magnitude;
    const double peak = edges.max_value();
    if (!(peak >= kDegenerateGradient)) {
        std::fill(edges.data().begin(), edges.data().end(), 0.0);
        return edges;
    }
    for (double& v : edges.data()) {
        const double n = v / peak;
        if (n < threshold) {
            v = 0.0;
        } else if (threshold == 0.0) {
            v = n;
        } else if (threshold == 1.0) {
            v = 1.0;
        } else {
            v = std::clamp((n - threshold) / (1.0 - threshold), 0.0, 1.0);
        }
    }
    return edges;
}

ScalarField compute_saliency(const RasterImage& image) {
    if (image.width() < 16 || image.height() < 16) {
        throw std::invalid_argument("compute_saliency: image must be at least 16x16");
    }
    const int w = image.width();
    const int h = image.height();
    const ScalarField lum = luminance(image);
    if (lum.max_value() - lum.min_value() < 1e-12) return ScalarField(w, h, 0.0);

    FftBuffer fft(w, h);
    auto* buf = fft.data();
    for (std::size_t i = 0; i < fft.size(); ++i) buf[i] = lum.data()[i];
    fft.forward();

    ScalarField log_amp(w, h);
    for (std::size_t i = 0; i < fft.size(); ++i) log_amp.data()[i] = std::log(std::max(std::abs(buf[i]), 1e-12));
    const ScalarField avg = convolve2d(log_amp, box_kernel(3));

    for (std::size_t i = 0; i < fft.size(); ++i) {
        const double residual = log_amp.data()[i] - avg.data()[i];
        buf[i] = std::polar(std::exp(residual), std::arg(buf[i]));
    }
    fft.inverse();

    const double scale = 1.0 / static_cast<double>(fft.size());
    ScalarField sal(w, h);
    for (std::size_t i = 0; i < fft.size(); ++i) sal.data()[i] = std::norm(buf[i] * scale);
    sal = gaussian_blur(sal, kSaliencySigma);
    max_normalize(sal);
    return sal;
}

ScalarField estimate_density(const ScalarField& edges, const ScalarField& saliency, double sigma) {
    if (!edges.same_shape(saliency)) throw std::invalid_argument("estimate_density: field shapes differ");
    ScalarField blend(edges.width(), edges.height());
    for (std::size_t i = 0; i < blend.size(); ++i) {
        blend.data()[i] = 0.5 * edges.data()[i] + 0.5 * saliency.data()[i];
    }
    ScalarField density = gaussian_blur(blend, sigma);
    if (!(density.max_value() >= 1e-12)) return ScalarField(edges.width(), edges.height(), 1.0);
    max_normalize(density);
    return density;
}

FeatureBundle extract_features(const RasterImage& image, const FeatureParams& params) {
    FeatureBundle b;
    b.edges = extract_edges(image, params.edge_threshold);
    b.saliency = compute_saliency(image);
    b.density = estimate_density(b.edges, b.saliency, params.density_sigma);
    return b;
}

namespace {

// Nearest pixel to `p` not yet taken; ties resolved in row-major order.
PixelCoord nearest_free_pixel(PixelCoord p, int width, int height, const std::vector<char>& taken) {
    const int max_ring = std::max(width, height);
    for (int ring = 1; ring <= max_ring; ++ring) {
        long best_d2 = std::numeric_limits<long>::max();
        PixelCoord best{-1, -1};
        for (int y = p.y - ring; y <= p.y + ring; ++y) {
            if (y < 0 || y >= height) continue;
            for (int x = p.x - ring; x <= p.x + ring; ++x) {
                if (x < 0 || x >= width) continue;
                if (taken[static_cast<std::size_t>(y) * width + x]) continue;
                const long d2 = static_cast<long>(x - p.x) * (x - p.x) + static_cast<long>(y - p.y) * (y - p.y);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    best = {x, y};
                }
            }
        }
        // A free pixel in this ring may still be beaten by one in the next ring
        // only if it lies in a corner; widen once more before committing.
        if (best.x >= 0 && best_d2 <= static_cast<long>(ring) * ring) return best;
        if (best.x >= 0) {
            const int outer = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(best_d2))));
            for (int y = p.y - outer; y <= p.y + outer; ++y) {
                if (y < 0 || y >= height) continue;
                for (int x = p.x - outer; x <= p.x + outer; ++x) {
                    if (x < 0 || x >= width || taken[static_cast<std::size_t>(y) * width + x]) continue;
                    const long d2 =
                        static_cast<long>(x - p.x) * (x - p.x) + static_cast<long>(y - p.y) * (y - p.y);
                    if (d2 < best_d2 || (d2 == best_d2 && (y < best.y || (y == best.y && x < best.x)))) {
                        best_d2 = d2;
                        best = {x, y};
                    }
                }
            }
            return best;
        }
    }
    throw std::logic_error("voronoi_partition: no free pixel left");
}

}  // namespace

VoronoiPartition voronoi_partition(int width, int height, int seed_count, const ScalarField& density,
                                   std::uint64_t rng_seed) {
    if (seed_count < 1) throw std::invalid_argument("voronoi_partition: seed_count must be >= 1");
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (static_cast<std::size_t>(seed_count) > n) {
        throw std::invalid_argument("voronoi_partition: seed_count " + std::to_string(seed_count) +
                                    " exceeds pixel count " + std::to_string(n));
    }
    if (density.width() != width || density.height() != height) {
        throw std::invalid_argument("voronoi_partition: density field size mismatch");
    }

    std::vector<double> weight(n);
    double peak = 0.0;
    std::size_t positive = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = density.data()[i];
        weight[i] = std::isfinite(v) && v > 0.0 ? v : 0.0;
        peak = std::max(peak, weight[i]);
        positive += weight[i] > 0.0 ? 1 : 0;
    }
    if (positive < static_cast<std::size_t>(seed_count)) {
        // Not enough support for distinct seeds: lift empty pixels to a small floor.
        const double floor = peak > 0.0 ? 1e-3 * peak : 1.0;
        for (double& v : weight) v = std::max(v, floor);
        peak = std::max(peak, floor);
    }

    // Density-weighted rejection sampling of distinct pixels.
    Rng rng(rng_seed);
    std::vector<char> taken(n, 0);
    std::vector<PixelCoord> picked;
    picked.reserve(seed_count);
    const std::size_t max_attempts = 64 * n + 1024;
    for (std::size_t attempt = 0; attempt < max_attempts && picked.size() < static_cast<std::size_t>(seed_count);
         ++attempt) {
        const auto idx = static_cast<std::size_t>(rng.below(n));
        const double u = rng.uniform();
        if (taken[idx] || !(u * peak < weight[idx])) continue;
        taken[idx] = 1;
        picked.push_back({static_cast<int>(idx % width), static_cast<int>(idx / width)});
    }
    if (picked.size() < static_cast<std::size_t>(seed_count)) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
        for (std::size_t idx : order) {
            if (picked.size() == static_cast<std::size_t>(seed_count)) break;
            if (taken[idx]) continue;
            taken[idx] = 1;
            picked.push_back({static_cast<int>(idx % width), static_cast<int>(idx / width)});
        }
    }

    std::vector<Point2> seeds(picked.size());
    for (std::size_t i = 0; i < picked.size(); ++i) seeds[i] = {double(picked[i].x), double(picked[i].y)};

    // Density-weighted Lloyd relaxation.
    for (int iter = 0; iter < kLloydIterations && seeds.size() > 1; ++iter) {
        const auto labels = label_nearest(width, height, seeds);
        std::vector<double> sw(seeds.size(), 0.0), sx(seeds.size(), 0.0), sy(seeds.size(), 0.0);
        std::vector<double> cx(seeds.size(), 0.0), cy(seeds.size(), 0.0);
        std::vector<std::size_t> count(seeds.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int l = labels[i];
            const double x = static_cast<double>(i % width);
            const double y = static_cast<double>(i / width);
            sw[l] += weight[i];
            sx[l] += weight[i] * x;
            sy[l] += weight[i] * y;
            cx[l] += x;
            cy[l] += y;
            ++count[l];
        }
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            if (count[s] == 0) continue;
            if (sw[s] > 0.0) {
                seeds[s] = {sx[s] / sw[s], sy[s] / sw[s]};
            } else {
                seeds[s] = {cx[s] / double(count[s]), cy[s] / double(count[s])};
            }
        }
    }

    // Snap seeds onto distinct pixels so every cell owns at least its seed pixel.
    VoronoiPartition part;
    part.width = width;
    part.height = height;
    std::fill(taken.begin(), taken.end(), 0);
    for (const auto& s : seeds) {
        PixelCoord p{clamp_index(static_cast<int>(std::lround(s.x)), width),
                     clamp_index(static_cast<int>(std::lround(s.y)), height)};
        if (taken[static_cast<std::size_t>(p.y) * width + p.x]) p = nearest_free_pixel(p, width, height, taken);
        taken[static_cast<std::size_t>(p.y) * width + p.x] = 1;
        part.seeds.push_back(p);
    }
    std::vector<Point2> snapped(part.seeds.size());
    for (std::size_t i = 0; i < snapped.size(); ++i) snapped[i] = {double(part.seeds[i].x), double(part.seeds[i].y)};
    part.labels = label_nearest(width, height, snapped);
    return part;
}

double candidate_weight(const FeatureBundle& bundle, const FeatureWeights& weights, PixelCoord at) {
    return weights.alpha_e * bundle.edges.at(at.x, at.y) + weights.beta_s * bundle.saliency.at(at.x, at.y) +
           weights.gamma_d * bundle.density.at(at.x, at.y);
}

CandidateSet generate_candidate_set(const FeatureBundle& bundle, const FeatureWeights& weights, int count,
                                    std::uint64_t rng_seed) {
    weights.validate();
    if (count < 1) throw std::invalid_argument("generate_candidates: count must be >= 1");
    if (!bundle.edges.same_shape(bundle.saliency) || !bundle.edges.same_shape(bundle.density)) {
        throw std::invalid_argument("generate_candidates: feature fields differ in size");
    }
    CandidateSet set;
    set.partition = voronoi_partition(bundle.width(), bundle.height(), count, bundle.density, rng_seed);
    set.candidates.reserve(set.partition.seeds.size());
    for (std::size_t i = 0; i < set.partition.seeds.size(); ++i) {
        const PixelCoord a = set.partition.seeds[i];
        set.candidates.push_back({a, candidate_weight(bundle, weights, a), static_cast<int>(i)});
    }
    std::sort(set.candidates.begin(), set.candidates.end(), [](const StrokeCandidate& a, const StrokeCandidate& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.anchor.y != b.anchor.y) return a.anchor.y < b.anchor.y;
        return a.anchor.x < b.anchor.x;
    });
    return set;
}

std::vector<StrokeCandidate> generate_candidates(const FeatureBundle& bundle, const FeatureWeights& weights,
                                                 int count, std::uint64_t rng_seed) {
    return generate_candidate_set(bundle, weights, count, rng_seed).candidates;
}

}  // namespace strokeforge
