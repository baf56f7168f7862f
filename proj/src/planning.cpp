#include "strokeforge/planning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <list>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "strokeforge/brush.hpp"
#include "strokeforge/kernels.hpp"

namespace strokeforge {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSearchAngle = 15.0 * kPi / 180.0;

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::array<double, 3> reference_rgb(const RasterImage& img, int x, int y) {
    if (img.channels() == 1) {
        const double v = img.at(x, y, 0);
        return {v, v, v};
    }
    return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

PixelCoord anchor_pixel(const Stroke& s, int width, int height) {
    return {clamp_index(static_cast<int>(std::lround(s.x)), width),
            clamp_index(static_cast<int>(std::lround(s.y)), height)};
}

// Lerp clamped onto the span of its endpoints, so equal inputs stay bit-exact.
double lerp_field(double a, double b, double g) {
    if (g == 0.0) return a;
    if (g == 1.0) return b;
    const double v = (1.0 - g) * a + g * b;
    return std::clamp(v, std::min(a, b), std::max(a, b));
}

}  // namespace

void HybridParams::validate() const {
    if (!in_unit(blend_gamma)) throw std::invalid_argument("blend_gamma must lie in [0,1]");
    if (!in_unit(lambda_priority)) throw std::invalid_argument("lambda_priority must lie in [0,1]");
    if (!(q_saliency >= 0.0 && std::isfinite(q_saliency))) throw std::invalid_argument("q_saliency must be >= 0");
    if (!(q_edge >= 0.0 && std::isfinite(q_edge))) throw std::invalid_argument("q_edge must be >= 0");
    if (!(q_penalty >= 0.0 && std::isfinite(q_penalty))) throw std::invalid_argument("q_penalty must be >= 0");
    if (std::isnan(q_discard_threshold)) throw std::invalid_argument("q_discard_threshold must not be NaN");
    if (!(merge_radius >= 0.0 && std::isfinite(merge_radius))) throw std::invalid_argument("merge_radius must be >= 0");
    if (stroke_budget < 1) throw std::invalid_argument("stroke_budget must be >= 1");
}

void StrokeDefaults::validate() const {
    if (!(size_min > 0.0 && std::isfinite(size_min))) throw std::invalid_argument("size_min must be > 0");
    if (!(size_max >= size_min && std::isfinite(size_max))) throw std::invalid_argument("size_max must be >= size_min");
    if (!(length_ratio >= 0.0 && std::isfinite(length_ratio))) throw std::invalid_argument("length_ratio must be >= 0");
    if (!(thickness_ratio > 0.0 && std::isfinite(thickness_ratio))) {
        throw std::invalid_argument("thickness_ratio must be > 0");
    }
    if (!in_unit(opacity)) throw std::invalid_argument("opacity must lie in [0,1]");
}

void PlanParams::validate() const {
    weights.validate();
    if (!in_unit(features.edge_threshold)) throw std::invalid_argument("edge_threshold must lie in [0,1]");
    if (!(features.density_sigma > 0.0 && std::isfinite(features.density_sigma))) {
        throw std::invalid_argument("density_sigma must be > 0");
    }
    if (candidate_count < 1) throw std::invalid_argument("candidate_count must be >= 1");
    hybrid.validate();
    defaults.validate();
}

double priority_of(double saliency, double edge, double lambda) { return lambda * saliency + (1.0 - lambda) * edge; }

std::vector<Stroke> init_strokes(std::span<const StrokeCandidate> candidates, const GradientField& gradients,
                                 const FeatureBundle& features, const RasterImage& reference,
                                 const HybridParams& params, const StrokeDefaults& defaults) {
    const int w = features.width();
    const int h = features.height();
    if (gradients.gx.width() != w || gradients.gx.height() != h || reference.width() != w || reference.height() != h) {
        throw std::invalid_argument("init_strokes: gradient, feature and reference sizes differ");
    }
    std::vector<Stroke> out(candidates.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(candidates.size()); ++i) {
        const StrokeCandidate& c = candidates[i];
        const int x = clamp_index(c.anchor.x, w);
        const int y = clamp_index(c.anchor.y, h);
        const double gx = gradients.gx.at(x, y);
        const double gy = gradients.gy.at(x, y);
        double angle = 0.0;
        if (std::sqrt(gx * gx + gy * gy) >= kDegenerateGradient) angle = normalize_angle(std::atan2(gy, gx));

        Stroke s;
        s.x = x;
        s.y = y;
        s.theta = defaults.follow_contours ? normalize_angle(angle + kPi / 2.0) : angle;
        const double d = std::clamp(features.density.at(x, y), 0.0, 1.0);
        s.size = defaults.size_max - (defaults.size_max - defaults.size_min) * d;
        s.length = defaults.length_ratio * s.size;
        s.thickness = defaults.thickness_ratio * s.size;
        const auto rgb = reference_rgb(reference, x, y);
        s.rgba = {std::clamp(rgb[0], 0.0, 1.0), std::clamp(rgb[1], 0.0, 1.0), std::clamp(rgb[2], 0.0, 1.0),
                  defaults.opacity};
        s.texture = defaults.texture;
        s.weight = c.weight;
        s.priority = priority_of(features.saliency.at(x, y), features.edges.at(x, y), params.lambda_priority);
        out[i] = s;
    }
    return out;
}

std::vector<int> apportion(std::span<const double> weights, std::span<const int> capacities, int budget) {
    if (weights.size() != capacities.size()) throw std::invalid_argument("apportion: size mismatch");
    if (budget < 0) throw std::invalid_argument("apportion: negative budget");
    const std::size_t n = weights.size();
    std::vector<int> alloc(n, 0);
    long long total_cap = 0;
    for (int c : capacities) total_cap += std::max(c, 0);
    long long left = std::min<long long>(budget, total_cap);

    while (left > 0) {
        std::vector<std::size_t> open;
        for (std::size_t r = 0; r < n; ++r) {
            if (alloc[r] < capacities[r]) open.push_back(r);
        }
        if (open.empty()) break;
        double z = 0.0;
        for (std::size_t r : open) z += std::max(weights[r], 0.0);
        std::vector<double> share(n, 0.0);
        double zs = 0.0;
        for (std::size_t r : open) {
            share[r] = z > 0.0 ? std::max(weights[r], 0.0) : static_cast<double>(capacities[r] - alloc[r]);
            zs += share[r];
        }

        const long long seats = left;
        std::vector<double> remainder(n, -1.0);
        long long given = 0;
        for (std::size_t r : open) {
            const double quota = static_cast<double>(seats) * share[r] / zs;
            const double fl = std::floor(quota);
            const int room = capacities[r] - alloc[r];
            const int take = static_cast<int>(std::min<double>(fl, room));
            alloc[r] += take;
            given += take;
            if (alloc[r] < capacities[r]) remainder[r] = quota - fl;
        }
        long long extra = seats - given;
        std::vector<std::size_t> order;
        for (std::size_t r : open) {
            if (remainder[r] >= 0.0) order.push_back(r);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t r : order) {
            if (extra == 0) break;
            ++alloc[r];
            --extra;
            ++given;
        }
        if (given == 0) break;
        left -= given;
    }
    return alloc;
}

std::vector<Stroke> enforce_density(std::span<const Stroke> strokes, const ScalarField& density, int budget,
                                    const VoronoiPartition* partition) {
    if (budget < 1) throw std::invalid_argument("enforce_density: budget must be >= 1");
    if (strokes.empty()) return {};
    if (strokes.size() <= static_cast<std::size_t>(budget)) return {strokes.begin(), strokes.end()};

    const bool use_partition = partition != nullptr && partition->width > 0 && partition->height > 0;
    const int w = use_partition ? partition->width : density.width();
    const int h = use_partition ? partition->height : density.height();
    if (w <= 0 || h <= 0) throw std::invalid_argument("enforce_density: empty density field");
    const int cols = (w + kDensityGridStep - 1) / kDensityGridStep;

    std::map<int, std::vector<std::size_t>> regions;
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        const PixelCoord p = anchor_pixel(strokes[i], w, h);
        const int key = use_partition ? partition->label_at(p.x, p.y)
                                      : (p.y / kDensityGridStep) * cols + p.x / kDensityGridStep;
        regions[key].push_back(i);
    }

    std::vector<double> weights;
    std::vector<int> caps;
    for (const auto& [key, members] : regions) {
        double sum = 0.0;
        for (std::size_t i : members) sum += strokes[i].weight;
        weights.push_back(sum);
        caps.push_back(static_cast<int>(members.size()));
    }
    const auto alloc = apportion(weights, caps, budget);

    std::vector<char> keep(strokes.size(), 0);
    std::size_t r = 0;
    for (auto& [key, members] : regions) {
        std::stable_sort(members.begin(), members.end(),
                         [&](std::size_t a, std::size_t b) { return strokes[a].priority > strokes[b].priority; });
        for (int k = 0; k < alloc[r]; ++k) keep[members[k]] = 1;
        ++r;
    }
    std::vector<Stroke> out;
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        if (keep[i]) out.push_back(strokes[i]);
    }
    return out;
}

double footprint_error(const Stroke& stroke, const RasterImage& reference, BrushModel brush) {
    const Footprint fp = stroke_footprint(stroke, brush, reference.width(), reference.height());
    double err = 0.0;
    double total = 0.0;
    for (int y = fp.y0; y < fp.y0 + fp.height; ++y) {
        for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
            const double c = fp.at(x, y);
            if (!(c > 0.0)) continue;
            const auto ref = reference_rgb(reference, x, y);
            double e = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double d = stroke.rgba[k] - ref[k];
                e += d * d;
            }
            err += c * e;
            total += c;
        }
    }
    if (!(total > 0.0)) return std::numeric_limits<double>::infinity();
    return err / total;
}

LocalSearchRefiner::LocalSearchRefiner(BrushModel brush, int sweeps) : brush_(brush), sweeps_(sweeps) {
    if (sweeps < 0) throw std::invalid_argument("LocalSearchRefiner: sweeps must be >= 0");
}

std::string LocalSearchRefiner::cache_key() const {
    return "local_search/" + std::string(to_string(brush_)) + "/" + std::to_string(sweeps_);
}

Stroke LocalSearchRefiner::refine(const Stroke& stroke, const RasterImage& reference, const FeatureBundle&) const {
    const int w = reference.width();
    const int h = reference.height();
    Stroke best = stroke;
    double best_err = footprint_error(best, reference, brush_);

    auto consider = [&](const Stroke& trial) {
        const double e = footprint_error(trial, reference, brush_);
        if (e < best_err) {
            best = trial;
            best_err = e;
            return true;
        }
        return false;
    };

    for (int sweep = 0; sweep < sweeps_; ++sweep) {
        bool improved = false;

        const Stroke base = best;
        Stroke move_best = best;
        double move_err = best_err;
        for (int dy = -2; dy <= 2; ++dy) {
            for (int dx = -2; dx <= 2; ++dx) {
                if (dx == 0 && dy == 0) continue;
                Stroke t = base;
                t.x += dx;
                t.y += dy;
                if (t.x < 0.0 || t.x > w - 1.0 || t.y < 0.0 || t.y > h - 1.0) continue;
                const double e = footprint_error(t, reference, brush_);
                if (e < move_err) {
                    move_best = t;
                    move_err = e;
                }
            }
        }
        if (move_err < best_err) {
            best = move_best;
            best_err = move_err;
            improved = true;
        }

        for (double delta : {-kSearchAngle, kSearchAngle}) {
            Stroke t = best;
            t.theta = normalize_angle(best.theta + delta);
            improved |= consider(t);
        }
        for (double factor : {0.5, 2.0}) {
            Stroke t = best;
            t.thickness = best.thickness * factor;
            improved |= consider(t);
        }

        const Footprint fp = stroke_footprint(best, brush_, w, h);
        std::array<double, 3> sum{};
        double total = 0.0;
        for (int y = fp.y0; y < fp.y0 + fp.height; ++y) {
            for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
                const double c = fp.at(x, y);
                if (!(c > 0.0)) continue;
                const auto ref = reference_rgb(reference, x, y);
                for (int k = 0; k < 3; ++k) sum[k] += c * ref[k];
                total += c;
            }
        }
        if (total > 0.0) {
            Stroke t = best;
            for (int k = 0; k < 3; ++k) t.rgba[k] = std::clamp(sum[k] / total, 0.0, 1.0);
            improved |= consider(t);
        }
        if (!improved) break;
    }
    return best;
}

std::unique_ptr<Refiner> make_refiner(std::string_view name, BrushModel brush) {
    if (name == "identity") return std::make_unique<IdentityRefiner>();
    if (name == "local_search") return std::make_unique<LocalSearchRefiner>(brush);
    throw std::invalid_argument("unknown refiner '" + std::string(name) + "'");
}

std::vector<RefinedPair> refine(std::span<const Stroke> strokes, const Refiner& refiner, const RasterImage& reference,
                                const FeatureBundle& features) {
    std::vector<RefinedPair> out(strokes.size());
    const int w = reference.width();
    const int h = reference.height();
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(strokes.size()); ++i) {
        RefinedPair& p = out[i];
        p.heuristic = strokes[i];
        try {
            p.refined = refiner.refine(strokes[i], reference, features);
            const std::string why = stroke_violation(p.refined, w, h);
            if (!why.empty()) {
                clamp_stroke(p.refined, w, h);
                p.flagged = true;
                p.note = "clamped: " + why;
            }
        } catch (const std::exception& e) {
            p.refined = strokes[i];
            p.flagged = true;
            p.note = std::string("refiner failed: ") + e.what();
        } catch (...) {
            p.refined = strokes[i];
            p.flagged = true;
            p.note = "refiner failed";
        }
    }
    return out;
}

double blend_angle(double a, double b, double gamma) {
    if (gamma == 0.0) return a;
    if (gamma == 1.0) return b;
    if (a == b) return a;
    const double d = std::remainder(b - a, 2.0 * kPi);
    return normalize_angle(a + gamma * d);
}

Stroke blend_correction(const Stroke& heuristic, const Stroke& refined, double gamma) {
    if (!in_unit(gamma)) throw std::invalid_argument("blend gamma must lie in [0,1]");
    if (gamma == 0.0) return heuristic;
    if (gamma == 1.0) return refined;
    Stroke out;
    out.x = lerp_field(heuristic.x, refined.x, gamma);
    out.y = lerp_field(heuristic.y, refined.y, gamma);
    out.theta = blend_angle(heuristic.theta, refined.theta, gamma);
    out.length = lerp_field(heuristic.length, refined.length, gamma);
    out.thickness = lerp_field(heuristic.thickness, refined.thickness, gamma);
    out.size = lerp_field(heuristic.size, refined.size, gamma);
    for (int k = 0; k < 4; ++k) out.rgba[k] = lerp_field(heuristic.rgba[k], refined.rgba[k], gamma);
    out.texture = gamma >= 0.5 ? refined.texture : heuristic.texture;
    out.weight = lerp_field(heuristic.weight, refined.weight, gamma);
    out.priority = lerp_field(heuristic.priority, refined.priority, gamma);
    return out;
}

double consistency_formula(const HybridParams& params, double saliency, double edge, double deviation) {
    return params.q_saliency * saliency + params.q_edge * edge - params.q_penalty * deviation;
}

double stroke_deviation(const Stroke& blended, const Stroke& heuristic, int width, int height) {
    const double diag = std::hypot(double(width), double(height));
    const double shift = std::hypot(blended.x - heuristic.x, blended.y - heuristic.y) / diag;
    const double turn = std::abs(std::remainder(blended.theta - heuristic.theta, 2.0 * kPi)) / kPi;
    const double t_max = std::max(blended.thickness, heuristic.thickness);
    const double widen = t_max > 0.0 ? std::abs(blended.thickness - heuristic.thickness) / t_max : 0.0;
    return (shift + turn + widen) / 3.0;
}

ConsistencyTerms consistency_terms(const Stroke& blended, const Stroke& heuristic, const FeatureBundle& features,
                                   const HybridParams& params, BrushModel brush) {
    const int w = features.width();
    const int h = features.height();
    const Footprint fp = stroke_footprint(blended, brush, w, h);
    double s = 0.0;
    double e = 0.0;
    double total = 0.0;
    for (int y = fp.y0; y < fp.y0 + fp.height; ++y) {
        for (int x = fp.x0; x < fp.x0 + fp.width; ++x) {
            const double c = fp.at(x, y);
            if (!(c > 0.0)) continue;
            s += c * features.saliency.at(x, y);
            e += c * features.edges.at(x, y);
            total += c;
        }
    }
    ConsistencyTerms t;
    if (total > 0.0) {
        t.saliency = s / total;
        t.edge = e / total;
    } else {
        t.saliency = features.saliency.sample(blended.x, blended.y);
        t.edge = features.edges.sample(blended.x, blended.y);
    }
    t.deviation = stroke_deviation(blended, heuristic, w, h);
    t.score = consistency_formula(params, t.saliency, t.edge, t.deviation);
    return t;
}

double consistency_score(const Stroke& blended, const Stroke& heuristic, const FeatureBundle& features,
                         const HybridParams& params, BrushModel brush) {
    return consistency_terms(blended, heuristic, features, params, brush).score;
}

double patch_similarity(const ScalarField& luma, PixelCoord a, PixelCoord b) {
    constexpr int r = kMergePatch / 2;
    constexpr int n = kMergePatch * kMergePatch;
    std::array<double, n> pa{};
    std::array<double, n> pb{};
    const int w = luma.width();
    const int h = luma.height();
    int k = 0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx, ++k) {
            pa[k] = luma.at(clamp_index(a.x + dx, w), clamp_index(a.y + dy, h));
            pb[k] = luma.at(clamp_index(b.x + dx, w), clamp_index(b.y + dy, h));
        }
    }
    if (pa == pb) return 1.0;
    const auto [alo, ahi] = std::minmax_element(pa.begin(), pa.end());
    const auto [blo, bhi] = std::minmax_element(pb.begin(), pb.end());
    if (*alo == *ahi || *blo == *bhi) return 0.5;
    const double ma = std::accumulate(pa.begin(), pa.end(), 0.0) / n;
    const double mb = std::accumulate(pb.begin(), pb.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (int i = 0; i < n; ++i) {
        const double da = pa[i] - ma;
        const double db = pb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return 0.5;
    double ncc = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    if (ncc > 1.0 - 1e-12) ncc = 1.0;
    if (ncc < -1.0 + 1e-12) ncc = -1.0;
    return (ncc + 1.0) / 2.0;
}

Stroke merge_strokes(const Stroke& a, const Stroke& b, const ScalarField& luma, double merge_radius) {
    const double dist = std::hypot(a.x - b.x, a.y - b.y);
    if (!(dist <= merge_radius)) {
        throw std::invalid_argument("merge_strokes: anchors are farther apart than merge_radius");
    }
    const int w = luma.width();
    const int h = luma.height();
    const double omega = patch_similarity(luma, anchor_pixel(a, w, h), anchor_pixel(b, w, h));
    return blend_correction(b, a, omega);
}

Stroke merge_strokes(const Stroke& a, const Stroke& b, const RasterImage& reference, double merge_radius) {
    return merge_strokes(a, b, luminance(reference), merge_radius);
}

std::uint64_t image_hash(const RasterImage& image) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const int dims[3] = {image.width(), image.height(), image.channels()};
    feed(dims, sizeof dims);
    const auto d = image.data();
    feed(d.data(), d.size_bytes());
    return h;
}

namespace {

class KeyBuilder {
public:
    KeyBuilder& add(double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%a|", v);
        key_ += buf;
        return *this;
    }
    KeyBuilder& add(std::uint64_t v) {
        key_ += std::to_string(v) + "|";
        return *this;
    }
    KeyBuilder& add(int v) { return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
    KeyBuilder& add(std::string_view s) {
        key_ += s;
        key_ += "|";
        return *this;
    }
    const std::string& str() const { return key_; }

private:
    std::string key_;
};

struct StepOne {
    RasterImage reference;  // RGB
    ScalarField luma;
    GradientField gradients;
    FeatureBundle features;
    CandidateSet candidates;
};

template <class T>
class Lru {
public:
    explicit Lru(std::size_t cap) : cap_(cap) {}

    std::shared_ptr<const T> get(const std::string& key) {
        for (auto it = items_.begin(); it != items_.end(); ++it) {
            if (it->first == key) {
                items_.splice(items_.begin(), items_, it);
                return items_.front().second;
            }
        }
        return nullptr;
    }
    void put(const std::string& key, std::shared_ptr<const T> value) {
        if (cap_ == 0) return;
        items_.emplace_front(key, std::move(value));
        while (items_.size() > cap_) items_.pop_back();
    }

private:
    std::size_t cap_;
    std::list<std::pair<std::string, std::shared_ptr<const T>>> items_;
};

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::shared_ptr<const StepOne> run_step_one(const RasterImage& image, const PlanParams& params) {
    auto s = std::make_shared<StepOne>();
    s->reference = to_rgb(image);
    s->luma = luminance(s->reference);
    s->gradients = sobel_gradients(s->luma);
    s->features = extract_features(s->reference, params.features);
    const int pixels = image.width() * image.height();
    s->candidates =
        generate_candidate_set(s->features, params.weights, std::min(params.candidate_count, pixels), params.seed);
    return s;
}

std::vector<std::pair<std::size_t, std::size_t>> merge_pairs(const std::vector<Stroke>& strokes, double radius) {
    std::vector<std::size_t> by_x(strokes.size());
    std::iota(by_x.begin(), by_x.end(), std::size_t{0});
    std::stable_sort(by_x.begin(), by_x.end(), [&](std::size_t a, std::size_t b) { return strokes[a].x < strokes[b].x; });
    struct Pair {
        double dist;
        std::size_t i;
        std::size_t j;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < by_x.size(); ++p) {
        const Stroke& a = strokes[by_x[p]];
        for (std::size_t q = p + 1; q < by_x.size() && strokes[by_x[q]].x - a.x <= radius; ++q) {
            const Stroke& b = strokes[by_x[q]];
            const double d = std::hypot(a.x - b.x, a.y - b.y);
            if (d <= radius) {
                pairs.push_back({d, std::min(by_x[p], by_x[q]), std::max(by_x[p], by_x[q])});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    std::vector<char> used(strokes.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> chosen;
    for (const Pair& p : pairs) {
        if (used[p.i] || used[p.j]) continue;
        used[p.i] = used[p.j] = 1;
        chosen.emplace_back(p.i, p.j);
    }
    return chosen;
}

std::vector<Stroke> finish_plan(const std::vector<RefinedPair>& pairs, const StepOne& one, const PlanParams& params,
                                PlanStats& stats) {
    const HybridParams& hp = params.hybrid;
    std::vector<Stroke> blended(pairs.size());
    std::vector<double> scores(pairs.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(pairs.size()); ++i) {
        blended[i] = blend_correction(pairs[i].heuristic, pairs[i].refined, hp.blend_gamma);
        scores[i] = consistency_score(blended[i], pairs[i].heuristic, one.features, hp, params.brush);
    }

    std::vector<Stroke> kept;
    for (std::size_t i = 0; i < blended.size(); ++i) {
        if (scores[i] < hp.q_discard_threshold) {
            ++stats.discarded;
        } else {
            kept.push_back(blended[i]);
        }
    }

    if (hp.merge_radius > 0.0 && kept.size() > 1) {
        const auto chosen = merge_pairs(kept, hp.merge_radius);
        std::vector<char> drop(kept.size(), 0);
        for (const auto& [i, j] : chosen) {
            kept[i] = merge_strokes(kept[i], kept[j], one.luma, hp.merge_radius);
            drop[j] = 1;
        }
        std::vector<Stroke> merged;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (!drop[i]) merged.push_back(kept[i]);
        }
        stats.merged = chosen.size();
        kept = std::move(merged);
    }

    std::stable_sort(kept.begin(), kept.end(), [](const Stroke& a, const Stroke& b) {
        if (a.priority != b.priority) return a.priority < b.priority;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    return kept;
}

}  // namespace

struct Planner::Cache {
    explicit Cache(std::size_t n) : one(n), two(n), three(n) {}
    std::mutex mutex;
    Lru<StepOne> one;
    Lru<std::vector<Stroke>> two;
    Lru<std::vector<RefinedPair>> three;
};

Planner::Planner(std::size_t cache_entries) : cache_(std::make_unique<Cache>(cache_entries)) {}
Planner::~Planner() = default;

PlanResult Planner::plan(const RasterImage& image, const PlanParams& params, const Refiner& refiner) {
    params.validate();
    PlanResult result;
    PlanStats& stats = result.stats;

    KeyBuilder k1;
    k1.add(image_hash(image))
        .add(params.weights.alpha_e)
        .add(params.weights.beta_s)
        .add(params.weights.gamma_d)
        .add(params.features.edge_threshold)
        .add(params.features.density_sigma)
        .add(params.candidate_count)
        .add(params.seed);
    KeyBuilder k2 = k1;
    const auto& d = params.defaults;
    k2.add(params.hybrid.lambda_priority)
        .add(params.hybrid.stroke_budget)
        .add(d.follow_contours ? 1 : 0)
        .add(d.size_max)
        .add(d.size_min)
        .add(d.length_ratio)
        .add(d.thickness_ratio)
        .add(d.opacity)
        .add(to_string(d.texture));
    const std::string refiner_key = refiner.cache_key();
    KeyBuilder k3 = k2;
    k3.add(refiner_key);

    auto t0 = std::chrono::steady_clock::now();
    std::shared_ptr<const StepOne> one;
    {
        std::lock_guard lock(cache_->mutex);
        one = cache_->one.get(k1.str());
    }
    stats.step1_cached = one != nullptr;
    if (!one) {
        one = run_step_one(image, params);
        std::lock_guard lock(cache_->mutex);
        cache_->one.put(k1.str(), one);
    }
    stats.candidates = one->candidates.candidates.size();
    stats.step1_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::shared_ptr<const std::vector<Stroke>> two;
    {
        std::lock_guard lock(cache_->mutex);
        two = cache_->two.get(k2.str());
    }
    stats.step2_cached = two != nullptr;
    if (!two) {
        const auto init = init_strokes(one->candidates.candidates, one->gradients, one->features, one->reference,
                                       params.hybrid, params.defaults);
        two = std::make_shared<const std::vector<Stroke>>(enforce_density(
            init, one->features.density, params.hybrid.stroke_budget, &one->candidates.partition));
        std::lock_guard lock(cache_->mutex);
        cache_->two.put(k2.str(), two);
    }
    stats.after_density = two->size();
    stats.step2_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::shared_ptr<const std::vector<RefinedPair>> three;
    if (!refiner_key.empty()) {
        std::lock_guard lock(cache_->mutex);
        three = cache_->three.get(k3.str());
    }
    stats.step3_cached = three != nullptr;
    if (!three) {
        three = std::make_shared<const std::vector<RefinedPair>>(
            refine(*two, refiner, one->reference, one->features));
        if (!refiner_key.empty()) {
            std::lock_guard lock(cache_->mutex);
            cache_->three.put(k3.str(), three);
        }
    }
    for (const auto& p : *three) stats.flagged += p.flagged ? 1 : 0;
    stats.step3_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    result.strokes = finish_plan(*three, *one, params, stats);
    stats.step4_ms = ms_since(t0);
    return result;
}

PlanResult plan(const RasterImage& image, const PlanParams& params, const Refiner& refiner) {
    Planner planner(0);
    return planner.plan(image, params, refiner);
}

}  // namespace strokeforge
