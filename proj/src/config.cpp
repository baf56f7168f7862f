#include "strokeforge/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace strokeforge {

using nlohmann::json;

namespace {

std::string escape_token(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

class Section {
public:
    Section(const json* j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {}

    bool present() const { return j_ != nullptr; }
    const std::string& ptr() const { return ptr_; }
    std::string at(std::string_view key) const { return ptr_ + "/" + escape_token(key); }

    void allow(std::initializer_list<std::string_view> keys) const {
        if (!j_) return;
        for (const auto& item : j_->items()) {
            bool ok = false;
            for (auto k : keys) ok = ok || k == item.key();
            if (!ok) throw ConfigError(at(item.key()), "unknown key");
        }
    }

    const json* find(std::string_view key) const {
        if (!j_) return nullptr;
        const auto it = j_->find(key);
        return it == j_->end() ? nullptr : &*it;
    }

    Section section(std::string_view key) const {
        const json* v = find(key);
        if (v && !v->is_object()) throw ConfigError(at(key), "expected an object");
        return {v, at(key)};
    }

    template <class Pred>
    void number(std::string_view key, double& dst, Pred ok, const char* rule) const {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number()) throw ConfigError(at(key), "expected a number");
        const double d = v->get<double>();
        if (!ok(d)) throw ConfigError(at(key), rule);
        dst = d;
    }

    void integer(std::string_view key, int& dst, long long lo, long long hi) const {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
        const long long n = v->get<long long>();
        if (n < lo || n > hi) {
            throw ConfigError(at(key), "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        dst = static_cast<int>(n);
    }

    void unsigned_integer(std::string_view key, std::uint64_t& dst) const {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
            throw ConfigError(at(key), "expected a non-negative integer");
        }
        dst = v->get<std::uint64_t>();
    }

    void boolean(std::string_view key, bool& dst) const {
        const json* v = find(key);
        if (!v) return;
        if (!v->is_boolean()) throw ConfigError(at(key), "expected a boolean");
        dst = v->get<bool>();
    }

    std::string string(std::string_view key, std::string fallback) const {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(at(key), "expected a string");
        return v->get<std::string>();
    }

private:
    const json* j_;
    std::string ptr_;
};

bool finite(double v) { return std::isfinite(v); }
bool nonneg(double v) { return v >= 0.0 && std::isfinite(v); }
bool positive(double v) { return v > 0.0 && std::isfinite(v); }
bool unit(double v) { return v >= 0.0 && v <= 1.0; }
bool not_nan(double v) { return !std::isnan(v); }

constexpr const char* kNonneg = "must be finite and >= 0";
constexpr const char* kPositive = "must be finite and > 0";
constexpr const char* kUnit = "must lie in [0,1]";

template <class Enum, class Parse>
Enum read_enum(const Section& s, std::string_view key, Enum fallback, Parse parse, const char* choices) {
    const json* v = s.find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(s.at(key), "expected a string");
    const auto parsed = parse(v->get<std::string>());
    if (!parsed) throw ConfigError(s.at(key), std::string("must be one of ") + choices);
    return *parsed;
}

std::optional<OrderPolicy> parse_order(std::string_view s) {
    if (s == "priority_ascending") return OrderPolicy::priority_ascending;
    if (s == "input_order") return OrderPolicy::input_order;
    return std::nullopt;
}

const char* order_name(OrderPolicy p) { return p == OrderPolicy::input_order ? "input_order" : "priority_ascending"; }

std::optional<StylizeInit> parse_init(std::string_view s) {
    if (s == "content") return StylizeInit::content;
    if (s == "noise") return StylizeInit::noise;
    return std::nullopt;
}

void optional_number(const Section& s, std::string_view key, std::optional<double>& dst, bool (*ok)(double),
                     const char* rule) {
    const json* v = s.find(key);
    if (!v) return;
    if (v->is_null()) {
        dst.reset();
        return;
    }
    if (!v->is_number()) throw ConfigError(s.at(key), "expected a number or null");
    const double d = v->get<double>();
    if (!ok(d)) throw ConfigError(s.at(key), rule);
    dst = d;
}

PlanConfig from_json(const json& root) {
    if (!root.is_object()) throw ConfigError("", "configuration must be a JSON object");
    PlanConfig cfg;
    const Section top(&root, "");
    top.allow({"seed", "refiner", "features", "painterly", "hybrid", "stylize", "render", "exclusion"});
    top.unsigned_integer("seed", cfg.seed);
    cfg.refiner = top.string("refiner", cfg.refiner);
    if (cfg.refiner != "identity" && cfg.refiner != "local_search") {
        throw ConfigError("/refiner", "must be one of identity, local_search");
    }

    const Section f = top.section("features");
    f.allow({"alpha_e", "beta_s", "gamma_d", "edge_threshold", "density_sigma", "candidate_count"});
    f.number("alpha_e", cfg.weights.alpha_e, nonneg, kNonneg);
    f.number("beta_s", cfg.weights.beta_s, nonneg, kNonneg);
    f.number("gamma_d", cfg.weights.gamma_d, nonneg, kNonneg);
    if (!(cfg.weights.alpha_e + cfg.weights.beta_s + cfg.weights.gamma_d > 0.0)) {
        throw ConfigError("/features", "alpha_e, beta_s and gamma_d must not all be zero");
    }
    f.number("edge_threshold", cfg.features.edge_threshold, unit, kUnit);
    f.number("density_sigma", cfg.features.density_sigma, positive, kPositive);
    f.integer("candidate_count", cfg.candidate_count, 1, 1 << 20);

    const Section p = top.section("painterly");
    p.allow({"layers", "quantize_levels", "max_stroke_len", "min_stroke_len", "opacity", "curvature_filter", "brush"});
    if (const json* layers = p.find("layers")) {
        const std::string lp = p.at("layers");
        if (!layers->is_array() || layers->empty()) throw ConfigError(lp, "expected a non-empty array");
        cfg.painterly.layers.clear();
        for (std::size_t i = 0; i < layers->size(); ++i) {
            const std::string ip = lp + "/" + std::to_string(i);
            if (!(*layers)[i].is_object()) throw ConfigError(ip, "expected an object");
            const Section l(&(*layers)[i], ip);
            l.allow({"radius", "error_threshold", "grid_step_factor"});
            LayerSpec spec;
            l.number("radius", spec.radius, [](double v) { return v >= 1.0 && std::isfinite(v); },
                     "must be finite and >= 1");
            l.number("error_threshold", spec.error_threshold, nonneg, kNonneg);
            l.number("grid_step_factor", spec.grid_step_factor, positive, kPositive);
            if (i > 0 && !(spec.radius < cfg.painterly.layers.back().radius)) {
                throw ConfigError(l.at("radius"), "layer radii must be strictly decreasing");
            }
            cfg.painterly.layers.push_back(spec);
        }
    }
    if (const json* q = p.find("quantize_levels")) {
        if (q->is_null()) {
            cfg.painterly.quantize_levels.reset();
        } else {
            int levels = 0;
            p.integer("quantize_levels", levels, 2, 65536);
            cfg.painterly.quantize_levels = levels;
        }
    }
    p.integer("max_stroke_len", cfg.painterly.max_stroke_len, 1, 100000);
    p.integer("min_stroke_len", cfg.painterly.min_stroke_len, 1, 100000);
    if (cfg.painterly.min_stroke_len > cfg.painterly.max_stroke_len) {
        throw ConfigError(p.at("min_stroke_len"), "must not exceed max_stroke_len");
    }
    p.number("opacity", cfg.painterly.opacity, unit, kUnit);
    p.number("curvature_filter", cfg.painterly.curvature_filter, unit, kUnit);
    cfg.painterly.brush =
        read_enum(p, "brush", cfg.painterly.brush, parse_brush, "curved, triangle, rectangle, random_raster");

    const Section h = top.section("hybrid");
    h.allow({"blend_gamma", "lambda_priority", "q_saliency", "q_edge", "q_penalty", "q_discard_threshold",
             "merge_radius", "stroke_budget", "follow_contours", "size_max", "size_min", "length_ratio",
             "thickness_ratio", "opacity", "texture"});
    HybridParams& hp = cfg.hybrid;
    h.number("blend_gamma", hp.blend_gamma, unit, kUnit);
    h.number("lambda_priority", hp.lambda_priority, unit, kUnit);
    h.number("q_saliency", hp.q_saliency, nonneg, kNonneg);
    h.number("q_edge", hp.q_edge, nonneg, kNonneg);
    h.number("q_penalty", hp.q_penalty, nonneg, kNonneg);
    h.number("q_discard_threshold", hp.q_discard_threshold, not_nan, "must be a number");
    h.number("merge_radius", hp.merge_radius, nonneg, kNonneg);
    h.integer("stroke_budget", hp.stroke_budget, 1, 1 << 20);
    StrokeDefaults& sd = cfg.stroke_defaults;
    h.boolean("follow_contours", sd.follow_contours);
    h.number("size_max", sd.size_max, positive, kPositive);
    h.number("size_min", sd.size_min, positive, kPositive);
    if (sd.size_min > sd.size_max) throw ConfigError(h.at("size_min"), "must not exceed size_max");
    h.number("length_ratio", sd.length_ratio, nonneg, kNonneg);
    h.number("thickness_ratio", sd.thickness_ratio, positive, kPositive);
    h.number("opacity", sd.opacity, unit, kUnit);
    sd.texture = read_enum(h, "texture", sd.texture, parse_texture, "solid, stipple, hatch");

    const Section s = top.section("stylize");
    s.allow({"alpha_content", "beta_style", "eta", "iterations", "init", "extractor_seed"});
    s.number("alpha_content", cfg.stylize.alpha_content, nonneg, kNonneg);
    s.number("beta_style", cfg.stylize.beta_style, nonneg, kNonneg);
    if (!(cfg.stylize.alpha_content + cfg.stylize.beta_style > 0.0)) {
        throw ConfigError("/stylize", "alpha_content + beta_style must be > 0");
    }
    s.number("eta", cfg.stylize.eta, positive, kPositive);
    s.integer("iterations", cfg.stylize.iterations, 0, 1000000);
    cfg.stylize.init = read_enum(s, "init", cfg.stylize.init, parse_init, "content, noise");
    s.unsigned_integer("extractor_seed", cfg.stylize.extractor_seed);

    const Section r = top.section("render");
    r.allow({"background", "order_policy", "brush", "post"});
    if (const json* bg = r.find("background")) {
        const std::string bp = r.at("background");
        if (!bg->is_array() || bg->size() != 4) throw ConfigError(bp, "expected an array of 4 numbers");
        for (std::size_t i = 0; i < 4; ++i) {
            const json& c = (*bg)[i];
            if (!c.is_number() || !unit(c.get<double>())) {
                throw ConfigError(bp + "/" + std::to_string(i), "must be a number in [0,1]");
            }
            cfg.render.background[i] = c.get<double>();
        }
    }
    cfg.render.order_policy =
        read_enum(r, "order_policy", cfg.render.order_policy, parse_order, "priority_ascending, input_order");
    cfg.render.brush =
        read_enum(r, "brush", cfg.render.brush, parse_brush, "curved, triangle, rectangle, random_raster");
    const Section post = r.section("post");
    post.allow({"edge_enhance", "denoise", "harmonize"});
    optional_number(post, "edge_enhance", cfg.render.post.edge_enhance, finite, "must be finite");
    optional_number(post, "denoise", cfg.render.post.denoise, nonneg, kNonneg);
    optional_number(post, "harmonize", cfg.render.post.harmonize, unit, kUnit);

    const Section ex = top.section("exclusion");
    ex.allow({"plan_hash", "indices"});
    cfg.exclusion.plan_hash = ex.string("plan_hash", "");
    if (const json* idx = ex.find("indices")) {
        const std::string ip = ex.at("indices");
        if (!idx->is_array()) throw ConfigError(ip, "expected an array of integers");
        for (std::size_t i = 0; i < idx->size(); ++i) {
            const json& v = (*idx)[i];
            if (!v.is_number_integer() || v.get<long long>() < 0 || v.get<long long>() > (1LL << 30)) {
                throw ConfigError(ip + "/" + std::to_string(i), "expected a non-negative integer");
            }
            cfg.exclusion.indices.push_back(v.get<int>());
        }
    }
    return cfg;
}

json to_json(const PlanConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["refiner"] = cfg.refiner;
    j["features"] = {{"alpha_e", cfg.weights.alpha_e},
                     {"beta_s", cfg.weights.beta_s},
                     {"gamma_d", cfg.weights.gamma_d},
                     {"edge_threshold", cfg.features.edge_threshold},
                     {"density_sigma", cfg.features.density_sigma},
                     {"candidate_count", cfg.candidate_count}};
    json layers = json::array();
    for (const auto& l : cfg.painterly.layers) {
        layers.push_back(
            {{"radius", l.radius}, {"error_threshold", l.error_threshold}, {"grid_step_factor", l.grid_step_factor}});
    }
    j["painterly"] = {{"layers", layers},
                      {"quantize_levels", cfg.painterly.quantize_levels ? json(*cfg.painterly.quantize_levels) : json()},
                      {"max_stroke_len", cfg.painterly.max_stroke_len},
                      {"min_stroke_len", cfg.painterly.min_stroke_len},
                      {"opacity", cfg.painterly.opacity},
                      {"curvature_filter", cfg.painterly.curvature_filter},
                      {"brush", std::string(to_string(cfg.painterly.brush))}};
    const auto& hp = cfg.hybrid;
    const auto& sd = cfg.stroke_defaults;
    j["hybrid"] = {{"blend_gamma", hp.blend_gamma},
                   {"lambda_priority", hp.lambda_priority},
                   {"q_saliency", hp.q_saliency},
                   {"q_edge", hp.q_edge},
                   {"q_penalty", hp.q_penalty},
                   {"q_discard_threshold", hp.q_discard_threshold},
                   {"merge_radius", hp.merge_radius},
                   {"stroke_budget", hp.stroke_budget},
                   {"follow_contours", sd.follow_contours},
                   {"size_max", sd.size_max},
                   {"size_min", sd.size_min},
                   {"length_ratio", sd.length_ratio},
                   {"thickness_ratio", sd.thickness_ratio},
                   {"opacity", sd.opacity},
                   {"texture", std::string(to_string(sd.texture))}};
    j["stylize"] = {{"alpha_content", cfg.stylize.alpha_content},
                    {"beta_style", cfg.stylize.beta_style},
                    {"eta", cfg.stylize.eta},
                    {"iterations", cfg.stylize.iterations},
                    {"init", cfg.stylize.init == StylizeInit::noise ? "noise" : "content"},
                    {"extractor_seed", cfg.stylize.extractor_seed}};
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
    j["render"] = {{"background", cfg.render.background},
                   {"order_policy", order_name(cfg.render.order_policy)},
                   {"brush", std::string(to_string(cfg.render.brush))},
                   {"post",
                    {{"edge_enhance", opt(cfg.render.post.edge_enhance)},
                     {"denoise", opt(cfg.render.post.denoise)},
                     {"harmonize", opt(cfg.render.post.harmonize)}}}};
    j["exclusion"] = {{"plan_hash", cfg.exclusion.plan_hash}, {"indices", cfg.exclusion.indices}};
    return j;
}

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

PlanParams PlanConfig::plan_params() const {
    PlanParams p;
    p.weights = weights;
    p.features = features;
    p.candidate_count = candidate_count;
    p.hybrid = hybrid;
    p.defaults = stroke_defaults;
    p.brush = render.brush;
    p.seed = seed;
    return p;
}

PainterlyConfig PlanConfig::painterly_params() const {
    PainterlyConfig p = painterly;
    p.rng_seed = seed;
    return p;
}

StylizeConfig PlanConfig::stylize_params() const {
    StylizeConfig s = stylize;
    s.noise_seed = seed;
    return s;
}

void PlanConfig::validate() const {
    // Round-tripping through the parser applies every field rule with its pointer.
    from_json(to_json(*this));
}

PlanConfig parse_config(std::string_view json_text) { return from_json(parse_json(json_text)); }

std::string dump_config(const PlanConfig& config) { return to_json(config).dump(2) + "\n"; }

PlanConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const std::filesystem::path& path, const PlanConfig& config) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write config " + path.string());
    out << dump_config(config);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

PlanConfig patch_config(const PlanConfig& base, std::string_view patch_json) {
    json doc = to_json(base);
    doc.merge_patch(parse_json(patch_json));
    return from_json(doc);
}

}  // namespace strokeforge
