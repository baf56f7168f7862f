#include "strokeforge/plan_codec.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "json.hpp"

namespace strokeforge {

namespace {

void append_number(std::string& out, double v) {
    if (!std::isfinite(v)) throw PlanFormatError("plan contains a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    if (std::strpbrk(buf, ".e") == nullptr) out += ".0";
}

double number_at(const nlohmann::json& obj, const char* key, std::size_t index) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw PlanFormatError("stroke " + std::to_string(index) + ": '" + key + "' must be a number");
    }
    return it->get<double>();
}

}  // namespace

std::string serialize_plan(const StrokePlan& plan) {
    std::string out = "{\"version\":1,\"image\":{\"w\":" + std::to_string(plan.width) +
                      ",\"h\":" + std::to_string(plan.height) + "},\"strokes\":[";
    for (std::size_t i = 0; i < plan.strokes.size(); ++i) {
        const Stroke& s = plan.strokes[i];
        if (i) out += ',';
        out += "\n{\"x\":";
        append_number(out, s.x);
        out += ",\"y\":";
        append_number(out, s.y);
        out += ",\"theta\":";
        append_number(out, s.theta);
        out += ",\"len\":";
        append_number(out, s.length);
        out += ",\"thick\":";
        append_number(out, s.thickness);
        out += ",\"size\":";
        append_number(out, s.size);
        out += ",\"rgba\":[";
        for (int c = 0; c < 4; ++c) {
            if (c) out += ',';
            append_number(out, s.rgba[c]);
        }
        out += "],\"texture\":\"";
        out += to_string(s.texture);
        out += "\",\"weight\":";
        append_number(out, s.weight);
        out += ",\"priority\":";
        append_number(out, s.priority);
        out += '}';
    }
    out += plan.strokes.empty() ? "]}\n" : "\n]}\n";
    return out;
}

StrokePlan parse_plan(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw PlanFormatError(std::string("plan is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw PlanFormatError("plan must be a JSON object");
    const auto version = doc.find("version");
    if (version == doc.end() || !version->is_number_integer()) throw PlanFormatError("plan lacks an integer version");
    if (version->get<long long>() != kPlanVersion) {
        throw PlanFormatError("unsupported plan version " + version->dump());
    }
    const auto image = doc.find("image");
    if (image == doc.end() || !image->is_object()) throw PlanFormatError("plan lacks an image object");
    StrokePlan plan;
    for (auto [key, dst] : {std::pair{"w", &plan.width}, std::pair{"h", &plan.height}}) {
        const auto it = image->find(key);
        if (it == image->end() || !it->is_number_integer() || it->get<long long>() < 1 ||
            it->get<long long>() > 16384) {
            throw PlanFormatError(std::string("image.") + key + " must be an integer in [1,16384]");
        }
        *dst = it->get<int>();
    }
    const auto strokes = doc.find("strokes");
    if (strokes == doc.end() || !strokes->is_array()) throw PlanFormatError("plan lacks a strokes array");
    plan.strokes.reserve(strokes->size());
    for (std::size_t i = 0; i < strokes->size(); ++i) {
        const auto& js = (*strokes)[i];
        if (!js.is_object()) throw PlanFormatError("stroke " + std::to_string(i) + " is not an object");
        Stroke s;
        s.x = number_at(js, "x", i);
        s.y = number_at(js, "y", i);
        s.theta = number_at(js, "theta", i);
        s.length = number_at(js, "len", i);
        s.thickness = number_at(js, "thick", i);
        s.size = number_at(js, "size", i);
        const auto rgba = js.find("rgba");
        if (rgba == js.end() || !rgba->is_array() || rgba->size() != 4) {
            throw PlanFormatError("stroke " + std::to_string(i) + ": 'rgba' must hold 4 numbers");
        }
        for (int c = 0; c < 4; ++c) {
            if (!(*rgba)[c].is_number()) throw PlanFormatError("stroke " + std::to_string(i) + ": bad rgba");
            s.rgba[c] = (*rgba)[c].get<double>();
        }
        const auto tex = js.find("texture");
        if (tex == js.end() || !tex->is_string()) {
            throw PlanFormatError("stroke " + std::to_string(i) + ": 'texture' must be a string");
        }
        const auto t = parse_texture(tex->get<std::string>());
        if (!t) throw PlanFormatError("stroke " + std::to_string(i) + ": unknown texture " + tex->dump());
        s.texture = *t;
        s.weight = number_at(js, "weight", i);
        s.priority = number_at(js, "priority", i);
        plan.strokes.push_back(s);
    }
    return plan;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace strokeforge
