#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "strokeforge/stroke.hpp"

namespace strokeforge {

class PlanFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kPlanVersion = 1;

struct StrokePlan {
    int width = 0;
    int height = 0;
    std::vector<Stroke> strokes;

    friend bool operator==(const StrokePlan&, const StrokePlan&) = default;
};

/// Numbers are written with 17 significant digits so parsing restores them exactly.
std::string serialize_plan(const StrokePlan& plan);
StrokePlan parse_plan(std::string_view text);

/// FNV-1a 64 of the bytes, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace strokeforge
