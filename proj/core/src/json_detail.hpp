#pragma once

#include <json.hpp>

#include "flowplan/config.hpp"
#include "flowplan/env.hpp"

namespace flowplan::detail {

nlohmann::ordered_json environment_to_object(const Environment& env);
/// Throws FormatError.
Environment environment_from_object(const nlohmann::json& j);

inline nlohmann::ordered_json config_to_json(const Config& q) {
    auto arr = nlohmann::ordered_json::array();
    for (double c : q) arr.push_back(c);
    return arr;
}

inline Config config_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Config(std::span<const double>(v));
}

}  // namespace flowplan::detail
