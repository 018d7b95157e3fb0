#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

namespace potforge::detail {

// Parses the TOML subset used by run configs into a JSON object tree:
// [dotted.tables] (bare or quoted keys), key = value, basic and literal
// strings, """multi-line""" strings, integers, floats, booleans and
// (multi-line) arrays. Throws kConfigInvalid with a line number.
nlohmann::json parse_toml(std::string_view text);

}  // namespace potforge::detail
