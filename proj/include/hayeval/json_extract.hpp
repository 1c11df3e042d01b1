#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

namespace hayeval {

/// First parseable JSON array or object embedded in model output, skipping
/// any prose or code fences around it.
std::optional<nlohmann::json> extract_json(std::string_view text);

}  // namespace hayeval
