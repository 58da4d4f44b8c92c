#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sdbench/landscape.hpp"

namespace sdbench {

/// Registry files are JSON arrays of
///   {"label": "GM1", "location": [x, y], "value": v, "kind": "global"|"local"}
/// in the order reports use for their columns.
std::vector<MinimumSpec> parse_registry(std::string_view json_text);
std::vector<MinimumSpec> load_registry(const std::filesystem::path& path);
std::string registry_to_json(const std::vector<MinimumSpec>& entries);

/// Registry text compiled into the library from data/registry/<name>.json.
std::string_view embedded_registry(std::string_view name);

}  // namespace sdbench
