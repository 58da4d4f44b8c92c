#include "sdbench/registry.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sdbench/errors.hpp"
#include "embedded_data.hpp"

namespace sdbench {

using nlohmann::json;

std::vector<MinimumSpec> parse_registry(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("registry: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("registry: top level must be an array");

  std::vector<MinimumSpec> out;
  for (const auto& item : doc) {
    try {
      MinimumSpec m;
      m.label = item.at("label").get<std::string>();
      m.location = item.at("location").get<ParamVector>();
      m.value = item.at("value").get<double>();
      const auto kind = item.at("kind").get<std::string>();
      if (kind == "global")
        m.kind = MinimumKind::Global;
      else if (kind == "local")
        m.kind = MinimumKind::Local;
      else
        throw ConfigError("registry: kind must be 'global' or 'local', got '" + kind + "'");
      if (item.contains("sharpness")) m.sharpness = item.at("sharpness").get<double>();
      out.push_back(std::move(m));
    } catch (const json::exception& e) {
      throw ConfigError(std::string("registry entry: ") + e.what());
    }
  }
  return out;
}

std::vector<MinimumSpec> load_registry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open registry file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_registry(ss.str());
}

std::string registry_to_json(const std::vector<MinimumSpec>& entries) {
  // One entry per line, same layout as the shipped files.
  std::ostringstream os;
  os << "[\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& m = entries[i];
    nlohmann::ordered_json item;
    item["label"] = m.label;
    item["location"] = m.location;
    item["value"] = m.value;
    item["kind"] = m.kind == MinimumKind::Global ? "global" : "local";
    if (m.sharpness) item["sharpness"] = *m.sharpness;
    os << "  " << item.dump() << (i + 1 < entries.size() ? ",\n" : "\n");
  }
  os << "]\n";
  return os.str();
}

std::string_view embedded_registry(std::string_view name) {
  for (const auto& [key, text] : detail::kRegistryFiles)
    if (key == name) return text;
  throw ArgumentError("no shipped registry for '" + std::string(name) + "'");
}

}  // namespace sdbench
