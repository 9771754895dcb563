#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace msenc {

// Serialize with sorted keys and doubles at 17 significant digits, so equal
// invocations produce byte-identical output.
std::string dump_json(const nlohmann::json& value);

// FNV-1a over the canonical invocation string; stamped into output metadata.
std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const std::string& canonical);

}  // namespace msenc
