#include "msenc/json_io.hpp"

#include <cmath>
#include <cstdio>

#include "msenc/errors.hpp"

namespace msenc {

namespace {

void dump_value(const nlohmann::json& v, std::string& out, int indent) {
  const std::string pad(std::size_t(indent) * 2, ' ');
  const std::string pad_inner(std::size_t(indent + 1) * 2, ' ');
  switch (v.type()) {
    case nlohmann::json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // nlohmann objects iterate sorted
        if (!first) out += ",\n";
        first = false;
        out += pad_inner;
        out += nlohmann::json(it.key()).dump();
        out += ": ";
        dump_value(it.value(), out, indent + 1);
      }
      out += '\n' + pad + '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ",\n";
        first = false;
        out += pad_inner;
        dump_value(item, out, indent + 1);
      }
      out += '\n' + pad + ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      double x = v.get<double>();
      if (!std::isfinite(x)) throw DataError("non-finite number in JSON output");
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out += buf;
      return;
    }
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& value) {
  std::string out;
  dump_value(value, out, 0);
  out += '\n';
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string config_hash(const std::string& canonical) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

}  // namespace msenc
