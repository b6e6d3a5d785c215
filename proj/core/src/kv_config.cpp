#include "fmvo/kv_config.hpp"

#include <fstream>
#include <sstream>

#include "fmvo/errors.hpp"
#include "fmvo/text_format.hpp"

namespace fmvo {

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const std::string_view key = text::trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line_no);
    cfg.values_[std::string(key)] = std::string(text::trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  const auto v = get_string(key);
  if (!v) return std::nullopt;
  try {
    return text::parse_double(*v);
  } catch (const ParseError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::optional<std::int64_t> KeyValueConfig::get_int(const std::string& key) const {
  const auto v = get_string(key);
  if (!v) return std::nullopt;
  try {
    return text::parse_int(*v);
  } catch (const ParseError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::optional<std::uint64_t> KeyValueConfig::get_uint(const std::string& key) const {
  const auto v = get_string(key);
  if (!v) return std::nullopt;
  try {
    return text::parse_uint(*v);
  } catch (const ParseError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace fmvo
