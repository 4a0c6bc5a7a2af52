#include "toxscreen/config.hpp"

#include "toxscreen/error.hpp"
#include "toxscreen/text_io.hpp"

namespace toxscreen {

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source_name) {
  KeyValueConfig cfg;
  cfg.source_ = source_name;
  std::size_t lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::format, std::string(source_name) + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(ErrorKind::format, std::string(source_name) + ":" + std::to_string(lineno) + ": empty key");
    if (cfg.values_.count(key)) {
      fail(ErrorKind::validation, std::string(source_name) + ": duplicate key '" + key + "'");
    }
    cfg.values_.emplace(std::move(key), std::move(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path), path.string());
}

bool KeyValueConfig::has(std::string_view key) const { return values_.find(key) != values_.end(); }

void KeyValueConfig::set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

std::string KeyValueConfig::get_string(std::string_view key, std::string_view fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::string(fallback);
  used_.insert(it->first);
  return it->second;
}

double KeyValueConfig::get_real(std::string_view key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_.insert(it->first);
  return parse_real(it->second, key);
}

std::uint64_t KeyValueConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_.insert(it->first);
  return parse_u64(it->second, key);
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_.insert(it->first);
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::format, "invalid boolean for " + std::string(key) + ": '" + v + "'");
}

std::vector<double> KeyValueConfig::get_reals(std::string_view key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  used_.insert(it->first);
  std::vector<double> out;
  for (const auto& part : split(it->second, ',')) out.push_back(parse_real(part, key));
  return out;
}

void KeyValueConfig::check_all_used() const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) {
      fail(ErrorKind::validation, (source_.empty() ? std::string("config") : source_) + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace toxscreen
