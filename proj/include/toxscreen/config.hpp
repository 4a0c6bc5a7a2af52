#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace toxscreen {

// Flat "key = value" configuration with '#' comments.
//
// Readers consume keys through the typed getters; check_all_used() then
// reports any key that no reader asked for, which catches typos.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string_view source_name);
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  void set(std::string key, std::string value);

  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_real(std::string_view key, double fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<double> get_reals(std::string_view key, const std::vector<double>& fallback) const;

  void check_all_used() const;

  const std::map<std::string, std::string, std::less<>>& entries() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
  std::string source_;
  mutable std::set<std::string, std::less<>> used_;
};

}  // namespace toxscreen
