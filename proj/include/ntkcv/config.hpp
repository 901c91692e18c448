#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ntkcv {

struct PresetInfo {
  std::string name;
  std::string description;
};

/// Flat key = value configuration. Every key has a documented default; files,
/// presets and command-line flags may only set known keys. '-' and '_' are
/// interchangeable in key names.
class Config {
public:
  /// All known keys at their defaults.
  Config();

  static Config from_preset(std::string_view name);
  static std::vector<PresetInfo> presets();
  static std::vector<std::pair<std::string, std::string>> key_help();

  /// Applies `key = value` lines; '#' starts a comment.
  void merge_text(std::string_view text, std::string_view origin = "<text>");
  void merge_file(const std::filesystem::path& path);
  void set(std::string_view key, std::string value);

  const std::string& get(std::string_view key) const;
  long long get_int(std::string_view key) const;
  std::uint64_t get_u64(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::vector<int> get_int_list(std::string_view key) const;
  std::vector<std::string> get_list(std::string_view key) const;

  /// Sorted `key = value` lines.
  std::string to_text() const;
  const std::map<std::string, std::string>& values() const { return values_; }

  static std::string normalize_key(std::string_view key);

private:
  std::map<std::string, std::string> values_;
};

}  // namespace ntkcv
