#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hsd {

/// `key = value` text config. Blank lines and lines starting with '#' are
/// skipped; keys are case-sensitive; a key may repeat.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string source = "config");
  static KeyValueConfig read(const std::string& path);

  bool has(std::string_view key) const;
  /// Last value for `key`.
  std::optional<std::string> get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;

  std::string require(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  std::size_t get_size(std::string_view key, std::size_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  /// Throws InvalidConfig naming the first key not in `allowed`.
  void restrict_to(const std::vector<std::string_view>& allowed) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

 private:
  std::string source_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

double parse_double(std::string_view text, std::string_view what);
std::uint64_t parse_u64(std::string_view text, std::string_view what);
std::vector<double> parse_double_list(std::string_view text, std::string_view what);

}  // namespace hsd
