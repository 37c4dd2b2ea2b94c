#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace raincop {

/// Flat key=value run configuration. Lines starting with '#' and blank lines
/// are ignored; a '#' after a value starts a comment. Unknown keys are
/// rejected so typos do not pass silently.
class RunConfig {
 public:
  static RunConfig parse(std::istream& in, const std::string& source);
  static RunConfig load(const std::filesystem::path& path);
  static const std::vector<std::string>& known_keys();

  /// Later values win; used for command-line overrides.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::optional<std::string> get_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  /// Integer or the word "all" (nullopt).
  std::optional<long long> get_count_or_all(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;

  /// Existing path named by `key`; throws IngestionError when the key is
  /// missing or the file does not exist.
  std::filesystem::path require_path(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  [[noreturn]] void bad(const std::string& key, const std::string& why) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;
};

}  // namespace raincop
