#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace cfa {

/// Flat `key=value` text. Blank lines and lines starting with '#' are
/// ignored; keys are unique and kept sorted so output is canonical.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text);
  static KeyValues load(const std::filesystem::path& path);

  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, int value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, bool value);

  bool contains(const std::string& key) const { return values_.contains(key); }
  std::optional<std::string> find(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Entries of `other` override entries here.
  void merge(const KeyValues& other);

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace cfa
