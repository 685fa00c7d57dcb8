#include "cfa/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "cfa/error.hpp"

namespace cfa {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, value);
  if (ec != std::errc{} || ptr != e) throw ValidationError("invalid value for " + key + ": '" + text + "'");
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || trim(t.substr(0, eq)).empty()) {
      throw ValidationError("config line " + std::to_string(row) + " is not key=value: " + line);
    }
    kv.values_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("missing config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string KeyValues::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

void KeyValues::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << to_string();
}

void KeyValues::set(const std::string& key, const std::string& value) { values_[key] = value; }
void KeyValues::set(const std::string& key, double value) { values_[key] = format_double(value); }
void KeyValues::set(const std::string& key, int value) { values_[key] = std::to_string(value); }
void KeyValues::set(const std::string& key, std::uint64_t value) { values_[key] = std::to_string(value); }
void KeyValues::set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }

std::optional<std::string> KeyValues::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto v = find(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

int KeyValues::get_int(const std::string& key, int fallback) const {
  const auto v = find(key);
  return v ? parse_number<int>(key, *v) : fallback;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto v = find(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ValidationError("invalid boolean for " + key + ": '" + *v + "'");
}

void KeyValues::merge(const KeyValues& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

}  // namespace cfa
