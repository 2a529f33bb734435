#pragma once

// Small text-file helpers shared by every on-disk format: CSV field
// splitting, '#'-prefixed provenance headers, exact number round-tripping
// and content fingerprints.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "tnd/errors.hpp"

namespace tnd {

/// Splits one CSV record. Fields may be double-quoted; `""` inside quotes is a literal quote.
inline std::vector<std::string> split_csv(std::string_view line, std::size_t line_no = 0) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      if (!cur.empty()) throw ParseError("stray quote inside unquoted field", line_no);
      in_quotes = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw ParseError("text after closing quote", line_no);
      cur.push_back(ch);
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line_no);
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote_csv(std::string_view s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view field, std::size_t line_no = 0) {
  field = trim(field);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError(fmt::format("expected a number, got '{}'", field), line_no);
  return value;
}

inline long long parse_int(std::string_view field, std::size_t line_no = 0) {
  field = trim(field);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError(fmt::format("expected an integer, got '{}'", field), line_no);
  return value;
}

inline bool parse_flag(std::string_view field, std::size_t line_no = 0) {
  field = trim(field);
  if (field == "1") return true;
  if (field == "0") return false;
  throw ParseError(fmt::format("expected 0 or 1, got '{}'", field), line_no);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) { return fmt::format("{}", x); }

/// `# key=value` lines written at the top of every artifact.
struct Provenance {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(std::string key, std::string value) {
    for (auto& [k, v] : entries) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
  std::string render() const {
    std::string out;
    for (const auto& [k, v] : entries) out += fmt::format("# {}={}\n", k, v);
    return out;
  }
};

/// Reads a text artifact line by line, skipping blank lines and collecting
/// `# key=value` header comments into `provenance`.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next content line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      if (line[0] == '#') {
        auto body = trim(std::string_view(line).substr(1));
        auto eq = body.find('=');
        if (eq != std::string_view::npos)
          provenance.set(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
        continue;
      }
      return true;
    }
    return false;
  }
  std::size_t line_no() const { return line_no_; }

  Provenance provenance;

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path.string()));
  return in;
}

inline std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

/// 64-bit FNV-1a. Used for artifact fingerprints and for keying random streams by id.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

inline std::string file_fingerprint(const std::filesystem::path& path) {
  return hex64(fnv1a64(read_file(path)));
}

}  // namespace tnd
