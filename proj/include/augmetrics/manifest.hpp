#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "augmetrics/error.hpp"
#include "augmetrics/rng.hpp"

namespace augmetrics {

enum class Split { Train, Val, Test, Excluded };
enum class Origin { Real, Dup, Aug };

constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::Excluded: return "excluded";
  }
  return "";
}

constexpr std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Real: return "real";
    case Origin::Dup: return "dup";
    case Origin::Aug: return "aug";
  }
  return "";
}

inline std::optional<Split> parse_split(std::string_view token) {
  for (Split s : {Split::Train, Split::Val, Split::Test, Split::Excluded}) {
    if (token == to_string(s)) return s;
  }
  return std::nullopt;
}

inline std::optional<Origin> parse_origin(std::string_view token) {
  for (Origin o : {Origin::Real, Origin::Dup, Origin::Aug}) {
    if (token == to_string(o)) return o;
  }
  return std::nullopt;
}

struct Record {
  std::string id;
  std::string path;
  std::string label;
  Split split = Split::Train;
  Origin origin = Origin::Real;
  bool annotated = false;

  friend bool operator==(const Record&, const Record&) = default;
};

/**
 * Ordered index of dataset records. Immutable once built: every
 * transformation returns a new manifest. Construction validates unique ids,
 * nonempty paths, and that no annotated record sits in the training split.
 */
class Manifest {
 public:
  Manifest() = default;

  explicit Manifest(std::vector<Record> records) : records_(std::move(records)) {
    std::set<std::string_view> seen;
    for (const auto& r : records_) {
      require(!r.id.empty(), ErrorCode::InvalidArgument, "record id is empty");
      require(seen.insert(r.id).second, ErrorCode::InvalidArgument, "duplicate record id '" + r.id + "'");
      require(!r.path.empty(), ErrorCode::InvalidArgument, "record '" + r.id + "' has an empty path");
      require(!(r.annotated && r.split == Split::Train), ErrorCode::InvalidArgument,
              "annotated record '" + r.id + "' cannot be in the training split");
    }
  }

  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const Record* find(std::string_view id) const {
    for (const auto& r : records_) {
      if (r.id == id) return &r;
    }
    return nullptr;
  }

  /// Class labels in lexicographic order.
  std::vector<std::string> labels() const {
    std::set<std::string> set;
    for (const auto& r : records_) set.insert(r.label);
    return {set.begin(), set.end()};
  }

  std::map<std::string, std::size_t> class_counts(std::optional<Split> split = std::nullopt) const {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records_) {
      if (!split || r.split == *split) ++counts[r.label];
    }
    return counts;
  }

  friend bool operator==(const Manifest&, const Manifest&) = default;

 private:
  std::vector<Record> records_;
};

inline constexpr std::string_view kManifestHeader = "id,path,class,split,origin,annotated";

namespace detail {

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
inline std::optional<std::vector<std::string>> csv_split(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"' && current.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(current));
  return fields;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& what) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

}  // namespace detail

inline std::string format_manifest(const Manifest& m) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : m.records()) {
    out += detail::csv_escape(r.id) + ',' + detail::csv_escape(r.path) + ',' + detail::csv_escape(r.label) + ',' +
           std::string(to_string(r.split)) + ',' + std::string(to_string(r.origin)) + ',' + (r.annotated ? "1" : "0") +
           '\n';
  }
  return out;
}

inline Manifest parse_manifest(std::string_view text) {
  std::vector<Record> records;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kManifestHeader) detail::parse_fail(line_no, "expected header '" + std::string(kManifestHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    auto fields = detail::csv_split(line);
    if (!fields) detail::parse_fail(line_no, "unterminated quoted field");
    if (fields->size() != 6) detail::parse_fail(line_no, "expected 6 fields, got " + std::to_string(fields->size()));
    Record r;
    r.id = (*fields)[0];
    r.path = (*fields)[1];
    r.label = (*fields)[2];
    if (r.id.empty()) detail::parse_fail(line_no, "empty id");
    if (!ids.insert(r.id).second) detail::parse_fail(line_no, "duplicate id '" + r.id + "'");
    if (r.path.empty()) detail::parse_fail(line_no, "empty path");
    const auto split = parse_split((*fields)[3]);
    if (!split) detail::parse_fail(line_no, "unknown split '" + (*fields)[3] + "'");
    r.split = *split;
    const auto origin = parse_origin((*fields)[4]);
    if (!origin) detail::parse_fail(line_no, "unknown origin '" + (*fields)[4] + "'");
    r.origin = *origin;
    const std::string& flag = (*fields)[5];
    if (flag != "0" && flag != "1") detail::parse_fail(line_no, "annotated must be 0 or 1, got '" + flag + "'");
    r.annotated = flag == "1";
    if (r.annotated && r.split == Split::Train) detail::parse_fail(line_no, "annotated record in training split");
    records.push_back(std::move(r));
  }
  if (!header_seen) detail::parse_fail(1, "missing header");
  return Manifest(std::move(records));
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::error_code ec;
  require(std::filesystem::is_regular_file(path, ec), ErrorCode::FileNotFound, "'" + path.string() + "' not found");
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

inline void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << format_manifest(m);
  require(out.good(), ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

/// Per-class quotas of the split protocol.
struct SplitPlan {
  std::size_t validation = 150;
  std::size_t clean_test = 100;
  std::size_t annotated_test = 200;
};

/**
 * Assigns splits class by class, ignoring any split already present:
 * `validation` random clean records go to val, the next `clean_test` random
 * clean records to test, up to `annotated_test` random annotated records to
 * test, the rest of the clean pool to train and the rest of the annotated
 * pool to excluded. Record order is preserved.
 *
 * Randomness is forked per class from the seed by the class's position in
 * lexicographic label order.
 */
inline Manifest split(const Manifest& m, std::uint64_t seed, const SplitPlan& plan = {}) {
  std::vector<Record> records = m.records();
  const auto labels = m.labels();
  const CounterRng root(seed);
  for (std::size_t class_index = 0; class_index < labels.size(); ++class_index) {
    const auto& label = labels[class_index];
    std::vector<std::size_t> clean, annotated;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].label != label) continue;
      (records[i].annotated ? annotated : clean).push_back(i);
    }
    const std::size_t needed = plan.validation + plan.clean_test;
    require(clean.size() >= needed, ErrorCode::InsufficientImages,
            "class '" + label + "' has " + std::to_string(clean.size()) + " clean images, need " +
                std::to_string(needed));

    CounterRng rng = root.fork(class_index);
    shuffle(std::span(clean), rng);
    shuffle(std::span(annotated), rng);
    for (std::size_t k = 0; k < clean.size(); ++k) {
      records[clean[k]].split = k < plan.validation ? Split::Val : k < needed ? Split::Test : Split::Train;
    }
    for (std::size_t k = 0; k < annotated.size(); ++k) {
      records[annotated[k]].split = k < plan.annotated_test ? Split::Test : Split::Excluded;
    }
  }
  return Manifest(std::move(records));
}

/// Resolves a record path against the directory holding the manifest.
inline std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

}  // namespace augmetrics
