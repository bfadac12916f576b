#pragma once

// Line-delimited record files. One JSON object per line; blank lines and
// lines starting with '#' are skipped. Files written here start with a
// "#pesc-corpus kind=<kind> version=1" tag line.

#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesc/core.hpp"
#include "pesc/error.hpp"

namespace pesc {

enum class RecordKind { personas, dialogues, profiles, administrations };

std::string_view to_string(RecordKind kind);
std::optional<RecordKind> parse_record_kind(std::string_view text);

inline constexpr int kCorpusVersion = 1;

// Specialized per record type: kind, to_json, from_json (throws CorpusError
// naming the field; the caller fills in the line) and find_violation.
template <class T>
struct RecordTraits;

template <>
struct RecordTraits<PersonaCard> {
  static constexpr RecordKind kind = RecordKind::personas;
  static nlohmann::json to_json(const PersonaCard& card);
  static PersonaCard from_json(const nlohmann::json& j, std::size_t line);
  static std::optional<std::string> violation(const PersonaCard& c) { return find_violation(c); }
};

template <>
struct RecordTraits<Dialogue> {
  static constexpr RecordKind kind = RecordKind::dialogues;
  static nlohmann::json to_json(const Dialogue& dialogue);
  static Dialogue from_json(const nlohmann::json& j, std::size_t line);
  static std::optional<std::string> violation(const Dialogue& d) { return find_violation(d); }
};

template <>
struct RecordTraits<TraitProfile> {
  static constexpr RecordKind kind = RecordKind::profiles;
  static nlohmann::json to_json(const TraitProfile& profile);
  static TraitProfile from_json(const nlohmann::json& j, std::size_t line);
  static std::optional<std::string> violation(const TraitProfile& p) { return find_violation(p); }
};

namespace detail {

using RecordVisitor = std::function<void(const nlohmann::json& record, std::size_t line)>;

void read_records(const std::filesystem::path& path, RecordKind kind, const RecordVisitor& visit);
// Replaces `path` atomically (temp file then rename).
void write_records(const std::filesystem::path& path, RecordKind kind,
                   const std::vector<nlohmann::json>& records);
void append_records(const std::filesystem::path& path, RecordKind kind,
                    const std::vector<nlohmann::json>& records);

template <class T>
std::vector<nlohmann::json> encode_all(std::span<const T> records) {
  std::vector<nlohmann::json> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto v = RecordTraits<T>::violation(records[i])) {
      throw ValidationError("record " + std::to_string(i) + " refused: " + *v);
    }
    out.push_back(RecordTraits<T>::to_json(records[i]));
  }
  return out;
}

}  // namespace detail

template <class T>
std::vector<T> load_corpus(const std::filesystem::path& path) {
  std::vector<T> out;
  detail::read_records(path, RecordTraits<T>::kind, [&](const nlohmann::json& j, std::size_t line) {
    out.push_back(RecordTraits<T>::from_json(j, line));
  });
  return out;
}

// Validates every record before touching the file; an invalid record
// aborts the save and leaves any existing file unchanged.
template <class T>
void save_corpus(std::span<const T> records, const std::filesystem::path& path) {
  detail::write_records(path, RecordTraits<T>::kind, detail::encode_all(records));
}

template <class T>
void save_corpus(const std::vector<T>& records, const std::filesystem::path& path) {
  save_corpus(std::span<const T>(records), path);
}

template <class T>
void append_corpus(std::span<const T> records, const std::filesystem::path& path) {
  detail::append_records(path, RecordTraits<T>::kind, detail::encode_all(records));
}

using AnyCorpus =
    std::variant<std::vector<PersonaCard>, std::vector<Dialogue>, std::vector<TraitProfile>>;

AnyCorpus load_corpus(const std::filesystem::path& path, RecordKind kind);

}  // namespace pesc
