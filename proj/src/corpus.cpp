#include "pesc/corpus.hpp"

#include <fstream>
#include <sstream>

#include "pesc/error.hpp"

namespace pesc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kTagPrefix = "#pesc-corpus";

// Typed field access that reports the offending field on failure.
class Fields {
 public:
  Fields(const json& j, std::size_t line) : j_(j), line_(line) {
    if (!j_.is_object()) throw CorpusError(line_, "", "record is not a JSON object");
  }

  bool has(const char* name) const { return j_.contains(name) && !j_.at(name).is_null(); }

  const json& at(const char* name) const {
    if (!has(name)) throw CorpusError(line_, name, "missing required field");
    return j_.at(name);
  }

  std::string string(const char* name) const {
    const auto& v = at(name);
    if (!v.is_string()) throw CorpusError(line_, name, "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> opt_string(const char* name) const {
    if (!has(name)) return std::nullopt;
    return string(name);
  }

  std::optional<int> opt_int(const char* name) const {
    if (!has(name)) return std::nullopt;
    const auto& v = j_.at(name);
    if (!v.is_number_integer()) throw CorpusError(line_, name, "expected an integer");
    return v.get<int>();
  }

  double number(const json& v, const std::string& name) const {
    if (!v.is_number()) throw CorpusError(line_, name, "expected a number");
    return v.get<double>();
  }

  std::size_t line() const { return line_; }

 private:
  const json& j_;
  std::size_t line_;
};

std::string tag_line(RecordKind kind) {
  return std::string(kTagPrefix) + " kind=" + std::string(to_string(kind)) +
         " version=" + std::to_string(kCorpusVersion);
}

void check_tag(std::string_view line, RecordKind expected, std::size_t line_no) {
  std::istringstream in{std::string(line.substr(kTagPrefix.size()))};
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "kind" && value != to_string(expected)) {
      throw CorpusError(line_no, "", "file holds '" + value + "' records, expected '" +
                                         std::string(to_string(expected)) + "'");
    }
    if (key == "version" && value != std::to_string(kCorpusVersion)) {
      throw CorpusError(line_no, "", "unsupported corpus version " + value);
    }
  }
}

json scores_to_json(const FamilyScores& scores, Family family) {
  json out = json::object();
  for (auto d : dimensions_of(family)) {
    if (auto v = scores[d.index()]) out[std::string(d.name())] = *v;
  }
  return out;
}

FamilyScores scores_from_json(const Fields& f, const json& j, Family family, const char* field) {
  if (!j.is_object()) throw CorpusError(f.line(), field, "expected an object of scores");
  FamilyScores out;
  for (const auto& [key, value] : j.items()) {
    auto d = Dimension::parse(key, family);
    if (!d) {
      throw CorpusError(f.line(), std::string(field) + "." + key,
                        "not a " + std::string(family_name(family)) + " dimension");
    }
    out[d->index()] = f.number(value, std::string(field) + "." + key);
  }
  return out;
}

void write_lines(std::ostream& os, const std::vector<json>& records) {
  for (const auto& r : records) os << r.dump() << '\n';
}

}  // namespace

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::personas: return "personas";
    case RecordKind::dialogues: return "dialogues";
    case RecordKind::profiles: return "profiles";
    case RecordKind::administrations: return "administrations";
  }
  return "personas";
}

std::optional<RecordKind> parse_record_kind(std::string_view text) {
  for (auto k : {RecordKind::personas, RecordKind::dialogues, RecordKind::profiles,
                 RecordKind::administrations}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

json RecordTraits<PersonaCard>::to_json(const PersonaCard& card) {
  json j;
  j["id"] = card.id;
  if (card.age) j["age"] = *card.age;
  if (card.gender) j["gender"] = *card.gender;
  if (card.occupation) j["occupation"] = *card.occupation;
  j["description"] = card.description;
  j["problem"] = card.problem;
  if (card.trait_sentences) {
    json t = json::object();
    for (const auto& [dim, sentence] : *card.trait_sentences) t[dim.qualified_name()] = sentence;
    j["trait_sentences"] = std::move(t);
  }
  j["source"] = std::string(to_string(card.source));
  return j;
}

PersonaCard RecordTraits<PersonaCard>::from_json(const json& j, std::size_t line) {
  Fields f(j, line);
  PersonaCard card;
  card.id = f.string("id");
  card.age = f.opt_int("age");
  card.gender = f.opt_string("gender");
  card.occupation = f.opt_string("occupation");
  card.description = f.string("description");
  card.problem = f.string("problem");
  if (f.has("trait_sentences")) {
    const auto& t = f.at("trait_sentences");
    if (!t.is_object()) throw CorpusError(line, "trait_sentences", "expected an object");
    TraitSentences sentences;
    for (const auto& [key, value] : t.items()) {
      auto d = Dimension::parse(key);
      if (!d) throw CorpusError(line, "trait_sentences." + key, "unknown dimension");
      if (!value.is_string()) throw CorpusError(line, "trait_sentences." + key, "expected a string");
      sentences[*d] = value.get<std::string>();
    }
    card.trait_sentences = std::move(sentences);
  }
  const auto source = f.string("source");
  auto s = parse_source(source);
  if (!s) throw CorpusError(line, "source", "unknown source '" + source + "'");
  card.source = *s;
  if (auto v = find_violation(card)) throw CorpusError(line, "", *v);
  return card;
}

json RecordTraits<Dialogue>::to_json(const Dialogue& dialogue) {
  json j;
  j["id"] = dialogue.id;
  j["condition"] = std::string(to_string(dialogue.condition));
  if (dialogue.persona_id) j["persona_id"] = *dialogue.persona_id;
  json utterances = json::array();
  for (const auto& u : dialogue.utterances) {
    json ju;
    ju["role"] = std::string(to_string(u.role));
    ju["text"] = u.text;
    if (u.strategy) ju["strategy"] = std::string(strategy_label(*u.strategy));
    utterances.push_back(std::move(ju));
  }
  j["utterances"] = std::move(utterances);
  return j;
}

Dialogue RecordTraits<Dialogue>::from_json(const json& j, std::size_t line) {
  Fields f(j, line);
  Dialogue d;
  d.id = f.string("id");
  if (f.has("condition")) {
    const auto c = f.string("condition");
    auto cond = parse_condition(c);
    if (!cond) throw CorpusError(line, "condition", "unknown condition '" + c + "'");
    d.condition = *cond;
  }
  d.persona_id = f.opt_string("persona_id");
  const auto& us = f.at("utterances");
  if (!us.is_array()) throw CorpusError(line, "utterances", "expected an array");
  for (std::size_t i = 0; i < us.size(); ++i) {
    const auto prefix = "utterances[" + std::to_string(i) + "].";
    Fields uf(us[i], line);
    Utterance u;
    const auto role = uf.opt_string("role");
    if (!role) throw CorpusError(line, prefix + "role", "missing required field");
    auto r = parse_role(*role);
    if (!r) throw CorpusError(line, prefix + "role", "unknown role '" + *role + "'");
    u.role = *r;
    const auto text = uf.opt_string("text");
    if (!text) throw CorpusError(line, prefix + "text", "missing required field");
    u.text = *text;
    if (auto label = uf.opt_string("strategy")) {
      try {
        u.strategy = strategy_from_label(*label);
      } catch (const ValidationError& e) {
        throw CorpusError(line, prefix + "strategy", e.what());
      }
    }
    d.utterances.push_back(std::move(u));
  }
  if (auto v = find_violation(d)) throw CorpusError(line, "", *v);
  return d;
}

json RecordTraits<TraitProfile>::to_json(const TraitProfile& p) {
  json j;
  j["persona_id"] = p.persona_id;
  j["hexaco"] = scores_to_json(p.hexaco, Family::hexaco);
  j["csi"] = scores_to_json(p.csi, Family::csi);
  j["partial"] = p.partial();
  json prov;
  prov["model"] = p.provenance.model;
  prov["inventory"] = p.provenance.inventory_id;
  prov["timestamp"] = p.provenance.timestamp;
  prov["scale"] = {{"min", p.provenance.scale.min}, {"max", p.provenance.scale.max}};
  if (!p.provenance.run_id.empty()) prov["run_id"] = p.provenance.run_id;
  j["provenance"] = std::move(prov);
  return j;
}

TraitProfile RecordTraits<TraitProfile>::from_json(const json& j, std::size_t line) {
  Fields f(j, line);
  TraitProfile p;
  p.persona_id = f.string("persona_id");
  p.hexaco = scores_from_json(f, f.at("hexaco"), Family::hexaco, "hexaco");
  p.csi = scores_from_json(f, f.at("csi"), Family::csi, "csi");
  Fields prov(f.at("provenance"), line);
  p.provenance.model = prov.opt_string("model").value_or("");
  p.provenance.inventory_id = prov.opt_string("inventory").value_or("");
  p.provenance.timestamp = prov.opt_string("timestamp").value_or("");
  p.provenance.run_id = prov.opt_string("run_id").value_or("");
  Fields scale(prov.at("scale"), line);
  const auto lo = scale.opt_int("min");
  const auto hi = scale.opt_int("max");
  if (!lo || !hi) throw CorpusError(line, "provenance.scale", "expected integer min and max");
  p.provenance.scale = {*lo, *hi};
  if (f.has("partial")) {
    const auto& flag = f.at("partial");
    if (!flag.is_boolean()) throw CorpusError(line, "partial", "expected a boolean");
    if (flag.get<bool>() != p.partial()) {
      throw CorpusError(line, "partial", "flag disagrees with the scores present");
    }
  }
  if (auto v = find_violation(p)) throw CorpusError(line, "", *v);
  return p;
}

// ---------------------------------------------------------------------------

namespace detail {

void read_records(const fs::path& path, RecordKind kind, const RecordVisitor& visit) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (std::string_view(text).substr(0, kTagPrefix.size()) == kTagPrefix) {
        check_tag(text, kind, line_no);
      }
      continue;
    }
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CorpusError(line_no, "", std::string("malformed JSON: ") + e.what());
    }
    visit(record, line_no);
  }
}

void write_records(const fs::path& path, RecordKind kind, const std::vector<json>& records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << tag_line(kind) << '\n';
    write_lines(out, records);
    if (!out.flush()) throw Error("write to " + path.string() + " failed");
  }
  fs::rename(tmp, path);
}

void append_records(const fs::path& path, RecordKind kind, const std::vector<json>& records) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot open " + path.string() + " for appending");
  if (fresh) out << tag_line(kind) << '\n';
  write_lines(out, records);
  if (!out.flush()) throw Error("append to " + path.string() + " failed");
}

}  // namespace detail

AnyCorpus load_corpus(const fs::path& path, RecordKind kind) {
  switch (kind) {
    case RecordKind::personas: return load_corpus<PersonaCard>(path);
    case RecordKind::dialogues: return load_corpus<Dialogue>(path);
    case RecordKind::profiles: return load_corpus<TraitProfile>(path);
    case RecordKind::administrations: break;
  }
  throw Error("administration records load through load_corpus<AdministrationRecord>");
}

}  // namespace pesc
