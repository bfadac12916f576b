#include "pesc/inventory.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "pesc/error.hpp"

namespace pesc::inventory {

namespace {

std::vector<std::string> split_bars(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (int field = 0; field < 3; ++field) {
    const auto bar = line.find('|', start);
    if (bar == std::string_view::npos) break;
    out.push_back(trim(line.substr(start, bar - start)));
    start = bar + 1;
  }
  out.push_back(trim(line.substr(start)));  // text may itself contain '|'
  return out;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<ScaleBounds> parse_scale(std::string_view text) {
  const auto t = trim(text);
  auto sep = t.find("..");
  std::size_t skip = 2;
  if (sep == std::string::npos) {
    sep = t.find('-', 1);
    skip = 1;
  }
  if (sep == std::string::npos) return std::nullopt;
  auto lo = to_int(std::string_view(t).substr(0, sep));
  auto hi = to_int(std::string_view(t).substr(sep + skip));
  if (!lo || !hi) return std::nullopt;
  return ScaleBounds{*lo, *hi};
}

}  // namespace

const Item* Inventory::find(std::string_view item_id) const {
  for (const auto& item : items) {
    if (item.id == item_id) return &item;
  }
  return nullptr;
}

Inventory parse_inventory(std::string_view text, std::string_view origin) {
  Inventory inv;
  std::optional<Family> family;
  std::optional<ScaleBounds> scale;
  std::set<std::string> ids;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> ValidationError {
    return ValidationError(std::string(origin) + ":" + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.find('|') == std::string::npos) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw fail("expected 'key = value' header or an item line");
      const auto key = trim(std::string_view(line).substr(0, eq));
      const auto value = trim(std::string_view(line).substr(eq + 1));
      if (!inv.items.empty()) throw fail("header line after the first item");
      if (key == "inventory") {
        if (value.empty()) throw fail("inventory id is empty");
        inv.id = value;
      } else if (key == "family") {
        family = parse_family(value);
        if (!family) throw fail("unknown family '" + value + "' (expected HEXACO or CSI)");
      } else if (key == "scale") {
        scale = parse_scale(value);
        if (!scale) throw fail("scale must look like '1..5'");
        if (scale->min >= scale->max) throw fail("degenerate scale: min must be below max");
      } else {
        throw fail("unknown header key '" + key + "'");
      }
      continue;
    }

    if (inv.id.empty() || !family || !scale) {
      throw fail("items must follow the inventory, family and scale headers");
    }
    const auto fields = split_bars(line);
    if (fields.size() != 4) throw fail("item line needs 'id | dimension | reverse_keyed | text'");
    Item item;
    item.id = fields[0];
    if (item.id.empty()) throw fail("item id is empty");
    if (!ids.insert(item.id).second) throw fail("duplicate item id '" + item.id + "'");
    auto dim = Dimension::parse(fields[1], family);
    if (!dim) {
      throw fail("dimension '" + fields[1] + "' is not one of the six " +
                 std::string(family_name(*family)) + " dimensions");
    }
    item.dimension = *dim;
    if (fields[2] == "true") {
      item.reverse_keyed = true;
    } else if (fields[2] != "false") {
      throw fail("reverse_keyed must be 'true' or 'false'");
    }
    item.text = fields[3];
    if (item.text.empty()) throw fail("item '" + item.id + "' has empty text");
    inv.items.push_back(std::move(item));
  }

  if (inv.id.empty() || !family || !scale) {
    throw ValidationError(std::string(origin) + ": missing inventory, family or scale header");
  }
  if (inv.items.empty()) throw ValidationError(std::string(origin) + ": inventory has no items");
  inv.family = *family;
  inv.scale = *scale;
  return inv;
}

Inventory load_inventory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open inventory " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_inventory(buf.str(), path.string());
}

namespace {

std::array<std::size_t, kDimsPerFamily> items_per_dimension(const Inventory& inv) {
  std::array<std::size_t, kDimsPerFamily> counts{};
  for (const auto& item : inv.items) ++counts[item.dimension.index()];
  return counts;
}

}  // namespace

void require_hexaco60_layout(const Inventory& inv) {
  if (inv.family != Family::hexaco) throw ValidationError(inv.id + " is not a HEXACO inventory");
  if (inv.items.size() != 60) {
    throw ValidationError(inv.id + " has " + std::to_string(inv.items.size()) +
                          " items; HEXACO-60 has 60");
  }
  const auto counts = items_per_dimension(inv);
  for (auto d : inv.dimensions()) {
    if (counts[d.index()] != 10) {
      throw ValidationError(inv.id + " has " + std::to_string(counts[d.index()]) + " items for " +
                            d.qualified_name() + "; HEXACO-60 has 10");
    }
  }
}

void require_csi_layout(const Inventory& inv) {
  if (inv.family != Family::csi) throw ValidationError(inv.id + " is not a CSI inventory");
  const auto counts = items_per_dimension(inv);
  for (auto d : inv.dimensions()) {
    if (counts[d.index()] == 0) {
      throw ValidationError(inv.id + " has no items for " + d.qualified_name());
    }
  }
}

InventoryPair pair_inventories(std::vector<Inventory> inventories) {
  std::optional<Inventory> hexaco;
  std::optional<Inventory> csi;
  for (auto& inv : inventories) {
    auto& slot = inv.family == Family::hexaco ? hexaco : csi;
    if (slot) {
      throw ValidationError("more than one " + std::string(family_name(inv.family)) +
                            " inventory given (" + slot->id + ", " + inv.id + ")");
    }
    slot = std::move(inv);
  }
  if (!hexaco || !csi) throw ValidationError("need one HEXACO and one CSI inventory");
  if (!(hexaco->scale == csi->scale)) {
    throw ValidationError("HEXACO and CSI inventories use different scales");
  }
  return {std::move(*hexaco), std::move(*csi)};
}

// ---------------------------------------------------------------------------

std::size_t AdministrationRecord::missing_count() const {
  std::size_t n = 0;
  for (const auto& [id, answer] : responses) n += !answer.has_value();
  return n;
}

std::optional<int> parse_likert(std::string_view reply, ScaleBounds scale) {
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    // Digits glued to a decimal point ("3.5") are not an integer token.
    const bool fractional = (j < reply.size() && reply[j] == '.' && j + 1 < reply.size() &&
                             std::isdigit(static_cast<unsigned char>(reply[j + 1]))) ||
                            (i > 0 && reply[i - 1] == '.');
    if (!fractional && j - i <= 6) {
      if (auto v = to_int(reply.substr(i, j - i)); v && *v >= scale.min && *v <= scale.max) return v;
    }
    i = j;
  }
  return std::nullopt;
}

namespace {

std::optional<int> ask_item(const PersonaCard& card, const Inventory& inv, const Item& item,
                            const PipelineContext& ctx) {
  const PromptValues values{{"persona", format_card(card)},
                            {"statement", item.text},
                            {"scale_min", std::to_string(inv.scale.min)},
                            {"scale_max", std::to_string(inv.scale.max)}};
  if (auto v = parse_likert(ask(ctx, prompt_names::answer_item, values), inv.scale)) return v;
  const auto problem = "the answer must be a single number from " + std::to_string(inv.scale.min) +
                       " to " + std::to_string(inv.scale.max);
  return parse_likert(reask(ctx, prompt_names::answer_item, values, problem), inv.scale);
}

// "<id>: <number>" lines; keys compared after normalize_label.
std::map<std::string, std::optional<int>> ask_batched(const PersonaCard& card, const Inventory& inv,
                                                      const PipelineContext& ctx) {
  std::map<std::string, const Item*> by_key;
  std::string items;
  for (const auto& item : inv.items) {
    const auto key = normalize_label(item.id);
    if (key.empty() || !by_key.emplace(key, &item).second) return {};  // ids not addressable
    items += item.id + ": " + item.text + "\n";
  }
  const PromptValues values{{"persona", format_card(card)},
                            {"items", trim_right(items)},
                            {"scale_min", std::to_string(inv.scale.min)},
                            {"scale_max", std::to_string(inv.scale.max)}};
  const auto reply = ask(ctx, prompt_names::answer_inventory, values);
  const auto fields =
      parse_key_values(reply, [&](std::string_view k) { return by_key.count(std::string(k)) != 0; });
  std::map<std::string, std::optional<int>> out;
  for (const auto& [key, value] : fields) {
    if (auto v = parse_likert(value, inv.scale)) out[by_key.at(key)->id] = v;
  }
  return out;
}

}  // namespace

AdministrationRecord administer(const PersonaCard& card, const Inventory& inv,
                                const PipelineContext& ctx, const AdministerOptions& options) {
  AdministrationRecord record;
  record.persona_id = card.id;
  record.inventory_id = inv.id;
  record.scale = inv.scale;
  record.model = ctx.client.config().model;

  std::map<std::string, std::optional<int>> batched;
  if (options.batched) batched = ask_batched(card, inv, ctx);
  for (const auto& item : inv.items) {
    if (auto it = batched.find(item.id); it != batched.end()) {
      record.responses[item.id] = it->second;
    } else {
      record.responses[item.id] = ask_item(card, inv, item, ctx);
    }
  }

  const auto missing = record.missing_count();
  const auto fraction = static_cast<double>(missing) / static_cast<double>(inv.items.size());
  if (fraction > options.max_missing_fraction) {
    throw AdministrationError("administration of " + inv.id + " failed for " + card.id + ": " +
                                  std::to_string(missing) + " of " +
                                  std::to_string(inv.items.size()) + " items unanswered",
                              std::move(record));
  }
  return record;
}

TraitProfile score(const AdministrationRecord& record, const Inventory& inv) {
  if (record.inventory_id != inv.id) {
    throw ValidationError("record is for inventory " + record.inventory_id + ", not " + inv.id);
  }
  std::array<double, kDimsPerFamily> sums{};
  std::array<std::size_t, kDimsPerFamily> counts{};
  for (const auto& item : inv.items) {
    auto it = record.responses.find(item.id);
    if (it == record.responses.end() || !it->second) continue;
    const int raw = *it->second;
    if (raw < inv.scale.min || raw > inv.scale.max) {
      throw ValidationError("answer " + std::to_string(raw) + " to " + item.id + " is off the scale");
    }
    sums[item.dimension.index()] += item.reverse_keyed ? reverse_key(raw, inv.scale) : raw;
    ++counts[item.dimension.index()];
  }

  TraitProfile profile;
  profile.persona_id = record.persona_id;
  profile.provenance.model = record.model;
  profile.provenance.inventory_id = inv.id;
  profile.provenance.scale = inv.scale;
  profile.provenance.timestamp = run_timestamp();
  auto& side = profile.scores(inv.family);
  for (std::size_t d = 0; d < kDimsPerFamily; ++d) {
    if (counts[d] > 0) side[d] = sums[d] / static_cast<double>(counts[d]);
  }
  return profile;
}

TraitProfile merge_profiles(const TraitProfile& hexaco_side, const TraitProfile& csi_side) {
  if (hexaco_side.persona_id != csi_side.persona_id) {
    throw ValidationError("cannot merge profiles of " + hexaco_side.persona_id + " and " +
                          csi_side.persona_id);
  }
  TraitProfile out = hexaco_side;
  out.csi = csi_side.csi;
  if (csi_side.provenance.inventory_id != hexaco_side.provenance.inventory_id) {
    out.provenance.inventory_id =
        hexaco_side.provenance.inventory_id + "+" + csi_side.provenance.inventory_id;
  }
  return out;
}

Measurement measure(const PersonaCard& card, const InventoryPair& inventories,
                    const PipelineContext& ctx, const AdministerOptions& options) {
  Measurement m;
  m.hexaco_record = administer(card, inventories.hexaco, ctx, options);
  m.csi_record = administer(card, inventories.csi, ctx, options);
  m.profile = merge_profiles(score(m.hexaco_record, inventories.hexaco),
                             score(m.csi_record, inventories.csi));
  return m;
}

}  // namespace pesc::inventory

// ---------------------------------------------------------------------------

namespace pesc {

using inventory::AdministrationRecord;

nlohmann::json RecordTraits<AdministrationRecord>::to_json(const AdministrationRecord& r) {
  nlohmann::json responses = nlohmann::json::object();
  for (const auto& [id, answer] : r.responses) {
    responses[id] = answer ? nlohmann::json(*answer) : nlohmann::json("MISSING");
  }
  return {{"persona_id", r.persona_id},
          {"inventory", r.inventory_id},
          {"scale", {{"min", r.scale.min}, {"max", r.scale.max}}},
          {"responses", std::move(responses)},
          {"model", r.model}};
}

AdministrationRecord RecordTraits<AdministrationRecord>::from_json(const nlohmann::json& j,
                                                                   std::size_t line) {
  AdministrationRecord r;
  try {
    r.persona_id = j.at("persona_id").get<std::string>();
    r.inventory_id = j.at("inventory").get<std::string>();
    r.scale = {j.at("scale").at("min").get<int>(), j.at("scale").at("max").get<int>()};
    r.model = j.value("model", "");
    for (const auto& [id, answer] : j.at("responses").items()) {
      if (answer.is_string() && answer.get<std::string>() == "MISSING") {
        r.responses[id] = std::nullopt;
      } else if (answer.is_number_integer()) {
        r.responses[id] = answer.get<int>();
      } else {
        throw CorpusError(line, "responses." + id, "expected an integer or \"MISSING\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(line, "", e.what());
  }
  if (auto v = violation(r)) throw CorpusError(line, "responses", *v);
  return r;
}

std::optional<std::string> RecordTraits<AdministrationRecord>::violation(
    const AdministrationRecord& r) {
  for (const auto& [id, answer] : r.responses) {
    if (answer && (*answer < r.scale.min || *answer > r.scale.max)) {
      return "answer " + std::to_string(*answer) + " to " + id + " is off the scale";
    }
  }
  return std::nullopt;
}

}  // namespace pesc
