#pragma once

// Psychometric inventories: item banks loaded from definition files,
// administration to a persona through the backend, Likert parsing and
// dimension scoring.
//
// Definition file layout:
//
//   # comment
//   inventory = hexaco-test12
//   family = HEXACO
//   scale = 1..5
//   H1 | HonestyHumility | false | I would never take credit for someone else's work.
//   ...
//
// Item lines are "id | dimension | reverse_keyed | text"; dimension names
// may be bare (resolved within the family) or qualified.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pesc/core.hpp"
#include "pesc/corpus.hpp"
#include "pesc/pipeline.hpp"

namespace pesc::inventory {

struct Item {
  std::string id;
  std::string text;
  Dimension dimension = HexacoDim::HonestyHumility;
  bool reverse_keyed = false;
};

struct Inventory {
  std::string id;
  Family family = Family::hexaco;
  ScaleBounds scale;
  std::vector<Item> items;

  std::array<Dimension, kDimsPerFamily> dimensions() const { return dimensions_of(family); }
  const Item* find(std::string_view item_id) const;
};

Inventory parse_inventory(std::string_view text, std::string_view origin = "<memory>");
Inventory load_inventory(const std::filesystem::path& path);

// Structural checks for the published instruments, whose item texts users
// supply themselves: HEXACO-60 has 60 items, 10 per dimension; a CSI form
// must cover all six CSI dimensions (any length).
void require_hexaco60_layout(const Inventory& inv);
void require_csi_layout(const Inventory& inv);

// One HEXACO and one CSI inventory, as used by every measurement.
struct InventoryPair {
  Inventory hexaco;
  Inventory csi;
};

// Picks the HEXACO and CSI inventories out of `inventories`; throws unless
// there is exactly one of each and their scales agree.
InventoryPair pair_inventories(std::vector<Inventory> inventories);

struct AdministrationRecord {
  std::string persona_id;
  std::string inventory_id;
  ScaleBounds scale;
  std::map<std::string, std::optional<int>> responses;  // item id -> answer or MISSING
  std::string model;

  std::size_t missing_count() const;
  friend bool operator==(const AdministrationRecord&, const AdministrationRecord&) = default;
};

struct AdministerOptions {
  bool batched = false;
  double max_missing_fraction = 0.2;
};

// Administration gave up on a persona; the partial record is attached.
class AdministrationError : public StageError {
 public:
  AdministrationError(const std::string& message, AdministrationRecord record)
      : StageError(message), record_(std::move(record)) {}
  const AdministrationRecord& record() const noexcept { return record_; }

 private:
  AdministrationRecord record_;
};

// First integer token in the reply that lies within the scale; nullopt otherwise.
std::optional<int> parse_likert(std::string_view reply, ScaleBounds scale);

// min + max - raw.
constexpr int reverse_key(int raw, ScaleBounds scale) noexcept { return scale.min + scale.max - raw; }

AdministrationRecord administer(const PersonaCard& card, const Inventory& inv,
                                const PipelineContext& ctx, const AdministerOptions& options = {});

// Fills the inventory's family side of a profile: the mean effective score
// over answered items of each dimension. Dimensions with no answered item
// stay absent, which leaves the profile partial.
TraitProfile score(const AdministrationRecord& record, const Inventory& inv);

// Combines a HEXACO-side and a CSI-side profile of the same persona.
TraitProfile merge_profiles(const TraitProfile& hexaco_side, const TraitProfile& csi_side);

struct Measurement {
  TraitProfile profile;
  AdministrationRecord hexaco_record;
  AdministrationRecord csi_record;
};

// Administers both inventories and scores them into one profile.
Measurement measure(const PersonaCard& card, const InventoryPair& inventories,
                    const PipelineContext& ctx, const AdministerOptions& options = {});

}  // namespace pesc::inventory

namespace pesc {

template <>
struct RecordTraits<inventory::AdministrationRecord> {
  static constexpr RecordKind kind = RecordKind::administrations;
  static nlohmann::json to_json(const inventory::AdministrationRecord& r);
  static inventory::AdministrationRecord from_json(const nlohmann::json& j, std::size_t line);
  static std::optional<std::string> violation(const inventory::AdministrationRecord& r);
};

}  // namespace pesc
