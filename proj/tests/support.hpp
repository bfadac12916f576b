#pragma once

// Shared helpers for the test binaries: scratch directories, mock sessions
// and profile builders.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pesc/core.hpp"
#include "pesc/inventory.hpp"
#include "pesc/llm.hpp"
#include "pesc/pipeline.hpp"
#include "pesc/prompts.hpp"

#ifndef PESC_TEST_DATA_DIR
#define PESC_TEST_DATA_DIR "data"
#endif

namespace pesc::testing {

namespace fs = std::filesystem;

inline fs::path data_dir() { return PESC_TEST_DATA_DIR; }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("pesc-test-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline llm::BackendConfig fast_config() {
  llm::BackendConfig c;
  c.backoff_base = std::chrono::milliseconds(0);
  return c;
}

// Mock backend plus client plus builtin prompts.
struct MockSession {
  explicit MockSession(const nlohmann::json& fixtures, llm::BackendConfig config = fast_config())
      : backend(llm::MockBackend::from_json(fixtures)),
        client(backend, config),
        prompts(PromptSet::builtin()) {}

  PipelineContext ctx() { return {client, prompts}; }

  std::shared_ptr<llm::MockBackend> backend;
  llm::Client client;
  PromptSet prompts;
};

inline inventory::InventoryPair bundled_inventories() {
  return inventory::pair_inventories({inventory::load_inventory(data_dir() / "inventories" / "hexaco_test12.inv"),
                                      inventory::load_inventory(data_dir() / "inventories" / "csi_test12.inv")});
}

inline TraitProfile make_profile(std::string id, const std::array<double, 6>& hexaco,
                                 const std::array<double, 6>& csi, std::string inventory = "h+c") {
  TraitProfile p;
  p.persona_id = std::move(id);
  for (std::size_t d = 0; d < 6; ++d) {
    p.hexaco[d] = hexaco[d];
    p.csi[d] = csi[d];
  }
  p.provenance.model = "test";
  p.provenance.inventory_id = std::move(inventory);
  p.provenance.timestamp = "2024-01-01T00:00:00Z";
  return p;
}

// Twelve "<dim>: sentence" lines covering both families.
inline std::string all_trait_lines(std::string_view sentence = "typical") {
  std::string out;
  for (auto d : all_dimensions()) out += d.qualified_name() + ": " + std::string(sentence) + "\n";
  return out;
}

}  // namespace pesc::testing
