#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "eden/cem.hpp"
#include "eden/types.hpp"

namespace eden {

struct EngineConfig {
  // CEM
  int dim_xy = 4;
  int dim_z = 8;
  double min_e = 4.0;
  double dr = 0.05;
  double at_mod = 1.0;
  double learning_rate = 0.05;
  // Forward passes per epoch (residual energy carries across them).
  int passes_per_epoch = 16;

  // Stability, pruning, goals, release
  double stability_prune_threshold = 0.25;
  double stability_min = 0.5;
  double goal_refresh_threshold = 0.5;
  double architector_sigma = 2.0;
  int spike_history_window = 10;
  double baseline_alpha = 0.1;

  // Genetics and seeding
  double mutation_rate = 0.05;
  int initial_nodes = 10;
  int max_nodes = 64;  // neurogenesis cap
  int initial_genes = 4;
  int initial_dendrites = 4;
  int initial_terminals = 2;
  int transmitter_types = 4;
  int architector_types = 8;
  double emit_magnitude = 1.0;
  // Upper bound on the PE / MinE factor applied to emitted magnitudes.
  double max_emit_ratio = 2.0;

  // Neural grid
  Box bounds{};
  double grid_cell_size = 1.0;
  int payload_ttl = 3;
  double payload_decay = 0.9;
  double epsilon_magnitude = 1e-3;
  double pickup_radius = 1.0;
  double neurite_radius = 1.5;
  double spawn_radius = 1.0;
  double action_scan_radius = 2.0;
  double gradient_sigma = 1.0;
  double max_step = 0.25;

  std::uint64_t seed = 1;

  cem::CemParams cem_params() const { return {min_e, dr, at_mod}; }

  bool operator==(const EngineConfig&) const = default;
};

// Every violated range, in field order. Empty when the config is valid.
std::vector<std::string> config_violations(const EngineConfig& config);
// Throws ConfigError carrying config_violations() when non-empty.
void validate(const EngineConfig& config);

nlohmann::json to_json(const EngineConfig& config);
// Missing keys keep their defaults; unknown keys and type mismatches are
// violations. Throws ConfigError with the complete list.
EngineConfig config_from_json(const nlohmann::json& j);
EngineConfig load_config(const std::string& path);

}  // namespace eden
