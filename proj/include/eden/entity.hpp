#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "eden/config.hpp"
#include "eden/functome.hpp"
#include "eden/grid.hpp"
#include "eden/node.hpp"
#include "eden/rng.hpp"

namespace eden {

struct ProbePayload {
  Vec3 offset;
  int index = 0;
  double magnitude = 1.0;
  bool operator==(const ProbePayload&) const = default;
};

struct ProbeFrame {
  double jitter = 0.0;  // magnitudes scaled by 1 + U(-jitter, jitter)
  std::vector<ProbePayload> payloads;
  bool operator==(const ProbeFrame&) const = default;
};

// Deposits one frame per propagation pass, cycling through its pattern.
struct InputProbe {
  std::uint64_t id = 0;
  Vec3 position;
  std::vector<ProbeFrame> frames;
  std::size_t cursor = 0;
  bool operator==(const InputProbe&) const = default;
};

struct OutputProbe {
  std::uint64_t id = 0;
  Vec3 position;
  double radius = 1.0;
  std::vector<double> history;
  bool operator==(const OutputProbe&) const = default;
};

struct StructuralChange {
  NodeId node = 0;
  std::string action;
  std::string source;  // "gene <n>" or "architector <payload id>"
  bool applied = false;
  std::string detail;
};

struct EpochReport {
  std::int64_t epoch = 0;
  bool locked = false;
  std::map<NodeId, std::vector<SpikeEvent>> spikes;
  std::map<NodeId, double> stability;
  std::map<NodeId, NodeState> classification;
  std::vector<NodeId> pruned;
  std::vector<NodeId> born;
  std::size_t payloads_deposited = 0;
  std::size_t payloads_consumed = 0;
  std::size_t payloads_expired = 0;
  std::vector<StructuralChange> changes;
  std::size_t mutations = 0;
  std::vector<double> probe_readings;

  std::size_t spike_count() const;
};

struct Entity {
  std::uint64_t id = 1;
  EngineConfig config;
  std::map<NodeId, ProcessNode> nodes;
  NeuralGrid grid;
  std::map<FunctomeId, Functome> functomes;
  std::vector<InputProbe> input_probes;
  std::vector<OutputProbe> output_probes;
  std::int64_t entity_clock = 0;
  Rng rng;
  NodeId next_node_id = 1;
  FunctomeId next_functome_id = 1;
  std::uint64_t next_probe_id = 1;
  bool locked = false;
  // Non-repeating environment rules that have already fired.
  std::set<std::string> fired_rules;

  NodeParams node_params() const { return NodeParams::from(config); }
  GeneSpace gene_space() const;
  const Functome& functome_of(const ProcessNode& node) const;
  void refresh_hash(ProcessNode& node) const;
};

// Validates the config (ConfigError lists every violation) and grows the
// initial nodes from config.seed.
Entity seed_entity(const EngineConfig& config);

// Neurogenesis and apoptosis requests gathered during Develop and applied at
// its commit.
struct DevelopQueue {
  struct Birth {
    NodeId parent = 0;
    Vec3 soma;
  };
  std::vector<Birth> births;
  std::vector<NodeId> deaths;
};

StructuralChange execute_action(const ActionGene& gene, ProcessNode& node, Entity& entity,
                                Rng& rng, DevelopQueue& queue);

void propagate_phase(Entity& entity, EpochReport& report);
std::vector<NodeId> evaluate_prune_phase(Entity& entity, EpochReport& report);
void develop_phase(Entity& entity, EpochReport& report);
EpochReport run_epoch(Entity& entity);

void lock(Entity& entity);
void unlock(Entity& entity);

nlohmann::json to_json(const EpochReport& report);
nlohmann::json to_json(const Entity& entity);
Entity entity_from_json(const nlohmann::json& j);

nlohmann::json to_json(const InputProbe& probe);
InputProbe input_probe_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OutputProbe& probe);
OutputProbe output_probe_from_json(const nlohmann::json& j);

}  // namespace eden
