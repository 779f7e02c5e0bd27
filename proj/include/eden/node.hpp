#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "eden/cem.hpp"
#include "eden/config.hpp"
#include "eden/functome.hpp"
#include "eden/grid.hpp"
#include "eden/rng.hpp"
#include "eden/types.hpp"

namespace eden {

using cem::SpikeEvent;

struct GrowthCone {
  double step_size = 0.0;
  bool active = false;
  int attractant_index = 0;
  bool operator==(const GrowthCone&) const = default;
};

struct Dendrite {
  Vec3 position;
  double pickup_radius = 1.0;
  std::set<int> accepted_transmitter_indices;
  double gain = 1.0;
  GrowthCone growth_cone;
  bool operator==(const Dendrite&) const = default;
};

struct AxonTerminal {
  Vec3 position;
  int emit_transmitter_index = 0;
  double emit_magnitude = 1.0;
  double excitatory = 1.0;  // +1 excitatory, -1 inhibitory
  GrowthCone growth_cone;
  bool operator==(const AxonTerminal&) const = default;
};

// Per-plane spike histogram with add-one smoothing built in: every bin starts
// at 1, so all bins stay strictly positive.
class SpikeDistribution {
 public:
  explicit SpikeDistribution(int bins = 1) : bins_(static_cast<std::size_t>(bins), 1.0) {}

  void record(int z) { bins_.at(static_cast<std::size_t>(z)) += 1.0; }
  void reset() { std::fill(bins_.begin(), bins_.end(), 1.0); }

  const std::vector<double>& bins() const { return bins_; }
  std::vector<double>& bins() { return bins_; }
  double total() const;
  std::vector<double> probabilities() const;

  bool operator==(const SpikeDistribution&) const = default;

 private:
  std::vector<double> bins_;
};

// 1 / max(KL(prev || curr), 1) with natural log. Throws StructuralError on a bin
// count mismatch.
double stability_index(const SpikeDistribution& prev, const SpikeDistribution& curr);
double kl_divergence(std::span<const double> p, std::span<const double> q);

enum class NodeState : std::uint8_t { Neutral, Generation, Discrimination };
std::string_view to_string(NodeState s);

// Node-level settings drawn from EngineConfig.
struct NodeParams {
  cem::CemParams cem;
  double learning_rate = 0.05;
  double goal_refresh_threshold = 0.5;
  double architector_sigma = 2.0;
  int spike_history_window = 10;
  double baseline_alpha = 0.1;
  int payload_ttl = 3;
  double max_emit_ratio = 2.0;
  double gradient_sigma = 1.0;
  double max_step = 0.25;
  Box bounds;

  static NodeParams from(const EngineConfig& c);
};

struct ProcessNode {
  NodeId id = 0;
  Vec3 soma;
  cem::PwrTensor cem;
  double min_e = 4.0;
  double dr = 0.05;
  std::vector<Dendrite> dendrites;
  std::vector<AxonTerminal> axon_terminals;
  std::optional<cem::GoalPlane> goal;
  SpikeDistribution spike_dist_prev;
  SpikeDistribution spike_dist_curr;
  double stability_index = 1.0;
  double previous_stability = 1.0;
  std::int64_t node_clock = 0;
  FunctomeId functome_id = 0;
  std::string identity_hash;
  double baseline_input_count = 0.0;
  bool baseline_established = false;
  std::set<int> permitted_transmitters;
  std::set<int> permitted_architectors;
  std::vector<int> spike_count_history;  // completed epochs, oldest first
  double last_epoch_energy = 0.0;
  std::set<int> warned_emit_indices;  // log-once latch, not saved

  // Per-epoch state, cleared by begin_epoch().
  bool stimulated_this_epoch = false;
  int spikes_this_epoch = 0;
  int inputs_this_epoch = 0;
  double energy_this_epoch = 0.0;
  bool spiked_at_goal_this_epoch = false;
  std::vector<TransArchPayload> received_architectors;
  std::set<std::size_t> fed_dendrites;  // dendrite ordinals that accepted input
  std::vector<SpikeEvent> spikes;

  ProcessNode() = default;
  ProcessNode(NodeId id, Vec3 soma, int dim_xy, int dim_z, const cem::CemParams& params);

  cem::CemParams cem_params(double at_mod = 1.0) const { return {min_e, dr, at_mod}; }
  // Throws StructuralError when there are more dendrites than entry cells.
  void validate_morphology() const;
  void begin_epoch();
};

// Entry cell of the dendrite with the given ordinal.
inline std::pair<int, int> dendrite_entry_cell(std::size_t ordinal, int dim_xy) {
  return {static_cast<int>(ordinal % static_cast<std::size_t>(dim_xy)),
          static_cast<int>(ordinal / static_cast<std::size_t>(dim_xy))};
}

struct InputCollection {
  struct Item {
    PayloadId payload = 0;
    std::size_t dendrite = 0;
    cem::Deposit deposit;
  };
  std::vector<Item> items;                        // transmitter deposits
  std::vector<TransArchPayload> architectors;     // picked up for Develop

  std::vector<cem::Deposit> deposits() const;
  std::vector<PayloadId> consumed() const;
  // Removes everything claimed by an earlier node, then adds what remains.
  void drop_claimed(std::set<PayloadId>& claimed);
};

// Reads the committed grid only.
InputCollection collect_inputs(const ProcessNode& node, const NeuralGrid& grid);
// Records accepted inputs on the node (stimulation flag, counts, architectors).
void apply_inputs(ProcessNode& node, const InputCollection& inputs);

// One forward pass plus, on a spike, the full spike response: histogram,
// router reinforcement, goal update, backprop, reset.
std::optional<SpikeEvent> step_node(ProcessNode& node, std::span<const cem::Deposit> deposits,
                                    const NodeParams& params, std::int64_t epoch);

void update_goal(ProcessNode& node, const SpikeEvent& spike, double goal_refresh_threshold);

std::vector<TransArchPayload> emit_payloads(ProcessNode& node, const SpikeEvent& spike,
                                            const NodeParams& params);

// Stale-router randomization when the epoch produced no spike, spike history
// bookkeeping and the end-of-epoch propagation reset.
void end_propagation_epoch(ProcessNode& node, const NodeParams& params, Rng& rng);

// Recomputes the stability index from (prev, curr) and rolls the histograms.
void evaluate_stability(ProcessNode& node);

NodeState classify_state(ProcessNode& node, int inputs_this_epoch, double baseline_alpha);

// Moves every active growth cone one step up its attractant gradient. A
// dendrite that accepted input this epoch holds its position.
std::size_t grow(ProcessNode& node, const NeuralGrid& grid, const NodeParams& params);

std::string node_hash(const ProcessNode& node, const Functome& functome);

nlohmann::json to_json(const ProcessNode& node);
ProcessNode node_from_json(const nlohmann::json& j);

}  // namespace eden
