#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "eden/grid.hpp"
#include "eden/rng.hpp"
#include "eden/types.hpp"

namespace eden {

// Enumerator names are the serialized names, spelling included.
enum class ActionType : std::uint8_t {
  AxonTerminal_AddNew,
  AxonTerminal_RemoveRandom,
  Dentrite_AllowNew,
  Dentrite_RemoveRandom,
  AllowTransmitterIndexProduction,
  AddArchitectorIndexProduction,
  StimulateNeuroGenesis,
  Apoptosis,
};
inline constexpr int kActionTypeCount = 8;

enum class PrerequisiteType : std::uint8_t {
  ArchitectorPresent,
  TransmitterPresent,
  ArchitectorPresentPayloadCount,
  TransmitterPresentPayloadCount,
  AllowOn_ProcessNodeClockRange,
  AllowOn_ClockFrequency,
  EnergyRequirement,
  EnabledAfterEntityClock,
};
inline constexpr int kPrerequisiteTypeCount = 8;

std::string_view to_string(ActionType a);
std::string_view to_string(PrerequisiteType p);
std::optional<ActionType> action_from_string(std::string_view s);
std::optional<PrerequisiteType> prerequisite_from_string(std::string_view s);

// Parameter keys.
namespace param {
inline constexpr const char* kTransmitterIndex = "transmitter_index";
inline constexpr const char* kArchitectorIndex = "architector_index";
inline constexpr const char* kMinCount = "min_count";
inline constexpr const char* kClockMin = "clock_min";
inline constexpr const char* kClockMax = "clock_max";
inline constexpr const char* kMinSpikes = "min_spikes";
inline constexpr const char* kMaxSpikes = "max_spikes";
inline constexpr const char* kMinEnergy = "min_energy";
inline constexpr const char* kAfterClock = "after_clock";
inline constexpr const char* kEmitIndex = "emit_index";
inline constexpr const char* kAcceptLo = "accept_lo";
inline constexpr const char* kAcceptHi = "accept_hi";
inline constexpr const char* kProduceTransmitter = "produce_transmitter_index";
inline constexpr const char* kProduceArchitector = "produce_architector_index";
}  // namespace param

std::span<const char* const> required_keys(PrerequisiteType p);
std::span<const char* const> required_keys(ActionType a);

struct ActionGene {
  ActionType action = ActionType::AxonTerminal_AddNew;
  PrerequisiteType prerequisite = PrerequisiteType::EnabledAfterEntityClock;
  std::map<std::string, double> params;
  bool enabled = true;

  // Every key the prerequisite and the action read is present.
  bool valid() const;
  std::vector<std::string> missing_keys() const;

  bool operator==(const ActionGene& o) const {
    return action == o.action && prerequisite == o.prerequisite && params == o.params &&
           enabled == o.enabled;
  }

  mutable bool reported_invalid = false;  // log-once latch, not part of the gene
};

// Initial layout the functome was seeded with.
struct SeedLayout {
  Vec3 soma;
  std::vector<Vec3> dendrites;
  std::vector<Vec3> terminals;
  bool operator==(const SeedLayout&) const = default;
};

struct Functome {
  FunctomeId id = 0;
  std::vector<ActionGene> genes;
  double mutation_rate = 0.05;
  bool locked = false;
  std::vector<FunctomeId> lineage;  // ancestors, nearest first
  SeedLayout origin;

  bool operator==(const Functome&) const = default;
};

// Value ranges for drawing and redrawing genes.
struct GeneSpace {
  int transmitter_types = 4;
  int architector_types = 8;
  int max_clock = 64;
  int max_spikes = 4;
  double max_energy = 8.0;
  int max_count = 5;
};

ActionGene random_gene(Rng& rng, const GeneSpace& space);

// Facts about one node that prerequisites read.
struct PrerequisiteContext {
  const NeuralGrid* grid = nullptr;
  Vec3 soma;
  double scan_radius = 2.0;
  std::int64_t node_clock = 0;
  std::int64_t entity_clock = 0;
  int spikes_this_epoch = 0;
  double energy = 0.0;
  FunctomeId functome_id = 0;
  std::size_t gene_ordinal = 0;
};

// False for disabled or invalid genes; an invalid gene logs once.
bool check_prerequisite(const ActionGene& gene, const PrerequisiteContext& ctx);

// Enabled genes whose prerequisites pass, in declaration order (indices).
std::vector<std::size_t> scan_available_actions(const Functome& functome,
                                                PrerequisiteContext ctx);

enum class GeneField : std::uint8_t { Action, Prerequisite, Param, Enabled };
std::string_view to_string(GeneField f);

struct MutationRecord {
  std::size_t gene = 0;
  GeneField field = GeneField::Enabled;
  std::string detail;
};

// Redraws one field of each selected gene when the node is unstable and the
// functome unlocked; otherwise touches nothing.
std::vector<MutationRecord> mutate(Functome& functome, double node_stability,
                                   double stability_min, Rng& rng, const GeneSpace& space);

nlohmann::json to_json(const ActionGene& gene);
// Throws LoadError for unknown action/prerequisite names.
ActionGene gene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Functome& functome);
Functome functome_from_json(const nlohmann::json& j);

std::string functome_hash(const Functome& functome);

}  // namespace eden
