#include "eden/functome.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "eden/hash.hpp"

namespace eden {

namespace {

constexpr std::array<std::string_view, kActionTypeCount> kActionNames = {
    "AxonTerminal_AddNew",
    "AxonTerminal_RemoveRandom",
    "Dentrite_AllowNew",
    "Dentrite_RemoveRandom",
    "AllowTransmitterIndexProduction",
    "AddArchitectorIndexProduction",
    "StimulateNeuroGenesis",
    "Apoptosis",
};

constexpr std::array<std::string_view, kPrerequisiteTypeCount> kPrerequisiteNames = {
    "ArchitectorPresent",
    "TransmitterPresent",
    "ArchitectorPresentPayloadCount",
    "TransmitterPresentPayloadCount",
    "AllowOn_ProcessNodeClockRange",
    "AllowOn_ClockFrequency",
    "EnergyRequirement",
    "EnabledAfterEntityClock",
};

using namespace param;

constexpr const char* kKeysArchitectorPresent[] = {kArchitectorIndex};
constexpr const char* kKeysTransmitterPresent[] = {kTransmitterIndex};
constexpr const char* kKeysArchitectorCount[] = {kArchitectorIndex, kMinCount};
constexpr const char* kKeysTransmitterCount[] = {kTransmitterIndex, kMinCount};
constexpr const char* kKeysClockRange[] = {kClockMin, kClockMax};
constexpr const char* kKeysFrequency[] = {kMinSpikes, kMaxSpikes};
constexpr const char* kKeysEnergy[] = {kMinEnergy};
constexpr const char* kKeysAfterClock[] = {kAfterClock};

constexpr const char* kKeysAddTerminal[] = {kEmitIndex};
constexpr const char* kKeysAllowDendrite[] = {kAcceptLo, kAcceptHi};
constexpr const char* kKeysProduceTransmitter[] = {kProduceTransmitter};
constexpr const char* kKeysProduceArchitector[] = {kProduceArchitector};

// Every key a random gene carries, so prerequisite/action redraws never leave
// a gene without its inputs.
constexpr const char* kAllKeys[] = {
    kAcceptHi,   kAcceptLo,        kAfterClock,         kArchitectorIndex, kClockMax,
    kClockMin,   kEmitIndex,       kMaxSpikes,          kMinCount,         kMinEnergy,
    kMinSpikes,  kProduceArchitector, kProduceTransmitter, kTransmitterIndex,
};

double draw_param(std::string_view key, Rng& rng, const GeneSpace& s) {
  auto int_in = [&rng](int lo, int hi) { return static_cast<double>(rng.between(lo, hi)); };
  if (key == kTransmitterIndex || key == kEmitIndex || key == kProduceTransmitter ||
      key == kAcceptLo || key == kAcceptHi) {
    return int_in(0, s.transmitter_types - 1);
  }
  if (key == kArchitectorIndex || key == kProduceArchitector) {
    return int_in(0, s.architector_types - 1);
  }
  if (key == kMinCount) return int_in(1, s.max_count);
  if (key == kClockMin || key == kClockMax || key == kAfterClock) return int_in(0, s.max_clock);
  if (key == kMinSpikes || key == kMaxSpikes) return int_in(0, s.max_spikes);
  if (key == kMinEnergy) return rng.uniform(0.0, s.max_energy);
  return rng.uniform(-1.0, 1.0);
}

// A different value for key; nullopt when the key's range has a single value.
std::optional<double> redraw_param(std::string_view key, double current, Rng& rng,
                                   const GeneSpace& s) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    const double v = draw_param(key, rng, s);
    if (v != current) return v;
  }
  return std::nullopt;
}

bool has_all(const ActionGene& g, std::span<const char* const> keys) {
  return std::all_of(keys.begin(), keys.end(),
                     [&g](const char* k) { return g.params.count(k) != 0; });
}

std::size_t count_payloads(const PrerequisiteContext& ctx, PayloadKind kind, int index) {
  if (ctx.grid == nullptr) return 0;
  std::size_t n = 0;
  for (const auto* p : ctx.grid->query_radius(ctx.soma, ctx.scan_radius)) {
    if (p->kind == kind && p->index == index) ++n;
  }
  return n;
}

int as_int(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

std::string_view to_string(ActionType a) { return kActionNames[static_cast<std::size_t>(a)]; }
std::string_view to_string(PrerequisiteType p) {
  return kPrerequisiteNames[static_cast<std::size_t>(p)];
}

std::optional<ActionType> action_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kActionNames.size(); ++i) {
    if (kActionNames[i] == s) return static_cast<ActionType>(i);
  }
  return std::nullopt;
}

std::optional<PrerequisiteType> prerequisite_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kPrerequisiteNames.size(); ++i) {
    if (kPrerequisiteNames[i] == s) return static_cast<PrerequisiteType>(i);
  }
  return std::nullopt;
}

std::string_view to_string(GeneField f) {
  switch (f) {
    case GeneField::Action: return "action";
    case GeneField::Prerequisite: return "prerequisite";
    case GeneField::Param: return "param";
    case GeneField::Enabled: return "enabled";
  }
  return "?";
}

std::span<const char* const> required_keys(PrerequisiteType p) {
  switch (p) {
    case PrerequisiteType::ArchitectorPresent: return kKeysArchitectorPresent;
    case PrerequisiteType::TransmitterPresent: return kKeysTransmitterPresent;
    case PrerequisiteType::ArchitectorPresentPayloadCount: return kKeysArchitectorCount;
    case PrerequisiteType::TransmitterPresentPayloadCount: return kKeysTransmitterCount;
    case PrerequisiteType::AllowOn_ProcessNodeClockRange: return kKeysClockRange;
    case PrerequisiteType::AllowOn_ClockFrequency: return kKeysFrequency;
    case PrerequisiteType::EnergyRequirement: return kKeysEnergy;
    case PrerequisiteType::EnabledAfterEntityClock: return kKeysAfterClock;
  }
  return {};
}

std::span<const char* const> required_keys(ActionType a) {
  switch (a) {
    case ActionType::AxonTerminal_AddNew: return kKeysAddTerminal;
    case ActionType::Dentrite_AllowNew: return kKeysAllowDendrite;
    case ActionType::AllowTransmitterIndexProduction: return kKeysProduceTransmitter;
    case ActionType::AddArchitectorIndexProduction: return kKeysProduceArchitector;
    default: return {};
  }
}

bool ActionGene::valid() const {
  return has_all(*this, required_keys(prerequisite)) && has_all(*this, required_keys(action));
}

std::vector<std::string> ActionGene::missing_keys() const {
  std::vector<std::string> out;
  for (auto keys : {required_keys(prerequisite), required_keys(action)}) {
    for (const char* k : keys) {
      if (!params.count(k)) out.emplace_back(k);
    }
  }
  return out;
}

ActionGene random_gene(Rng& rng, const GeneSpace& space) {
  ActionGene g;
  g.action = static_cast<ActionType>(rng.below(kActionTypeCount));
  g.prerequisite = static_cast<PrerequisiteType>(rng.below(kPrerequisiteTypeCount));
  for (const char* k : kAllKeys) g.params[k] = draw_param(k, rng, space);
  g.enabled = true;
  return g;
}

bool check_prerequisite(const ActionGene& gene, const PrerequisiteContext& ctx) {
  if (!gene.enabled) return false;
  if (!gene.valid()) {
    if (!gene.reported_invalid) {
      gene.reported_invalid = true;
      std::string missing;
      for (const auto& k : gene.missing_keys()) missing += " " + k;
      spdlog::warn("functome {} gene {} ({}/{}) is missing params:{}; it will never fire",
                   ctx.functome_id, ctx.gene_ordinal, to_string(gene.action),
                   to_string(gene.prerequisite), missing);
    }
    return false;
  }
  const auto& p = gene.params;
  switch (gene.prerequisite) {
    case PrerequisiteType::ArchitectorPresent:
      return count_payloads(ctx, PayloadKind::Architector, as_int(p.at(kArchitectorIndex))) > 0;
    case PrerequisiteType::TransmitterPresent:
      return count_payloads(ctx, PayloadKind::Transmitter, as_int(p.at(kTransmitterIndex))) > 0;
    case PrerequisiteType::ArchitectorPresentPayloadCount:
      return static_cast<double>(count_payloads(ctx, PayloadKind::Architector,
                                                as_int(p.at(kArchitectorIndex)))) >=
             p.at(kMinCount);
    case PrerequisiteType::TransmitterPresentPayloadCount:
      return static_cast<double>(count_payloads(ctx, PayloadKind::Transmitter,
                                                as_int(p.at(kTransmitterIndex)))) >=
             p.at(kMinCount);
    case PrerequisiteType::AllowOn_ProcessNodeClockRange: {
      const auto c = static_cast<double>(ctx.node_clock);
      return c >= p.at(kClockMin) && c <= p.at(kClockMax);
    }
    case PrerequisiteType::AllowOn_ClockFrequency: {
      const auto n = static_cast<double>(ctx.spikes_this_epoch);
      return n >= p.at(kMinSpikes) && n <= p.at(kMaxSpikes);
    }
    case PrerequisiteType::EnergyRequirement:
      return ctx.energy >= p.at(kMinEnergy);
    case PrerequisiteType::EnabledAfterEntityClock:
      return static_cast<double>(ctx.entity_clock) >= p.at(kAfterClock);
  }
  return false;
}

std::vector<std::size_t> scan_available_actions(const Functome& functome,
                                                PrerequisiteContext ctx) {
  std::vector<std::size_t> firing;
  ctx.functome_id = functome.id;
  for (std::size_t i = 0; i < functome.genes.size(); ++i) {
    ctx.gene_ordinal = i;
    if (check_prerequisite(functome.genes[i], ctx)) firing.push_back(i);
  }
  return firing;
}

std::vector<MutationRecord> mutate(Functome& functome, double node_stability,
                                   double stability_min, Rng& rng, const GeneSpace& space) {
  std::vector<MutationRecord> records;
  if (functome.locked || node_stability >= stability_min) return records;

  for (std::size_t i = 0; i < functome.genes.size(); ++i) {
    if (!rng.chance(functome.mutation_rate)) continue;
    auto& g = functome.genes[i];
    MutationRecord rec{i, static_cast<GeneField>(rng.below(4)), {}};

    if (rec.field == GeneField::Param) {
      if (g.params.empty()) {
        rec.field = GeneField::Enabled;
      } else {
        auto it = std::next(g.params.begin(),
                            static_cast<std::ptrdiff_t>(rng.below(g.params.size())));
        if (auto v = redraw_param(it->first, it->second, rng, space)) {
          rec.detail = it->first + ": " + std::to_string(it->second) + " -> " + std::to_string(*v);
          it->second = *v;
        } else {
          rec.field = GeneField::Enabled;
        }
      }
    }

    switch (rec.field) {
      case GeneField::Action: {
        const auto old = g.action;
        const auto shift = 1 + rng.below(kActionTypeCount - 1);
        g.action = static_cast<ActionType>((static_cast<std::size_t>(old) + shift) % kActionTypeCount);
        rec.detail = std::string(to_string(old)) + " -> " + std::string(to_string(g.action));
        for (const char* k : required_keys(g.action)) {
          if (!g.params.count(k)) g.params[k] = draw_param(k, rng, space);
        }
        break;
      }
      case GeneField::Prerequisite: {
        const auto old = g.prerequisite;
        const auto shift = 1 + rng.below(kPrerequisiteTypeCount - 1);
        g.prerequisite = static_cast<PrerequisiteType>(
            (static_cast<std::size_t>(old) + shift) % kPrerequisiteTypeCount);
        rec.detail = std::string(to_string(old)) + " -> " + std::string(to_string(g.prerequisite));
        for (const char* k : required_keys(g.prerequisite)) {
          if (!g.params.count(k)) g.params[k] = draw_param(k, rng, space);
        }
        break;
      }
      case GeneField::Enabled:
        g.enabled = !g.enabled;
        rec.detail = g.enabled ? "enabled" : "disabled";
        break;
      case GeneField::Param:
        break;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

nlohmann::json to_json(const ActionGene& gene) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : gene.params) params[k] = v;
  return {{"action", to_string(gene.action)},
          {"prerequisite", to_string(gene.prerequisite)},
          {"params", params},
          {"enabled", gene.enabled}};
}

ActionGene gene_from_json(const nlohmann::json& j) {
  ActionGene g;
  const auto action_name = j.at("action").get<std::string>();
  const auto action = action_from_string(action_name);
  if (!action) throw LoadError("unknown action type '" + action_name + "'");
  const auto prereq_name = j.at("prerequisite").get<std::string>();
  const auto prereq = prerequisite_from_string(prereq_name);
  if (!prereq) throw LoadError("unknown prerequisite type '" + prereq_name + "'");
  g.action = *action;
  g.prerequisite = *prereq;
  for (const auto& [k, v] : j.at("params").items()) g.params[k] = v.get<double>();
  g.enabled = j.at("enabled").get<bool>();
  return g;
}

namespace {

nlohmann::json vec(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw LoadError("expected [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json to_json(const Functome& f) {
  nlohmann::json genes = nlohmann::json::array();
  for (const auto& g : f.genes) genes.push_back(to_json(g));
  nlohmann::json dendrites = nlohmann::json::array();
  for (const auto& v : f.origin.dendrites) dendrites.push_back(vec(v));
  nlohmann::json terminals = nlohmann::json::array();
  for (const auto& v : f.origin.terminals) terminals.push_back(vec(v));
  return {{"id", f.id},
          {"genes", genes},
          {"mutation_rate", f.mutation_rate},
          {"locked", f.locked},
          {"lineage", f.lineage},
          {"origin", {{"soma", vec(f.origin.soma)}, {"dendrites", dendrites}, {"terminals", terminals}}}};
}

Functome functome_from_json(const nlohmann::json& j) {
  Functome f;
  f.id = j.at("id").get<FunctomeId>();
  for (std::size_t i = 0; i < j.at("genes").size(); ++i) {
    try {
      f.genes.push_back(gene_from_json(j.at("genes").at(i)));
    } catch (const LoadError& e) {
      throw LoadError("functome " + std::to_string(f.id) + " gene " + std::to_string(i) + ": " +
                      e.what());
    }
  }
  f.mutation_rate = j.at("mutation_rate").get<double>();
  f.locked = j.at("locked").get<bool>();
  f.lineage = j.at("lineage").get<std::vector<FunctomeId>>();
  const auto& o = j.at("origin");
  f.origin.soma = vec_from(o.at("soma"));
  for (const auto& v : o.at("dendrites")) f.origin.dendrites.push_back(vec_from(v));
  for (const auto& v : o.at("terminals")) f.origin.terminals.push_back(vec_from(v));
  return f;
}

std::string functome_hash(const Functome& functome) {
  nlohmann::json genes = nlohmann::json::array();
  for (const auto& g : functome.genes) genes.push_back(to_json(g));
  return hex_digest(fnv1a64(genes.dump()));
}

}  // namespace eden
