#include "eden/entity.hpp"

#include <algorithm>
#include <exception>
#include <set>

#include <spdlog/spdlog.h>

namespace eden {

std::size_t EpochReport::spike_count() const {
  std::size_t n = 0;
  for (const auto& [id, s] : spikes) n += s.size();
  return n;
}

GeneSpace Entity::gene_space() const {
  GeneSpace s;
  s.transmitter_types = config.transmitter_types;
  s.architector_types = config.architector_types;
  s.max_spikes = std::max(1, config.passes_per_epoch);
  s.max_energy = 2.0 * config.min_e;
  return s;
}

const Functome& Entity::functome_of(const ProcessNode& node) const {
  const auto it = functomes.find(node.functome_id);
  if (it == functomes.end()) {
    throw StructuralError("node " + std::to_string(node.id) + " references missing functome " +
                          std::to_string(node.functome_id));
  }
  return it->second;
}

void Entity::refresh_hash(ProcessNode& node) const {
  node.identity_hash = node_hash(node, functome_of(node));
}

namespace {

Vec3 uniform_in(const Box& b, Rng& rng) {
  return {rng.uniform(b.lo.x, b.hi.x), rng.uniform(b.lo.y, b.hi.y), rng.uniform(b.lo.z, b.hi.z)};
}

GrowthCone fresh_cone(const EngineConfig& c, int attractant) {
  return {c.max_step, true, attractant};
}

Dendrite make_dendrite(const EngineConfig& c, Vec3 pos, int accepted) {
  Dendrite d;
  d.position = pos;
  d.pickup_radius = c.pickup_radius;
  d.accepted_transmitter_indices = {accepted};
  d.growth_cone = fresh_cone(c, accepted);
  return d;
}

AxonTerminal make_terminal(const EngineConfig& c, Vec3 pos, int emit, int attractant) {
  AxonTerminal t;
  t.position = pos;
  t.emit_transmitter_index = emit;
  t.emit_magnitude = c.emit_magnitude;
  t.growth_cone = fresh_cone(c, attractant);
  return t;
}

int type_index(const EngineConfig& c, Rng& rng) {
  return static_cast<int>(rng.below(static_cast<std::size_t>(c.transmitter_types)));
}

void drop_orphan_functomes(Entity& e) {
  std::set<FunctomeId> used;
  for (const auto& [id, n] : e.nodes) used.insert(n.functome_id);
  std::erase_if(e.functomes, [&used](const auto& kv) { return used.count(kv.first) == 0; });
}

// Runs body(i) for i in [0, n) in parallel and rethrows the first failure by
// index once every iteration finished.
template <typename Body>
void parallel_for(std::size_t n, Body body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) if (n > 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

void deposit_probe_frames(Entity& e, EpochReport& report) {
  for (auto& probe : e.input_probes) {
    if (probe.frames.empty()) continue;
    const auto& frame = probe.frames[probe.cursor % probe.frames.size()];
    for (const auto& pp : frame.payloads) {
      double m = pp.magnitude;
      if (frame.jitter > 0.0) m *= 1.0 + e.rng.uniform(-frame.jitter, frame.jitter);
      if (m == 0.0) continue;
      TransArchPayload p;
      p.kind = PayloadKind::Transmitter;
      p.index = pp.index;
      p.position = e.grid.bounds().clamp(probe.position + pp.offset);
      p.magnitude = std::abs(m);
      p.ttl = e.config.payload_ttl;
      p.properties[kExcitatoryProperty] = m < 0.0 ? -1.0 : 1.0;
      e.grid.deposit(std::move(p));
      ++report.payloads_deposited;
    }
    probe.cursor = (probe.cursor + 1) % probe.frames.size();
  }
  e.grid.commit();
}

}  // namespace

Entity seed_entity(const EngineConfig& config) {
  validate(config);
  Entity e;
  e.config = config;
  e.grid = NeuralGrid(config.bounds, config.grid_cell_size);
  e.rng = Rng(config.seed);
  const auto space = e.gene_space();

  for (int i = 0; i < config.initial_nodes; ++i) {
    const NodeId id = e.next_node_id++;
    ProcessNode node(id, uniform_in(config.bounds, e.rng), config.dim_xy, config.dim_z,
                     config.cem_params());
    node.cem.randomize(e.rng);

    Functome f;
    f.id = e.next_functome_id++;
    f.mutation_rate = config.mutation_rate;
    f.origin.soma = node.soma;
    for (int k = 0; k < config.initial_dendrites; ++k) {
      node.dendrites.push_back(
          make_dendrite(config, uniform_in(config.bounds, e.rng), type_index(config, e.rng)));
      f.origin.dendrites.push_back(node.dendrites.back().position);
    }
    for (int k = 0; k < config.initial_terminals; ++k) {
      const Vec3 pos = uniform_in(config.bounds, e.rng);
      const int emit = type_index(config, e.rng);
      node.axon_terminals.push_back(make_terminal(config, pos, emit, type_index(config, e.rng)));
      node.permitted_transmitters.insert(emit);
      f.origin.terminals.push_back(pos);
    }
    for (int g = 0; g < config.initial_genes; ++g) f.genes.push_back(random_gene(e.rng, space));

    node.functome_id = f.id;
    e.functomes.emplace(f.id, std::move(f));
    e.refresh_hash(node);
    e.nodes.emplace(id, std::move(node));
  }
  return e;
}

StructuralChange execute_action(const ActionGene& gene, ProcessNode& node, Entity& entity,
                                Rng& rng, DevelopQueue& queue) {
  const auto& c = entity.config;
  const std::size_t limit = node.cem.plane_size();
  StructuralChange ch;
  ch.node = node.id;
  ch.action = std::string(to_string(gene.action));
  if (!gene.valid()) {
    ch.detail = "gene is missing parameters";
    return ch;
  }
  const auto& p = gene.params;
  auto idx = [&p](const char* key) { return static_cast<int>(std::lround(p.at(key))); };
  auto spawn_point = [&] {
    return entity.grid.bounds().clamp(node.soma + rng.unit_vector() * c.spawn_radius);
  };

  switch (gene.action) {
    case ActionType::AxonTerminal_AddNew: {
      if (node.axon_terminals.size() >= limit) {
        ch.detail = "terminal limit " + std::to_string(limit) + " reached";
        break;
      }
      const int emit = idx(param::kEmitIndex);
      node.axon_terminals.push_back(make_terminal(c, spawn_point(), emit, type_index(c, rng)));
      ch.applied = true;
      ch.detail = "terminal emitting " + std::to_string(emit);
      break;
    }
    case ActionType::AxonTerminal_RemoveRandom: {
      if (node.axon_terminals.empty()) {
        ch.detail = "no terminal to remove";
        spdlog::debug("node {}: AxonTerminal_RemoveRandom on a node without terminals", node.id);
        break;
      }
      const auto k = rng.below(node.axon_terminals.size());
      node.axon_terminals.erase(node.axon_terminals.begin() + static_cast<std::ptrdiff_t>(k));
      ch.applied = true;
      ch.detail = "removed terminal " + std::to_string(k);
      break;
    }
    case ActionType::Dentrite_AllowNew: {
      if (node.dendrites.size() >= limit) {
        ch.detail = "dendrite limit " + std::to_string(limit) + " reached";
        break;
      }
      const int lo = std::min(idx(param::kAcceptLo), idx(param::kAcceptHi));
      const int hi = std::max(idx(param::kAcceptLo), idx(param::kAcceptHi));
      const int accepted = static_cast<int>(rng.between(lo, hi));
      node.dendrites.push_back(make_dendrite(c, spawn_point(), accepted));
      ch.applied = true;
      ch.detail = "dendrite accepting " + std::to_string(accepted);
      break;
    }
    case ActionType::Dentrite_RemoveRandom: {
      if (node.dendrites.empty()) {
        ch.detail = "no dendrite to remove";
        spdlog::debug("node {}: Dentrite_RemoveRandom on a node without dendrites", node.id);
        break;
      }
      const auto k = rng.below(node.dendrites.size());
      node.dendrites.erase(node.dendrites.begin() + static_cast<std::ptrdiff_t>(k));
      ch.applied = true;
      ch.detail = "removed dendrite " + std::to_string(k);
      break;
    }
    case ActionType::AllowTransmitterIndexProduction: {
      const int i = idx(param::kProduceTransmitter);
      ch.applied = node.permitted_transmitters.insert(i).second;
      ch.detail = "transmitter " + std::to_string(i) + (ch.applied ? "" : " already permitted");
      break;
    }
    case ActionType::AddArchitectorIndexProduction: {
      const int i = idx(param::kProduceArchitector);
      ch.applied = node.permitted_architectors.insert(i).second;
      ch.detail = "architector " + std::to_string(i) + (ch.applied ? "" : " already permitted");
      break;
    }
    case ActionType::StimulateNeuroGenesis: {
      const auto planned = entity.nodes.size() + queue.births.size();
      if (planned >= static_cast<std::size_t>(c.max_nodes)) {
        ch.detail = "node limit " + std::to_string(c.max_nodes) + " reached";
        break;
      }
      queue.births.push_back({node.id, spawn_point()});
      ch.applied = true;
      ch.detail = "birth queued";
      break;
    }
    case ActionType::Apoptosis: {
      if (std::find(queue.deaths.begin(), queue.deaths.end(), node.id) == queue.deaths.end()) {
        queue.deaths.push_back(node.id);
      }
      ch.applied = true;
      ch.detail = "marked for removal";
      break;
    }
  }
  return ch;
}

void propagate_phase(Entity& e, EpochReport& report) {
  const auto params = e.node_params();
  std::vector<ProcessNode*> nodes;
  for (auto& [id, n] : e.nodes) {
    n.begin_epoch();
    nodes.push_back(&n);
  }
  const std::size_t n = nodes.size();

  for (int pass = 0; pass < e.config.passes_per_epoch; ++pass) {
    deposit_probe_frames(e, report);

    // Every node reads the same committed grid.
    std::vector<InputCollection> inputs(n);
    parallel_for(n, [&](std::size_t i) { inputs[i] = collect_inputs(*nodes[i], e.grid); });
    std::set<PayloadId> claimed;
    for (std::size_t i = 0; i < n; ++i) {
      inputs[i].drop_claimed(claimed);
      apply_inputs(*nodes[i], inputs[i]);
    }

    std::vector<std::optional<SpikeEvent>> spikes(n);
    std::vector<std::vector<TransArchPayload>> emitted(n);
    parallel_for(n, [&](std::size_t i) {
      const auto deposits = inputs[i].deposits();
      spikes[i] = step_node(*nodes[i], deposits, params, e.entity_clock);
      if (spikes[i]) emitted[i] = emit_payloads(*nodes[i], *spikes[i], params);
    });

    for (std::size_t i = 0; i < n; ++i) {
      for (PayloadId id : inputs[i].consumed()) {
        e.grid.stage_removal(id);
        ++report.payloads_consumed;
      }
      for (auto& p : emitted[i]) {
        e.grid.deposit(std::move(p));
        ++report.payloads_deposited;
      }
      if (spikes[i]) report.spikes[nodes[i]->id].push_back(*spikes[i]);
    }
    e.grid.commit();
  }

  const std::uint64_t key = e.rng.next_u64();
  for (auto* node : nodes) {
    Rng rng = Rng::derive(key, node->id);
    end_propagation_epoch(*node, params, rng);
  }

  for (auto& probe : e.output_probes) {
    double reading = 0.0;
    for (const auto* node : nodes) {
      const bool near = std::any_of(
          node->axon_terminals.begin(), node->axon_terminals.end(), [&probe](const auto& t) {
            return distance_sq(t.position, probe.position) <= probe.radius * probe.radius;
          });
      if (!near) continue;
      for (const auto& s : node->spikes) reading += s.plane_energy;
    }
    probe.history.push_back(reading);
    report.probe_readings.push_back(reading);
  }
}

std::vector<NodeId> evaluate_prune_phase(Entity& e, EpochReport& report) {
  std::vector<NodeId> pruned;
  for (auto& [id, node] : e.nodes) {
    if (node.stimulated_this_epoch) {
      evaluate_stability(node);
      report.classification[id] = classify_state(node, node.inputs_this_epoch,
                                                 e.config.baseline_alpha);
      if (!e.locked && node.stability_index < e.config.stability_prune_threshold) {
        pruned.push_back(id);
      }
    }
    report.stability[id] = node.stability_index;
  }
  for (NodeId id : pruned) e.nodes.erase(id);
  drop_orphan_functomes(e);
  report.pruned.insert(report.pruned.end(), pruned.begin(), pruned.end());
  return pruned;
}

void develop_phase(Entity& e, EpochReport& report) {
  const auto params = e.node_params();
  const auto space = e.gene_space();
  DevelopQueue queue;
  const std::uint64_t key = e.rng.next_u64();

  for (auto& [id, node] : e.nodes) {
    Rng rng = Rng::derive(key, id);

    // Gene list as of the scan; actions never edit the functome itself.
    const std::vector<ActionGene> genes = e.functome_of(node).genes;
    PrerequisiteContext ctx;
    ctx.grid = &e.grid;
    ctx.soma = node.soma;
    ctx.scan_radius = e.config.action_scan_radius;
    ctx.node_clock = node.node_clock;
    ctx.entity_clock = e.entity_clock;
    ctx.spikes_this_epoch = node.spikes_this_epoch;
    ctx.energy = node.last_epoch_energy;
    for (std::size_t g : scan_available_actions(e.functome_of(node), ctx)) {
      auto ch = execute_action(genes[g], node, e, rng, queue);
      ch.source = "gene " + std::to_string(g);
      report.changes.push_back(std::move(ch));
    }

    for (const auto& arch : node.received_architectors) {
      const auto it = arch.properties.find(kTargetActionProperty);
      if (it == arch.properties.end()) continue;
      const auto target = static_cast<int>(std::lround(it->second));
      const auto gene = std::find_if(genes.begin(), genes.end(), [target](const ActionGene& g) {
        return g.enabled && static_cast<int>(g.action) == target;
      });
      if (gene == genes.end()) continue;
      auto ch = execute_action(*gene, node, e, rng, queue);
      ch.source = "architector " + std::to_string(arch.id);
      report.changes.push_back(std::move(ch));
    }

    grow(node, e.grid, params);

    // Clone-on-mutate: a functome shared with other nodes is copied first.
    Functome candidate = e.functome_of(node);
    const auto records = mutate(candidate, node.stability_index, e.config.stability_min, rng, space);
    if (!records.empty()) {
      report.mutations += records.size();
      const auto shared = std::count_if(e.nodes.begin(), e.nodes.end(), [&node](const auto& kv) {
        return kv.second.functome_id == node.functome_id;
      });
      if (shared > 1) {
        candidate.lineage.insert(candidate.lineage.begin(), candidate.id);
        candidate.id = e.next_functome_id++;
        node.functome_id = candidate.id;
      }
      e.functomes[candidate.id] = std::move(candidate);
    }
    node.validate_morphology();
  }

  // Commit: deaths, then births in queue order.
  for (NodeId id : queue.deaths) {
    e.nodes.erase(id);
    report.pruned.push_back(id);
  }
  const std::uint64_t birth_key = e.rng.next_u64();
  for (const auto& b : queue.births) {
    const ProcessNode* parent = nullptr;
    if (auto it = e.nodes.find(b.parent); it != e.nodes.end()) parent = &it->second;
    if (parent == nullptr) continue;  // parent died this phase
    const NodeId id = e.next_node_id++;
    ProcessNode child(id, b.soma, e.config.dim_xy, e.config.dim_z, e.config.cem_params());
    Rng rng = Rng::derive(birth_key, id);
    child.cem.randomize(rng);
    const Vec3 shift = b.soma - parent->soma;
    for (auto d : parent->dendrites) {
      d.position = e.grid.bounds().clamp(d.position + shift);
      child.dendrites.push_back(std::move(d));
    }
    for (auto t : parent->axon_terminals) {
      t.position = e.grid.bounds().clamp(t.position + shift);
      child.axon_terminals.push_back(std::move(t));
    }
    child.permitted_transmitters = parent->permitted_transmitters;
    child.permitted_architectors = parent->permitted_architectors;
    child.functome_id = parent->functome_id;
    e.nodes.emplace(id, std::move(child));
    report.born.push_back(id);
  }
  drop_orphan_functomes(e);
  for (auto& [id, node] : e.nodes) e.refresh_hash(node);
}

EpochReport run_epoch(Entity& e) {
  EpochReport report;
  report.epoch = e.entity_clock;
  report.locked = e.locked;
  propagate_phase(e, report);
  evaluate_prune_phase(e, report);
  if (!e.locked) develop_phase(e, report);
  report.payloads_expired = e.grid.decay_and_expire(e.config.payload_decay,
                                                     e.config.epsilon_magnitude);
  for (auto& [id, node] : e.nodes) ++node.node_clock;
  ++e.entity_clock;
  return report;
}

void lock(Entity& e) {
  e.locked = true;
  for (auto& [id, f] : e.functomes) f.locked = true;
}

void unlock(Entity& e) {
  e.locked = false;
  for (auto& [id, f] : e.functomes) f.locked = false;
}

namespace {

using nlohmann::json;

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw LoadError("expected [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json payload_json(const TransArchPayload& p) {
  return {{"id", p.id},
          {"kind", p.kind == PayloadKind::Transmitter ? "transmitter" : "architector"},
          {"index", p.index},
          {"position", vec(p.position)},
          {"magnitude", p.magnitude},
          {"ttl", p.ttl},
          {"properties", p.properties}};
}

TransArchPayload payload_from(const json& j) {
  TransArchPayload p;
  p.id = j.at("id").get<PayloadId>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "transmitter") {
    p.kind = PayloadKind::Transmitter;
  } else if (kind == "architector") {
    p.kind = PayloadKind::Architector;
  } else {
    throw LoadError("unknown payload kind '" + kind + "'");
  }
  p.index = j.at("index").get<int>();
  p.position = vec_from(j.at("position"));
  p.magnitude = j.at("magnitude").get<double>();
  p.ttl = j.at("ttl").get<int>();
  p.properties = j.at("properties").get<std::map<std::string, double>>();
  if (!(p.magnitude > 0.0) || p.ttl < 0) {
    throw LoadError("payload " + std::to_string(p.id) + " has a non-positive magnitude or ttl");
  }
  return p;
}

}  // namespace

json to_json(const InputProbe& probe) {
  json frames = json::array();
  for (const auto& f : probe.frames) {
    json payloads = json::array();
    for (const auto& p : f.payloads) {
      payloads.push_back({{"offset", vec(p.offset)}, {"index", p.index}, {"magnitude", p.magnitude}});
    }
    frames.push_back({{"jitter", f.jitter}, {"payloads", payloads}});
  }
  return {{"id", probe.id}, {"position", vec(probe.position)}, {"frames", frames},
          {"cursor", probe.cursor}};
}

InputProbe input_probe_from_json(const json& j) {
  InputProbe probe;
  probe.id = j.value("id", std::uint64_t{0});
  probe.position = vec_from(j.at("position"));
  for (const auto& f : j.at("frames")) {
    ProbeFrame frame;
    frame.jitter = f.value("jitter", 0.0);
    if (!(frame.jitter >= 0.0 && frame.jitter < 1.0)) {
      throw LoadError("frame jitter must lie in [0, 1)");
    }
    for (const auto& p : f.at("payloads")) {
      ProbePayload pp;
      pp.offset = p.contains("offset") ? vec_from(p.at("offset")) : Vec3{};
      pp.index = p.at("index").get<int>();
      pp.magnitude = p.at("magnitude").get<double>();
      frame.payloads.push_back(pp);
    }
    probe.frames.push_back(std::move(frame));
  }
  probe.cursor = j.value("cursor", std::size_t{0});
  if (!probe.frames.empty()) probe.cursor %= probe.frames.size();
  return probe;
}

json to_json(const OutputProbe& probe) {
  return {{"id", probe.id}, {"position", vec(probe.position)}, {"radius", probe.radius},
          {"history", probe.history}};
}

OutputProbe output_probe_from_json(const json& j) {
  OutputProbe probe;
  probe.id = j.value("id", std::uint64_t{0});
  probe.position = vec_from(j.at("position"));
  probe.radius = j.at("radius").get<double>();
  if (!(probe.radius > 0.0)) throw LoadError("output probe radius must be > 0");
  probe.history = j.value("history", std::vector<double>{});
  return probe;
}

json to_json(const EpochReport& r) {
  json spikes = json::array();
  for (const auto& [id, list] : r.spikes) {
    json events = json::array();
    for (const auto& s : list) events.push_back({{"z", s.z_index}, {"energy", s.plane_energy}});
    spikes.push_back({{"node", id}, {"events", events}});
  }
  json stability = json::array();
  for (const auto& [id, v] : r.stability) stability.push_back({{"node", id}, {"value", v}});
  json classes = json::array();
  for (const auto& [id, s] : r.classification) {
    classes.push_back({{"node", id}, {"state", to_string(s)}});
  }
  json changes = json::array();
  for (const auto& c : r.changes) {
    changes.push_back({{"node", c.node},
                       {"action", c.action},
                       {"source", c.source},
                       {"applied", c.applied},
                       {"detail", c.detail}});
  }
  return {{"epoch", r.epoch},
          {"locked", r.locked},
          {"spikes", spikes},
          {"stability", stability},
          {"classification", classes},
          {"pruned", r.pruned},
          {"born", r.born},
          {"payloads",
           {{"deposited", r.payloads_deposited},
            {"consumed", r.payloads_consumed},
            {"expired", r.payloads_expired}}},
          {"changes", changes},
          {"mutations", r.mutations},
          {"probe_readings", r.probe_readings}};
}

json to_json(const Entity& e) {
  json nodes = json::array();
  for (const auto& [id, n] : e.nodes) nodes.push_back(to_json(n));
  json functomes = json::array();
  for (const auto& [id, f] : e.functomes) functomes.push_back(to_json(f));
  json payloads = json::array();
  for (const auto& [id, p] : e.grid.payloads()) payloads.push_back(payload_json(p));
  json inputs = json::array();
  for (const auto& p : e.input_probes) inputs.push_back(to_json(p));
  json outputs = json::array();
  for (const auto& p : e.output_probes) outputs.push_back(to_json(p));
  return {{"id", e.id},
          {"config", to_json(e.config)},
          {"entity_clock", e.entity_clock},
          {"next_node_id", e.next_node_id},
          {"next_functome_id", e.next_functome_id},
          {"next_probe_id", e.next_probe_id},
          {"nodes", nodes},
          {"functomes", functomes},
          {"grid", {{"next_payload_id", e.grid.next_id()}, {"payloads", payloads}}},
          {"input_probes", inputs},
          {"output_probes", outputs},
          {"fired_rules", e.fired_rules}};
}

Entity entity_from_json(const json& j) {
  Entity e;
  e.id = j.at("id").get<std::uint64_t>();
  e.config = config_from_json(j.at("config"));
  e.entity_clock = j.at("entity_clock").get<std::int64_t>();
  e.next_node_id = j.at("next_node_id").get<NodeId>();
  e.next_functome_id = j.at("next_functome_id").get<FunctomeId>();
  e.next_probe_id = j.at("next_probe_id").get<std::uint64_t>();
  for (const auto& f : j.at("functomes")) {
    auto fn = functome_from_json(f);
    const auto id = fn.id;
    e.functomes.emplace(id, std::move(fn));
  }
  for (const auto& n : j.at("nodes")) {
    auto node = node_from_json(n);
    if (node.cem.dim_xy() != e.config.dim_xy || node.cem.dim_z() != e.config.dim_z) {
      throw LoadError("node " + std::to_string(node.id) + " tensor dimensions differ from config");
    }
    e.functome_of(node);
    const auto id = node.id;
    e.nodes.emplace(id, std::move(node));
  }
  e.grid = NeuralGrid(e.config.bounds, e.config.grid_cell_size);
  std::vector<TransArchPayload> payloads;
  for (const auto& p : j.at("grid").at("payloads")) {
    payloads.push_back(payload_from(p));
    if (!e.config.bounds.contains(payloads.back().position)) {
      throw LoadError("payload " + std::to_string(payloads.back().id) + " lies outside the grid");
    }
  }
  e.grid.restore(std::move(payloads), j.at("grid").at("next_payload_id").get<PayloadId>());
  for (const auto& p : j.at("input_probes")) e.input_probes.push_back(input_probe_from_json(p));
  for (const auto& p : j.at("output_probes")) e.output_probes.push_back(output_probe_from_json(p));
  e.fired_rules = j.value("fired_rules", std::set<std::string>{});
  return e;
}

}  // namespace eden
