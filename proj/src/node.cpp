#include "eden/node.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "eden/hash.hpp"

namespace eden {

double SpikeDistribution::total() const {
  return std::accumulate(bins_.begin(), bins_.end(), 0.0);
}

std::vector<double> SpikeDistribution::probabilities() const {
  const double t = total();
  std::vector<double> out(bins_.size());
  for (std::size_t i = 0; i < bins_.size(); ++i) out[i] = bins_[i] / t;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw StructuralError("distributions have " + std::to_string(p.size()) + " and " +
                          std::to_string(q.size()) + " bins");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

double stability_index(const SpikeDistribution& prev, const SpikeDistribution& curr) {
  const auto p = prev.probabilities();
  const auto q = curr.probabilities();
  const double kl = kl_divergence(p, q);
  return 1.0 / std::max(kl, 1.0);
}

std::string_view to_string(NodeState s) {
  switch (s) {
    case NodeState::Generation: return "Generation";
    case NodeState::Discrimination: return "Discrimination";
    case NodeState::Neutral: return "Neutral";
  }
  return "Neutral";
}

NodeParams NodeParams::from(const EngineConfig& c) {
  NodeParams p;
  p.cem = c.cem_params();
  p.learning_rate = c.learning_rate;
  p.goal_refresh_threshold = c.goal_refresh_threshold;
  p.architector_sigma = c.architector_sigma;
  p.spike_history_window = c.spike_history_window;
  p.baseline_alpha = c.baseline_alpha;
  p.payload_ttl = c.payload_ttl;
  p.max_emit_ratio = c.max_emit_ratio;
  p.gradient_sigma = c.gradient_sigma;
  p.max_step = c.max_step;
  p.bounds = c.bounds;
  return p;
}

ProcessNode::ProcessNode(NodeId id_, Vec3 soma_, int dim_xy, int dim_z,
                         const cem::CemParams& params)
    : id(id_),
      soma(soma_),
      cem(dim_xy, dim_z),
      min_e(params.min_e),
      dr(params.dr),
      spike_dist_prev(dim_z),
      spike_dist_curr(dim_z) {
  cem::validate(params);
}

void ProcessNode::validate_morphology() const {
  if (dendrites.size() > cem.plane_size()) {
    throw StructuralError("node " + std::to_string(id) + " has " +
                          std::to_string(dendrites.size()) + " dendrites but only " +
                          std::to_string(cem.plane_size()) + " entry cells");
  }
  for (const auto& d : dendrites) {
    if (d.accepted_transmitter_indices.empty()) {
      throw StructuralError("node " + std::to_string(id) +
                            " has a dendrite that accepts no transmitter");
    }
  }
}

void ProcessNode::begin_epoch() {
  stimulated_this_epoch = false;
  spikes_this_epoch = 0;
  inputs_this_epoch = 0;
  energy_this_epoch = 0.0;
  spiked_at_goal_this_epoch = false;
  received_architectors.clear();
  fed_dendrites.clear();
  spikes.clear();
}

std::vector<cem::Deposit> InputCollection::deposits() const {
  std::vector<cem::Deposit> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.deposit);
  return out;
}

std::vector<PayloadId> InputCollection::consumed() const {
  std::vector<PayloadId> out;
  for (const auto& it : items) out.push_back(it.payload);
  for (const auto& a : architectors) out.push_back(a.id);
  return out;
}

void InputCollection::drop_claimed(std::set<PayloadId>& claimed) {
  std::erase_if(items, [&claimed](const Item& it) { return claimed.count(it.payload) != 0; });
  std::erase_if(architectors,
                [&claimed](const TransArchPayload& a) { return claimed.count(a.id) != 0; });
  for (const auto& it : items) claimed.insert(it.payload);
  for (const auto& a : architectors) claimed.insert(a.id);
}

InputCollection collect_inputs(const ProcessNode& node, const NeuralGrid& grid) {
  InputCollection out;
  std::set<PayloadId> seen;
  for (std::size_t k = 0; k < node.dendrites.size(); ++k) {
    const auto& d = node.dendrites[k];
    const auto [ex, ey] = dendrite_entry_cell(k, node.cem.dim_xy());
    for (const auto* p : grid.query_radius(d.position, d.pickup_radius)) {
      if (seen.count(p->id)) continue;
      if (p->kind == PayloadKind::Architector) {
        seen.insert(p->id);
        out.architectors.push_back(*p);
        continue;
      }
      if (!d.accepted_transmitter_indices.count(p->index)) continue;  // blocked
      seen.insert(p->id);
      const auto sign_it = p->properties.find(kExcitatoryProperty);
      const double sign = (sign_it != p->properties.end() && sign_it->second < 0.0) ? -1.0 : 1.0;
      out.items.push_back({p->id, k, cem::Deposit{ex, ey, p->magnitude * d.gain * sign,
                                               "node " + std::to_string(node.id) + " dendrite " +
                                                   std::to_string(k)}});
    }
  }
  return out;
}

void apply_inputs(ProcessNode& node, const InputCollection& inputs) {
  for (const auto& it : inputs.items) {
    if (it.deposit.magnitude != 0.0) node.stimulated_this_epoch = true;
    node.fed_dendrites.insert(it.dendrite);
  }
  node.inputs_this_epoch += static_cast<int>(inputs.items.size());
  node.received_architectors.insert(node.received_architectors.end(),
                                    inputs.architectors.begin(), inputs.architectors.end());
}

void update_goal(ProcessNode& node, const SpikeEvent& spike, double goal_refresh_threshold) {
  if (!node.goal || node.stability_index < goal_refresh_threshold) {
    node.goal = cem::goal_from_plane(node.cem, spike.z_index);
  }
}

std::optional<SpikeEvent> step_node(ProcessNode& node, std::span<const cem::Deposit> deposits,
                                    const NodeParams& params, std::int64_t epoch) {
  cem::PropagationTrace trace;
  auto spike = cem::forward_propagate(node.cem, deposits, node.cem_params(params.cem.at_mod),
                                      &trace);
  if (!spike) return std::nullopt;
  spike->epoch = epoch;
  spike->node_id = node.id;

  node.spike_dist_curr.record(spike->z_index);
  ++node.spikes_this_epoch;
  node.energy_this_epoch += spike->plane_energy;

  cem::update_routers_on_spike(node.cem, *spike);
  update_goal(node, *spike, params.goal_refresh_threshold);
  if (node.goal->z_index == spike->z_index) {
    node.spiked_at_goal_this_epoch = true;
    cem::backprop_to_goal(node.cem, *node.goal, trace, params.learning_rate);
  }
  cem::reset_propagation(node.cem);
  node.spikes.push_back(*spike);
  return spike;
}

std::vector<TransArchPayload> emit_payloads(ProcessNode& node, const SpikeEvent& spike,
                                            const NodeParams& params) {
  std::vector<TransArchPayload> out;
  // Capped so that emission loops between nodes cannot grow without bound.
  const double scale = std::min(spike.plane_energy / node.min_e, params.max_emit_ratio);

  for (const auto& t : node.axon_terminals) {
    if (!node.permitted_transmitters.count(t.emit_transmitter_index)) {
      if (node.warned_emit_indices.insert(t.emit_transmitter_index).second) {
        spdlog::warn("node {} may not produce transmitter {}; emission skipped", node.id,
                     t.emit_transmitter_index);
      }
      continue;
    }
    TransArchPayload p;
    p.kind = PayloadKind::Transmitter;
    p.index = t.emit_transmitter_index;
    p.position = params.bounds.clamp(t.position);
    p.magnitude = t.emit_magnitude * scale;
    p.ttl = params.payload_ttl;
    p.properties[kExcitatoryProperty] = t.excitatory < 0.0 ? -1.0 : 1.0;
    out.push_back(std::move(p));
  }

  // Architectors: release when this epoch's spiking departs from the rolling
  // average by more than architector_sigma standard deviations.
  const auto& hist = node.spike_count_history;
  if (hist.empty() || node.permitted_architectors.empty()) return out;
  const double n = static_cast<double>(hist.size());
  double mean = 0.0;
  for (int c : hist) mean += c;
  mean /= n;
  double var = 0.0;
  for (int c : hist) var += (c - mean) * (c - mean);
  const double sd = std::sqrt(var / n);
  const double dev = std::abs(static_cast<double>(node.spikes_this_epoch) - mean);
  if (!(dev > params.architector_sigma * sd)) return out;

  const std::vector<int> kinds(node.permitted_architectors.begin(),
                               node.permitted_architectors.end());
  for (std::size_t k = 0; k < node.axon_terminals.size(); ++k) {
    const auto& t = node.axon_terminals[k];
    TransArchPayload p;
    p.kind = PayloadKind::Architector;
    p.index = kinds[k % kinds.size()];
    p.position = params.bounds.clamp(t.position);
    p.magnitude = t.emit_magnitude * scale;
    p.ttl = params.payload_ttl;
    p.properties[kTargetActionProperty] = static_cast<double>(p.index % kActionTypeCount);
    out.push_back(std::move(p));
  }
  return out;
}

void end_propagation_epoch(ProcessNode& node, const NodeParams& params, Rng& rng) {
  if (node.spikes_this_epoch == 0) {
    cem::randomize_stale_routers(node.cem, rng);
  } else {
    auto& stale = node.cem.stale_mask();
    std::fill(stale.begin(), stale.end(), 0);
  }
  cem::reset_propagation(node.cem);
  node.spike_count_history.push_back(node.spikes_this_epoch);
  const auto window = static_cast<std::size_t>(std::max(1, params.spike_history_window));
  if (node.spike_count_history.size() > window) {
    node.spike_count_history.erase(
        node.spike_count_history.begin(),
        node.spike_count_history.end() - static_cast<std::ptrdiff_t>(window));
  }
  node.last_epoch_energy = node.energy_this_epoch;
}

void evaluate_stability(ProcessNode& node) {
  node.previous_stability = node.stability_index;
  node.stability_index = stability_index(node.spike_dist_prev, node.spike_dist_curr);
  node.spike_dist_prev = node.spike_dist_curr;
  node.spike_dist_curr.reset();
}

NodeState classify_state(ProcessNode& node, int inputs_this_epoch, double baseline_alpha) {
  const double inputs = static_cast<double>(inputs_this_epoch);
  if (!node.baseline_established) {
    node.baseline_input_count = inputs;
    node.baseline_established = true;
    return NodeState::Neutral;
  }
  const double baseline = node.baseline_input_count;
  NodeState state = NodeState::Neutral;
  if (node.spiked_at_goal_this_epoch && inputs < baseline) {
    state = NodeState::Generation;
  } else if (inputs > baseline && !(node.stability_index > node.previous_stability)) {
    state = NodeState::Discrimination;
  }
  node.baseline_input_count = (1.0 - baseline_alpha) * baseline + baseline_alpha * inputs;
  return state;
}

std::size_t grow(ProcessNode& node, const NeuralGrid& grid, const NodeParams& params) {
  std::size_t moved = 0;
  auto step = [&](Vec3& position, const GrowthCone& cone) {
    if (!cone.active || cone.step_size <= 0.0) return;
    const Vec3 g = grid.density_gradient(position, cone.attractant_index, params.gradient_sigma);
    const double n = g.norm();
    if (!(n > 0.0)) return;
    const double len = std::min(cone.step_size, params.max_step);
    const Vec3 next = params.bounds.clamp(position + g * (len / n));
    if (next != position) {
      position = next;
      ++moved;
    }
  };
  for (std::size_t k = 0; k < node.dendrites.size(); ++k) {
    if (!node.fed_dendrites.count(k)) step(node.dendrites[k].position, node.dendrites[k].growth_cone);
  }
  for (auto& t : node.axon_terminals) step(t.position, t.growth_cone);
  return moved;
}

std::string node_hash(const ProcessNode& node, const Functome& functome) {
  nlohmann::json j;
  j["dims"] = {node.cem.dim_xy(), node.cem.dim_z()};
  nlohmann::json dend = nlohmann::json::array();
  for (const auto& d : node.dendrites) dend.push_back(d.accepted_transmitter_indices);
  j["dendrites"] = dend;
  nlohmann::json term = nlohmann::json::array();
  for (const auto& t : node.axon_terminals) {
    term.push_back({t.emit_transmitter_index, t.excitatory < 0.0 ? -1 : 1});
  }
  j["terminals"] = term;
  j["produces"] = {node.permitted_transmitters, node.permitted_architectors};
  nlohmann::json genes = nlohmann::json::array();
  for (const auto& g : functome.genes) {
    if (g.enabled) genes.push_back(to_json(g));
  }
  j["enabled_actions"] = genes;
  return hex_digest(fnv1a64(j.dump()));
}

namespace {

using nlohmann::json;

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw LoadError("expected [x,y,z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json cone_json(const GrowthCone& c) {
  return {{"step_size", c.step_size}, {"active", c.active}, {"attractant_index", c.attractant_index}};
}
GrowthCone cone_from(const json& j) {
  return {j.at("step_size").get<double>(), j.at("active").get<bool>(),
          j.at("attractant_index").get<int>()};
}

json tensor_json(const cem::PwrTensor& t) {
  std::vector<int> r;
  r.reserve(t.size());
  for (auto v : t.r_data()) r.push_back(static_cast<int>(v));
  std::vector<int> stale(t.stale_mask().begin(), t.stale_mask().end());
  return {{"dim_xy", t.dim_xy()},
          {"dim_z", t.dim_z()},
          {"p", std::vector<double>(t.p_data().begin(), t.p_data().end())},
          {"w", std::vector<double>(t.w_data().begin(), t.w_data().end())},
          {"r", r},
          {"plane_energy", t.plane_energy()},
          {"stale", stale}};
}

cem::PwrTensor tensor_from(const json& j) {
  cem::PwrTensor t(j.at("dim_xy").get<int>(), j.at("dim_z").get<int>());
  const auto p = j.at("p").get<std::vector<double>>();
  const auto w = j.at("w").get<std::vector<double>>();
  const auto r = j.at("r").get<std::vector<int>>();
  const auto pe = j.at("plane_energy").get<std::vector<double>>();
  const auto stale = j.at("stale").get<std::vector<int>>();
  if (p.size() != t.size() || w.size() != t.size() || r.size() != t.size() ||
      stale.size() != t.size() || pe.size() != static_cast<std::size_t>(t.dim_z())) {
    throw LoadError("tensor lattice sizes do not match its dimensions");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(p[i] >= 0.0)) throw LoadError("tensor p value below 0");
    if (!(w[i] >= 0.0 && w[i] <= 1.0)) throw LoadError("tensor weight outside [0,1]");
    if (r[i] < 0 || r[i] >= cem::kRouterOptionCount) throw LoadError("unknown router option");
    t.p_data()[i] = p[i];
    t.w_data()[i] = w[i];
    t.r_data()[i] = static_cast<cem::RouterOption>(r[i]);
    t.stale_mask()[i] = static_cast<std::uint8_t>(stale[i] != 0);
  }
  t.plane_energy() = pe;
  return t;
}

}  // namespace

nlohmann::json to_json(const ProcessNode& n) {
  json dendrites = json::array();
  for (const auto& d : n.dendrites) {
    dendrites.push_back({{"position", vec(d.position)},
                         {"pickup_radius", d.pickup_radius},
                         {"accepted", d.accepted_transmitter_indices},
                         {"gain", d.gain},
                         {"growth_cone", cone_json(d.growth_cone)}});
  }
  json terminals = json::array();
  for (const auto& t : n.axon_terminals) {
    terminals.push_back({{"position", vec(t.position)},
                         {"emit_index", t.emit_transmitter_index},
                         {"emit_magnitude", t.emit_magnitude},
                         {"excitatory", t.excitatory},
                         {"growth_cone", cone_json(t.growth_cone)}});
  }
  json goal = nullptr;
  if (n.goal) goal = {{"z_index", n.goal->z_index}, {"target_p", n.goal->target_p}};
  return {{"id", n.id},
          {"soma", vec(n.soma)},
          {"cem", tensor_json(n.cem)},
          {"min_e", n.min_e},
          {"dr", n.dr},
          {"dendrites", dendrites},
          {"axon_terminals", terminals},
          {"goal", goal},
          {"spike_dist_prev", n.spike_dist_prev.bins()},
          {"spike_dist_curr", n.spike_dist_curr.bins()},
          {"stability_index", n.stability_index},
          {"previous_stability", n.previous_stability},
          {"node_clock", n.node_clock},
          {"functome_id", n.functome_id},
          {"identity_hash", n.identity_hash},
          {"baseline_input_count", n.baseline_input_count},
          {"baseline_established", n.baseline_established},
          {"permitted_transmitters", n.permitted_transmitters},
          {"permitted_architectors", n.permitted_architectors},
          {"spike_count_history", n.spike_count_history},
          {"last_epoch_energy", n.last_epoch_energy}};
}

ProcessNode node_from_json(const nlohmann::json& j) {
  ProcessNode n;
  n.id = j.at("id").get<NodeId>();
  n.soma = vec_from(j.at("soma"));
  n.cem = tensor_from(j.at("cem"));
  n.min_e = j.at("min_e").get<double>();
  n.dr = j.at("dr").get<double>();
  for (const auto& d : j.at("dendrites")) {
    Dendrite den;
    den.position = vec_from(d.at("position"));
    den.pickup_radius = d.at("pickup_radius").get<double>();
    den.accepted_transmitter_indices = d.at("accepted").get<std::set<int>>();
    den.gain = d.at("gain").get<double>();
    den.growth_cone = cone_from(d.at("growth_cone"));
    n.dendrites.push_back(std::move(den));
  }
  for (const auto& t : j.at("axon_terminals")) {
    AxonTerminal term;
    term.position = vec_from(t.at("position"));
    term.emit_transmitter_index = t.at("emit_index").get<int>();
    term.emit_magnitude = t.at("emit_magnitude").get<double>();
    term.excitatory = t.at("excitatory").get<double>();
    term.growth_cone = cone_from(t.at("growth_cone"));
    n.axon_terminals.push_back(std::move(term));
  }
  if (!j.at("goal").is_null()) {
    const auto& g = j.at("goal");
    n.goal = cem::GoalPlane{g.at("z_index").get<int>(), g.at("target_p").get<std::vector<double>>()};
    if (n.goal->target_p.size() != n.cem.plane_size()) throw LoadError("goal plane size mismatch");
  }
  n.spike_dist_prev.bins() = j.at("spike_dist_prev").get<std::vector<double>>();
  n.spike_dist_curr.bins() = j.at("spike_dist_curr").get<std::vector<double>>();
  const auto dz = static_cast<std::size_t>(n.cem.dim_z());
  if (n.spike_dist_prev.bins().size() != dz || n.spike_dist_curr.bins().size() != dz) {
    throw LoadError("spike distribution size does not match dim_z");
  }
  n.stability_index = j.at("stability_index").get<double>();
  n.previous_stability = j.at("previous_stability").get<double>();
  n.node_clock = j.at("node_clock").get<std::int64_t>();
  n.functome_id = j.at("functome_id").get<FunctomeId>();
  n.identity_hash = j.at("identity_hash").get<std::string>();
  n.baseline_input_count = j.at("baseline_input_count").get<double>();
  n.baseline_established = j.at("baseline_established").get<bool>();
  n.permitted_transmitters = j.at("permitted_transmitters").get<std::set<int>>();
  n.permitted_architectors = j.at("permitted_architectors").get<std::set<int>>();
  n.spike_count_history = j.at("spike_count_history").get<std::vector<int>>();
  n.last_epoch_energy = j.at("last_epoch_energy").get<double>();
  n.validate_morphology();
  return n;
}

}  // namespace eden
