#include <omp.h>

#include <algorithm>

#include "doctest.h"
#include "eden/entity.hpp"

using namespace eden;

namespace {

EngineConfig small_config() {
  EngineConfig c;
  c.dim_xy = 2;
  c.dim_z = 4;
  c.min_e = 2.0;
  c.dr = 0.0;
  c.initial_nodes = 0;
  c.passes_per_epoch = 1;
  return c;
}

ActionGene gene(ActionType a, std::map<std::string, double> extra = {}) {
  ActionGene g;
  g.action = a;
  g.prerequisite = PrerequisiteType::EnabledAfterEntityClock;
  g.params = std::move(extra);
  g.params[param::kAfterClock] = 0;
  return g;
}

// Node with straight routing, one dendrite at soma accepting index 0, and its
// own functome holding the given genes.
ProcessNode& add_node(Entity& e, Vec3 soma, std::vector<ActionGene> genes = {}) {
  const NodeId id = e.next_node_id++;
  ProcessNode n(id, soma, e.config.dim_xy, e.config.dim_z, e.config.cem_params());
  n.cem.fill_w(1.0);
  n.cem.fill_r(cem::RouterOption::Center);
  Dendrite d;
  d.position = soma;
  d.pickup_radius = 0.5;
  d.accepted_transmitter_indices = {0};
  n.dendrites.push_back(d);
  Functome f;
  f.id = e.next_functome_id++;
  f.genes = std::move(genes);
  n.functome_id = f.id;
  e.functomes.emplace(f.id, f);
  e.refresh_hash(n);
  return e.nodes.emplace(id, std::move(n)).first->second;
}

InputProbe probe_at(Vec3 pos, double magnitude, int index = 0) {
  InputProbe p;
  p.id = 1;
  p.position = pos;
  p.frames = {ProbeFrame{0.0, {ProbePayload{{0, 0, 0}, index, magnitude}}}};
  return p;
}

std::string state_of(const Entity& e) {
  return to_json(e).dump() + e.rng.state() + (e.locked ? "L" : "U");
}

Entity seeded(std::uint64_t seed, int nodes = 10) {
  EngineConfig c;
  c.seed = seed;
  c.dim_xy = 4;
  c.dim_z = 6;
  c.initial_nodes = nodes;
  auto e = seed_entity(c);
  e.input_probes.push_back(probe_at({4, 4, 4}, 2.0));
  for (int i = 1; i < 4; ++i) e.input_probes[0].frames[0].payloads.push_back({{0, 0, 0}, i, 2.0});
  return e;
}

}  // namespace

TEST_CASE("seed_entity examples") {
  EngineConfig c;
  c.initial_nodes = 0;
  auto empty = seed_entity(c);
  CHECK(empty.nodes.empty());
  CHECK(empty.functomes.empty());

  c.initial_nodes = 5;
  c.seed = 21;
  const auto a = seed_entity(c);
  const auto b = seed_entity(c);
  CHECK(state_of(a) == state_of(b));
  CHECK(a.nodes.size() == 5);
  CHECK(a.functomes.size() == 5);
  for (const auto& [id, n] : a.nodes) {
    CHECK(a.functomes.count(n.functome_id) == 1);
    CHECK(c.bounds.contains(n.soma));
    CHECK(n.dendrites.size() == static_cast<std::size_t>(c.initial_dendrites));
    CHECK(n.axon_terminals.size() == static_cast<std::size_t>(c.initial_terminals));
    for (const auto& d : n.dendrites) CHECK(c.bounds.contains(d.position));
    for (const auto& t : n.axon_terminals) CHECK(c.bounds.contains(t.position));
    for (double w : n.cem.w_data()) CHECK((w >= 0.0 && w <= 1.0));
    const auto& f = a.functomes.at(n.functome_id);
    CHECK(f.genes.size() == static_cast<std::size_t>(c.initial_genes));
    CHECK(f.origin.soma == n.soma);
    CHECK(f.origin.dendrites.size() == n.dendrites.size());
    CHECK(n.identity_hash == node_hash(n, f));
  }
  c.seed = 22;
  CHECK(state_of(seed_entity(c)) != state_of(a));
}

TEST_CASE("seed_entity rejects a bad config with every violation") {
  EngineConfig c;
  c.dr = 0.5;
  c.dim_xy = 0;
  c.min_e = -1.0;
  try {
    seed_entity(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() >= 3);
  }
}

TEST_CASE("propagate_phase examples") {
  Entity e = seed_entity(small_config());

  SUBCASE("nothing to propagate") {
    add_node(e, {2, 2, 2});
    EpochReport r;
    propagate_phase(e, r);
    CHECK(r.spike_count() == 0);
    CHECK(e.grid.size() == 0);
  }
  SUBCASE("probe frame above min_e at a dendrite spikes") {
    add_node(e, {2, 2, 2});
    e.input_probes.push_back(probe_at({2, 2, 2}, 5.0));
    EpochReport r;
    propagate_phase(e, r);
    REQUIRE(r.spike_count() == 1);
    CHECK(r.spikes.at(1)[0].z_index == 0);
    CHECK(r.spikes.at(1)[0].plane_energy == 5.0);
    CHECK(r.payloads_consumed == 1);
    CHECK(e.grid.size() == 0);
    CHECK(e.input_probes[0].cursor == 0);
  }
  SUBCASE("output probe without terminals in range reads 0") {
    add_node(e, {2, 2, 2});
    e.input_probes.push_back(probe_at({2, 2, 2}, 5.0));
    e.output_probes.push_back(OutputProbe{1, {7, 7, 7}, 0.5, {}});
    EpochReport r;
    propagate_phase(e, r);
    REQUIRE(r.probe_readings.size() == 1);
    CHECK(r.probe_readings[0] == 0.0);
  }
  SUBCASE("output probe sums the spike energy of nodes with a terminal in range") {
    auto& n = add_node(e, {2, 2, 2});
    AxonTerminal t;
    t.position = {6, 6, 6};
    n.axon_terminals.push_back(t);
    e.input_probes.push_back(probe_at({2, 2, 2}, 5.0));
    e.output_probes.push_back(OutputProbe{1, {6, 6, 6.5}, 1.0, {}});
    EpochReport r;
    propagate_phase(e, r);
    CHECK(r.probe_readings[0] == 5.0);
    CHECK(e.output_probes[0].history == std::vector<double>{5.0});
  }
}

TEST_CASE("a probe cycles its frames once per pass") {
  auto c = small_config();
  c.passes_per_epoch = 3;
  Entity e = seed_entity(c);
  add_node(e, {2, 2, 2});
  InputProbe p = probe_at({2, 2, 2}, 5.0);
  p.frames.push_back(ProbeFrame{0.0, {ProbePayload{{0, 0, 0}, 0, 0.1}}});
  e.input_probes.push_back(p);
  EpochReport r;
  propagate_phase(e, r);
  // Frames 5.0, 0.1, 5.0: spikes on passes 1 and 3; pass 2 leaves residual energy.
  REQUIRE(r.spikes.at(1).size() == 2);
  CHECK(e.input_probes[0].cursor == 1);
  CHECK(e.nodes.at(1).inputs_this_epoch == 3);
}

TEST_CASE("emitted payloads become visible only on the next pass") {
  auto c = small_config();
  c.passes_per_epoch = 2;
  Entity e = seed_entity(c);
  auto& a = add_node(e, {2, 2, 2});
  AxonTerminal t;
  t.position = {5, 5, 5};
  t.emit_transmitter_index = 0;
  t.emit_magnitude = 3.0;
  a.axon_terminals.push_back(t);
  a.permitted_transmitters = {0};
  add_node(e, {5, 5, 5});
  e.input_probes.push_back(probe_at({2, 2, 2}, 4.0));
  e.input_probes[0].frames.push_back(ProbeFrame{});  // nothing on pass 2

  EpochReport r;
  propagate_phase(e, r);
  REQUIRE(r.spikes.count(1));
  REQUIRE(r.spikes.count(2));
  CHECK(r.spikes.at(1).size() == 1);
  CHECK(r.spikes.at(2).size() == 1);
  // Node 2 received 3.0 * 4.0 / 2.0 = 6.0 on the second pass.
  CHECK(r.spikes.at(2)[0].plane_energy == 6.0);
  CHECK(r.payloads_consumed == 2);
}

TEST_CASE("a payload within reach of two nodes goes to the lower id") {
  Entity e = seed_entity(small_config());
  add_node(e, {2, 2, 2});
  add_node(e, {2.2, 2, 2});
  e.input_probes.push_back(probe_at({2.1, 2, 2}, 5.0));
  EpochReport r;
  propagate_phase(e, r);
  CHECK(r.spikes.count(1) == 1);
  CHECK(r.spikes.count(2) == 0);
  CHECK(r.payloads_consumed == 1);
  CHECK(e.nodes.at(2).inputs_this_epoch == 0);
}

TEST_CASE("evaluate_prune_phase examples") {
  auto c = small_config();
  c.stability_prune_threshold = 0.25;
  Entity e = seed_entity(c);

  SUBCASE("unstimulated node with low stability is retained") {
    auto& n = add_node(e, {2, 2, 2});
    n.stability_index = 0.01;
    n.spike_dist_prev.bins() = {99, 1, 1, 1};
    EpochReport r;
    propagate_phase(e, r);
    CHECK(evaluate_prune_phase(e, r).empty());
    CHECK(e.nodes.count(1) == 1);
    CHECK(e.nodes.at(1).stability_index == 0.01);
    CHECK(r.classification.empty());
  }
  SUBCASE("stimulated node with identical distributions scores 1") {
    auto& n = add_node(e, {2, 2, 2});
    n.spike_dist_prev.bins() = {2, 1, 1, 1};
    e.input_probes.push_back(probe_at({2, 2, 2}, 5.0));
    EpochReport r;
    propagate_phase(e, r);
    CHECK(evaluate_prune_phase(e, r).empty());
    CHECK(e.nodes.at(1).stability_index == 1.0);
    CHECK(r.stability.at(1) == 1.0);
  }
  SUBCASE("stimulated node below threshold is pruned the same epoch") {
    e.config.passes_per_epoch = 30;
    e.config.stability_prune_threshold = 0.35;
    auto& n = add_node(e, {2, 2, 2});
    n.spike_dist_prev.bins() = {1, 1, 1, 400};
    e.input_probes.push_back(probe_at({2, 2, 2}, 5.0));
    EpochReport r;
    propagate_phase(e, r);
    const auto pruned = evaluate_prune_phase(e, r);
    CHECK(r.stability.at(1) < 0.35);
    CHECK(pruned == std::vector<NodeId>{1});
    CHECK(e.nodes.empty());
    CHECK(e.functomes.empty());
  }
}

TEST_CASE("execute_action examples") {
  Entity e = seed_entity(small_config());
  auto& n = add_node(e, {2, 2, 2});
  Rng rng(1);
  DevelopQueue q;

  for (int i = 0; i < 2; ++i) n.axon_terminals.push_back(AxonTerminal{});
  auto ch = execute_action(gene(ActionType::AxonTerminal_AddNew, {{param::kEmitIndex, 2}}), n, e,
                           rng, q);
  CHECK(ch.applied);
  CHECK(n.axon_terminals.size() == 3);
  CHECK(n.axon_terminals.back().emit_transmitter_index == 2);
  CHECK(distance_sq(n.axon_terminals.back().position, n.soma) ==
        doctest::Approx(e.config.spawn_radius * e.config.spawn_radius));

  n.dendrites.clear();
  ch = execute_action(gene(ActionType::Dentrite_RemoveRandom), n, e, rng, q);
  CHECK_FALSE(ch.applied);
  CHECK(n.dendrites.empty());

  const auto allow = gene(ActionType::Dentrite_AllowNew, {{param::kAcceptLo, 1}, {param::kAcceptHi, 1}});
  for (int i = 0; i < 4; ++i) CHECK(execute_action(allow, n, e, rng, q).applied);
  CHECK(n.dendrites.back().accepted_transmitter_indices == std::set<int>{1});
  ch = execute_action(allow, n, e, rng, q);  // 2x2 entry plane is full
  CHECK_FALSE(ch.applied);
  CHECK(n.dendrites.size() == 4);

  CHECK(execute_action(gene(ActionType::AllowTransmitterIndexProduction,
                            {{param::kProduceTransmitter, 3}}),
                       n, e, rng, q)
            .applied);
  CHECK(n.permitted_transmitters.count(3));
  CHECK(execute_action(gene(ActionType::AddArchitectorIndexProduction,
                            {{param::kProduceArchitector, 6}}),
                       n, e, rng, q)
            .applied);
  CHECK(n.permitted_architectors.count(6));

  execute_action(gene(ActionType::StimulateNeuroGenesis), n, e, rng, q);
  execute_action(gene(ActionType::Apoptosis), n, e, rng, q);
  CHECK(q.births.size() == 1);
  CHECK(q.deaths == std::vector<NodeId>{n.id});

  const auto missing = execute_action(gene(ActionType::AxonTerminal_AddNew), n, e, rng, q);
  CHECK_FALSE(missing.applied);
}

TEST_CASE("develop_phase examples") {
  auto c = small_config();
  c.payload_decay = 0.5;
  Entity e = seed_entity(c);

  SUBCASE("no firing genes: growth and decay only") {
    auto& n = add_node(e, {2, 2, 2});
    n.dendrites[0].growth_cone = {0.25, true, 1};
    TransArchPayload p;
    p.index = 1;
    p.position = {4, 2, 2};
    p.magnitude = 1.0;
    e.grid.deposit(p);
    e.grid.commit();
    const auto hash = n.identity_hash;
    const auto report = run_epoch(e);
    CHECK(report.changes.empty());
    CHECK(e.nodes.at(1).dendrites[0].position.x == doctest::Approx(2.25));
    CHECK(e.nodes.at(1).identity_hash == hash);
    CHECK(e.grid.payloads().begin()->second.magnitude == 0.5);
  }
  SUBCASE("neurogenesis adds a node sharing the functome") {
    add_node(e, {2, 2, 2}, {gene(ActionType::StimulateNeuroGenesis)});
    e.config.max_nodes = 2;
    auto r = run_epoch(e);
    CHECK(r.born == std::vector<NodeId>{2});
    REQUIRE(e.nodes.size() == 2);
    CHECK(e.nodes.at(2).functome_id == e.nodes.at(1).functome_id);
    CHECK(e.nodes.at(2).dendrites.size() == 1);
    CHECK(e.nodes.at(2).identity_hash == e.nodes.at(1).identity_hash);
    r = run_epoch(e);  // cap reached
    CHECK(r.born.empty());
    CHECK(e.nodes.size() == 2);
  }
  SUBCASE("apoptosis removes the node at commit") {
    add_node(e, {2, 2, 2}, {gene(ActionType::Apoptosis)});
    add_node(e, {5, 5, 5});
    const auto r = run_epoch(e);
    CHECK(r.pruned == std::vector<NodeId>{1});
    CHECK(e.nodes.count(1) == 0);
    CHECK(e.nodes.size() == 1);
    CHECK(e.functomes.size() == 1);
  }
  SUBCASE("architectors trigger the matching enabled gene") {
    auto& n = add_node(e, {2, 2, 2}, {gene(ActionType::AxonTerminal_AddNew, {{param::kEmitIndex, 1}})});
    e.functomes.at(n.functome_id).genes[0].params[param::kAfterClock] = 1000;
    TransArchPayload a;
    a.kind = PayloadKind::Architector;
    a.index = 8;  // 8 mod 8 = AxonTerminal_AddNew
    a.position = {2, 2, 2.2};
    a.properties[kTargetActionProperty] = 0;
    e.grid.deposit(a);
    e.grid.commit();
    const auto r = run_epoch(e);
    REQUIRE(r.changes.size() == 1);
    CHECK(r.changes[0].source.rfind("architector", 0) == 0);
    CHECK(e.nodes.at(1).axon_terminals.size() == 1);
    CHECK(e.grid.size() == 0);
  }
}

TEST_CASE("mutation clones a shared functome") {
  auto c = small_config();
  c.stability_min = 1.0;
  c.mutation_rate = 1.0;
  Entity e = seed_entity(c);
  auto& a = add_node(e, {2, 2, 2}, {gene(ActionType::Dentrite_RemoveRandom)});
  auto& b = add_node(e, {6, 6, 6});
  e.functomes.erase(b.functome_id);
  b.functome_id = a.functome_id;
  e.functomes.at(a.functome_id).mutation_rate = 1.0;
  a.stability_index = 0.4;
  b.stability_index = 1.0;
  const auto original = e.functomes.at(a.functome_id);

  EpochReport r;
  develop_phase(e, r);
  CHECK(r.mutations == 1);
  const auto& na = e.nodes.at(1);
  const auto& nb = e.nodes.at(2);
  CHECK(na.functome_id != nb.functome_id);
  CHECK(e.functomes.at(nb.functome_id) == original);
  CHECK(e.functomes.at(na.functome_id).lineage == std::vector<FunctomeId>{original.id});
}

TEST_CASE("locked entities never mutate or restructure") {
  auto e = seeded(4);
  e.config.stability_min = 1.0;  // every node would otherwise mutate
  lock(e);
  std::map<NodeId, std::string> hashes;
  for (const auto& [id, n] : e.nodes) hashes[id] = n.identity_hash;
  std::string genes;
  for (const auto& [id, f] : e.functomes) genes += to_json(f).dump();

  for (int i = 0; i < 30; ++i) {
    const auto r = run_epoch(e);
    CHECK(r.mutations == 0);
    CHECK(r.changes.empty());
    CHECK(r.pruned.empty());
    CHECK(r.born.empty());
  }
  std::string after;
  for (const auto& [id, f] : e.functomes) after += to_json(f).dump();
  CHECK(after == genes);
  for (const auto& [id, n] : e.nodes) CHECK(n.identity_hash == hashes.at(id));
  CHECK(e.entity_clock == 30);
}

TEST_CASE("run_epoch examples") {
  SUBCASE("empty entity") {
    Entity e = seed_entity(small_config());
    const auto r = run_epoch(e);
    CHECK(r.spike_count() == 0);
    CHECK(r.stability.empty());
    CHECK(e.entity_clock == 1);
  }
  SUBCASE("clock is monotone and pruned nodes are gone") {
    auto e = seeded(9);
    for (int i = 0; i < 40; ++i) {
      const auto before = e.entity_clock;
      const auto r = run_epoch(e);
      CHECK(r.epoch == before);
      CHECK(e.entity_clock == before + 1);
      for (NodeId id : r.pruned) CHECK(e.nodes.count(id) == 0);
      for (NodeId id : r.born) {
        CHECK(e.nodes.count(id) == 1);
        CHECK(std::find(r.pruned.begin(), r.pruned.end(), id) == r.pruned.end());
      }
      for (const auto& [id, n] : e.nodes) {
        CHECK(e.functomes.count(n.functome_id) == 1);
        CHECK(n.stability_index > 0.0);
        CHECK(n.stability_index <= 1.0);
      }
    }
  }
}

TEST_CASE("trajectories are identical across runs and thread counts") {
  auto run = [](int threads) {
    omp_set_num_threads(threads);
    auto e = seeded(17);
    std::string reports;
    for (int i = 0; i < 40; ++i) reports += to_json(run_epoch(e)).dump();
    return reports + state_of(e);
  };
  const auto one = run(1);
  CHECK(run(1) == one);
  CHECK(run(4) == one);
}

TEST_CASE("entity json round trip") {
  auto e = seeded(5);
  for (int i = 0; i < 5; ++i) run_epoch(e);
  e.output_probes.push_back(OutputProbe{3, {1, 1, 1}, 2.0, {0.5}});
  const auto j = to_json(e);
  auto back = entity_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());

  back.rng = e.rng;
  for (int i = 0; i < 5; ++i) {
    CHECK(to_json(run_epoch(back)).dump() == to_json(run_epoch(e)).dump());
  }
}
