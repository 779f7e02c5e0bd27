#include "eden/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace eden {

namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

struct FieldAccess {
  std::function<json(const EngineConfig&)> get;
  std::function<void(EngineConfig&, const json&)> set;
};

// Table of every config key, in documentation order.
const std::vector<std::pair<std::string, FieldAccess>>& fields() {
  static const auto table = [] {
    std::vector<std::pair<std::string, FieldAccess>> t;
    auto num = [&t](const char* key, auto EngineConfig::*member) {
      using M = std::remove_reference_t<decltype(std::declval<EngineConfig>().*member)>;
      t.push_back({key,
                   {[member](const EngineConfig& c) { return json(c.*member); },
                    [member, key](EngineConfig& c, const json& j) {
                      if constexpr (std::is_floating_point_v<M>) {
                        if (!j.is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
                        c.*member = j.get<M>();
                      } else {
                        if (!j.is_number_integer()) throw std::invalid_argument(std::string(key) + " must be an integer");
                        if constexpr (std::is_unsigned_v<M>) {
                          if (j.is_number_unsigned() || j.get<std::int64_t>() >= 0) {
                            c.*member = j.get<M>();
                          } else {
                            throw std::invalid_argument(std::string(key) + " must be >= 0");
                          }
                        } else {
                          c.*member = j.get<M>();
                        }
                      }
                    }}});
    };
    num("dim_xy", &EngineConfig::dim_xy);
    num("dim_z", &EngineConfig::dim_z);
    num("min_e", &EngineConfig::min_e);
    num("dr", &EngineConfig::dr);
    num("at_mod", &EngineConfig::at_mod);
    num("learning_rate", &EngineConfig::learning_rate);
    num("passes_per_epoch", &EngineConfig::passes_per_epoch);
    num("stability_prune_threshold", &EngineConfig::stability_prune_threshold);
    num("stability_min", &EngineConfig::stability_min);
    num("goal_refresh_threshold", &EngineConfig::goal_refresh_threshold);
    num("architector_sigma", &EngineConfig::architector_sigma);
    num("spike_history_window", &EngineConfig::spike_history_window);
    num("baseline_alpha", &EngineConfig::baseline_alpha);
    num("mutation_rate", &EngineConfig::mutation_rate);
    num("initial_nodes", &EngineConfig::initial_nodes);
    num("max_nodes", &EngineConfig::max_nodes);
    num("initial_genes", &EngineConfig::initial_genes);
    num("initial_dendrites", &EngineConfig::initial_dendrites);
    num("initial_terminals", &EngineConfig::initial_terminals);
    num("transmitter_types", &EngineConfig::transmitter_types);
    num("architector_types", &EngineConfig::architector_types);
    num("emit_magnitude", &EngineConfig::emit_magnitude);
    num("max_emit_ratio", &EngineConfig::max_emit_ratio);
    t.push_back({"grid_min",
                 {[](const EngineConfig& c) { return vec_json(c.bounds.lo); },
                  [](EngineConfig& c, const json& j) {
                    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("grid_min must be [x,y,z]");
                    c.bounds.lo = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
                  }}});
    t.push_back({"grid_max",
                 {[](const EngineConfig& c) { return vec_json(c.bounds.hi); },
                  [](EngineConfig& c, const json& j) {
                    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("grid_max must be [x,y,z]");
                    c.bounds.hi = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
                  }}});
    num("grid_cell_size", &EngineConfig::grid_cell_size);
    num("payload_ttl", &EngineConfig::payload_ttl);
    num("payload_decay", &EngineConfig::payload_decay);
    num("epsilon_magnitude", &EngineConfig::epsilon_magnitude);
    num("pickup_radius", &EngineConfig::pickup_radius);
    num("neurite_radius", &EngineConfig::neurite_radius);
    num("spawn_radius", &EngineConfig::spawn_radius);
    num("action_scan_radius", &EngineConfig::action_scan_radius);
    num("gradient_sigma", &EngineConfig::gradient_sigma);
    num("max_step", &EngineConfig::max_step);
    num("seed", &EngineConfig::seed);
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> config_violations(const EngineConfig& c) {
  std::vector<std::string> v;
  auto need = [&v](bool ok, const char* msg) {
    if (!ok) v.emplace_back(msg);
  };
  auto finite = [](double x) { return std::isfinite(x); };
  need(c.dim_xy >= 1, "dim_xy must be >= 1");
  need(c.dim_z >= 1, "dim_z must be >= 1");
  need(c.min_e > 0.0 && finite(c.min_e), "min_e must be finite and > 0");
  need(c.dr >= 0.0 && c.dr < 0.5, "dr must lie in [0, 0.5)");
  need(c.at_mod >= 0.0 && finite(c.at_mod), "at_mod must be finite and >= 0");
  need(c.learning_rate >= 0.0 && finite(c.learning_rate), "learning_rate must be finite and >= 0");
  need(c.passes_per_epoch >= 1, "passes_per_epoch must be >= 1");
  need(c.stability_prune_threshold >= 0.0 && c.stability_prune_threshold <= 1.0,
       "stability_prune_threshold must lie in [0, 1]");
  need(c.stability_min >= 0.0 && c.stability_min <= 1.0, "stability_min must lie in [0, 1]");
  need(c.goal_refresh_threshold >= 0.0 && c.goal_refresh_threshold <= 1.0,
       "goal_refresh_threshold must lie in [0, 1]");
  need(c.architector_sigma >= 0.0 && finite(c.architector_sigma), "architector_sigma must be >= 0");
  need(c.spike_history_window >= 1, "spike_history_window must be >= 1");
  need(c.baseline_alpha > 0.0 && c.baseline_alpha <= 1.0, "baseline_alpha must lie in (0, 1]");
  need(c.mutation_rate >= 0.0 && c.mutation_rate <= 1.0, "mutation_rate must lie in [0, 1]");
  need(c.initial_nodes >= 0, "initial_nodes must be >= 0");
  need(c.max_nodes >= c.initial_nodes, "max_nodes must be >= initial_nodes");
  need(c.initial_genes >= 0, "initial_genes must be >= 0");
  need(c.initial_dendrites >= 1, "initial_dendrites must be >= 1");
  need(c.dim_xy < 1 || c.initial_dendrites <= c.dim_xy * c.dim_xy,
       "initial_dendrites must not exceed dim_xy * dim_xy entry cells");
  need(c.initial_terminals >= 0, "initial_terminals must be >= 0");
  need(c.transmitter_types >= 1, "transmitter_types must be >= 1");
  need(c.architector_types >= 1, "architector_types must be >= 1");
  need(c.emit_magnitude > 0.0 && finite(c.emit_magnitude), "emit_magnitude must be > 0");
  need(c.max_emit_ratio >= 1.0 && finite(c.max_emit_ratio), "max_emit_ratio must be finite and >= 1");
  need(c.bounds.lo.x < c.bounds.hi.x && c.bounds.lo.y < c.bounds.hi.y &&
           c.bounds.lo.z < c.bounds.hi.z,
       "grid_min must be below grid_max on every axis");
  need(c.grid_cell_size > 0.0, "grid_cell_size must be > 0");
  need(c.payload_ttl >= 0, "payload_ttl must be >= 0");
  need(c.payload_decay > 0.0 && c.payload_decay <= 1.0, "payload_decay must lie in (0, 1]");
  need(c.epsilon_magnitude >= 0.0, "epsilon_magnitude must be >= 0");
  need(c.pickup_radius > 0.0, "pickup_radius must be > 0");
  need(c.neurite_radius >= 0.0, "neurite_radius must be >= 0");
  need(c.spawn_radius >= 0.0, "spawn_radius must be >= 0");
  need(c.action_scan_radius >= 0.0, "action_scan_radius must be >= 0");
  need(c.gradient_sigma > 0.0, "gradient_sigma must be > 0");
  need(c.max_step >= 0.0, "max_step must be >= 0");
  return v;
}

void validate(const EngineConfig& config) {
  auto v = config_violations(config);
  if (!v.empty()) throw ConfigError(std::move(v));
}

nlohmann::json to_json(const EngineConfig& config) {
  json j = json::object();
  for (const auto& [key, access] : fields()) j[key] = access.get(config);
  return j;
}

EngineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});
  EngineConfig c;
  std::vector<std::string> violations;
  std::map<std::string, const FieldAccess*> by_key;
  for (const auto& [key, access] : fields()) by_key[key] = &access;
  for (const auto& [key, value] : j.items()) {
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      violations.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      it->second->set(c, value);
    } catch (const std::exception& e) {
      violations.push_back(e.what());
    }
  }
  for (auto& v : config_violations(c)) violations.push_back(std::move(v));
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return c;
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  return config_from_json(j);
}

}  // namespace eden
