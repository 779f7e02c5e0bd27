#include "eden/session_store.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

namespace eden {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path + "'");
  return ss.str();
}

json parse_document(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError("malformed " + what + ": " + e.what());
  }
}

Vec3 vec_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw LoadError(where + " must be [x,y,z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

RulePrecondition precondition_from(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) {
    throw LoadError(where + " must hold exactly one precondition");
  }
  RulePrecondition w;
  const auto& [key, value] = *j.items().begin();
  if (key == "epoch_at_least" || key == "node_count_at_least") {
    if (!value.is_number()) throw LoadError(where + "/" + key + " must be a number");
    w.kind = key == "epoch_at_least" ? RulePrecondition::Kind::EpochAtLeast
                                     : RulePrecondition::Kind::NodeCountAtLeast;
    w.threshold = value.get<double>();
  } else if (key == "probe_reading_at_least") {
    if (!value.is_object() || !value.contains("probe") || !value.contains("value") ||
        !value.at("probe").is_number_unsigned() || !value.at("value").is_number()) {
      throw LoadError(where + "/" + key + " must be {\"probe\": id, \"value\": v}");
    }
    w.kind = RulePrecondition::Kind::ProbeReadingAtLeast;
    w.probe = value.at("probe").get<std::uint64_t>();
    w.threshold = value.at("value").get<double>();
  } else {
    throw LoadError(where + ": unknown precondition '" + key + "'");
  }
  return w;
}

RuleEffect effect_from(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) throw LoadError(where + " must hold exactly one effect");
  RuleEffect t;
  const auto& [key, value] = *j.items().begin();
  const auto at = where + "/" + key;
  if (key == "add_input_probe") {
    t.kind = RuleEffect::Kind::AddInputProbe;
    try {
      t.probe = input_probe_from_json(value);
    } catch (const std::exception& e) {
      throw LoadError(at + ": " + e.what());
    }
    if (t.probe.frames.empty()) throw LoadError(at + " needs at least one frame");
  } else if (key == "remove_input_probe") {
    t.kind = RuleEffect::Kind::RemoveInputProbe;
    const auto& id = value.is_object() && value.contains("id") ? value.at("id") : value;
    if (!id.is_number_unsigned()) throw LoadError(at + " must name a probe id");
    t.probe_id = id.get<std::uint64_t>();
  } else if (key == "deposit_payload") {
    t.kind = RuleEffect::Kind::DepositPayload;
    if (!value.is_object()) throw LoadError(at + " must be an object");
    const auto kind = value.value("kind", std::string("transmitter"));
    if (kind == "transmitter") {
      t.payload.kind = PayloadKind::Transmitter;
    } else if (kind == "architector") {
      t.payload.kind = PayloadKind::Architector;
    } else {
      throw LoadError(at + "/kind: unknown payload kind '" + kind + "'");
    }
    if (!value.contains("index") || !value.at("index").is_number_integer()) {
      throw LoadError(at + "/index must be an integer");
    }
    t.payload.index = value.at("index").get<int>();
    if (!value.contains("position")) throw LoadError(at + "/position is required");
    t.payload.position = vec_from(value.at("position"), at + "/position");
    t.payload.magnitude = value.value("magnitude", 1.0);
    if (!(t.payload.magnitude > 0.0)) throw LoadError(at + "/magnitude must be > 0");
    if (value.contains("ttl")) {
      if (!value.at("ttl").is_number_unsigned()) throw LoadError(at + "/ttl must be >= 0");
      t.payload.ttl = value.at("ttl").get<int>();
      t.payload_ttl_set = true;
    }
    if (value.contains("properties")) {
      try {
        t.payload.properties = value.at("properties").get<std::map<std::string, double>>();
      } catch (const json::exception&) {
        throw LoadError(at + "/properties must map names to numbers");
      }
    }
  } else {
    throw LoadError(where + ": unknown effect '" + key + "'");
  }
  return t;
}

std::string effect_name(RuleEffect::Kind k) {
  switch (k) {
    case RuleEffect::Kind::AddInputProbe: return "add_input_probe";
    case RuleEffect::Kind::RemoveInputProbe: return "remove_input_probe";
    case RuleEffect::Kind::DepositPayload: return "deposit_payload";
  }
  return "unknown";
}

EnvironmentEvent fire(Entity& e, const EnvironmentRule& rule) {
  EnvironmentEvent ev;
  ev.epoch = e.entity_clock;
  ev.rule = rule.id;
  ev.effect = effect_name(rule.then.kind);
  switch (rule.then.kind) {
    case RuleEffect::Kind::AddInputProbe: {
      if (!e.config.bounds.contains(rule.then.probe.position)) {
        ev.detail = "probe position lies outside the grid";
        break;
      }
      InputProbe p = rule.then.probe;
      p.id = e.next_probe_id++;
      p.cursor = 0;
      e.input_probes.push_back(std::move(p));
      ev.applied = true;
      ev.detail = "input probe " + std::to_string(e.input_probes.back().id);
      break;
    }
    case RuleEffect::Kind::RemoveInputProbe: {
      const auto it = std::find_if(e.input_probes.begin(), e.input_probes.end(),
                                   [&](const InputProbe& p) { return p.id == rule.then.probe_id; });
      ev.detail = "input probe " + std::to_string(rule.then.probe_id);
      if (it == e.input_probes.end()) {
        ev.detail += " does not exist";
        break;
      }
      e.input_probes.erase(it);
      ev.applied = true;
      break;
    }
    case RuleEffect::Kind::DepositPayload: {
      if (!e.config.bounds.contains(rule.then.payload.position)) {
        ev.detail = "payload position lies outside the grid";
        break;
      }
      TransArchPayload p = rule.then.payload;
      if (!rule.then.payload_ttl_set) p.ttl = e.config.payload_ttl;
      const auto id = e.grid.deposit(p);
      e.grid.commit();
      ev.applied = true;
      ev.detail = "payload " + std::to_string(id);
      break;
    }
  }
  return ev;
}

}  // namespace

json save_state_json(const Entity& e) {
  return {{"format", kSaveFormat},
          {"format_version", kSaveFormatVersion},
          {"locked", e.locked},
          {"rng_state", e.rng.state()},
          {"entity", to_json(e)}};
}

std::string serialize_save_state(const Entity& e) { return save_state_json(e).dump(2) + "\n"; }

Entity load_save_state(const json& doc) {
  if (!doc.is_object()) throw LoadError("save state must be a JSON object");
  if (!doc.contains("format") || doc.at("format") != kSaveFormat) {
    throw LoadError("/format: not an " + std::string(kSaveFormat) + " document");
  }
  if (!doc.contains("format_version") || !doc.at("format_version").is_number_integer()) {
    throw LoadError("/format_version: missing or not an integer");
  }
  const auto version = doc.at("format_version").get<std::int64_t>();
  if (version != kSaveFormatVersion) {
    throw VersionError("/format_version: version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kSaveFormatVersion) + ")");
  }
  if (!doc.contains("locked") || !doc.at("locked").is_boolean()) {
    throw LoadError("/locked: missing or not a boolean");
  }
  if (!doc.contains("rng_state") || !doc.at("rng_state").is_string()) {
    throw LoadError("/rng_state: missing or not a string");
  }
  if (!doc.contains("entity")) throw LoadError("/entity: missing");

  Entity e;
  try {
    e = entity_from_json(doc.at("entity"));
  } catch (const ConfigError& err) {
    std::string msg = "/entity/config:";
    for (const auto& v : err.violations()) msg += " " + v + ";";
    throw LoadError(msg);
  } catch (const LoadError& err) {
    throw LoadError(std::string("/entity: ") + err.what());
  } catch (const json::exception& err) {
    throw LoadError(std::string("/entity: ") + err.what());
  }
  try {
    e.rng.set_state(doc.at("rng_state").get<std::string>());
  } catch (const LoadError& err) {
    throw LoadError(std::string("/rng_state: ") + err.what());
  }
  if (doc.at("locked").get<bool>()) {
    lock(e);
  } else {
    e.locked = false;
  }
  return e;
}

Entity parse_save_state(const std::string& text) {
  return load_save_state(parse_document(text, "save state"));
}

void save(const Entity& entity, const std::string& path) {
  const auto text = serialize_save_state(entity);
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path + "': " + ec.message());
}

Entity load(const std::string& path) { return parse_save_state(read_file(path)); }

std::vector<EnvironmentRule> rules_from_json(const json& j) {
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("rules")) throw LoadError("rules document needs a \"rules\" array");
    list = &j.at("rules");
  }
  if (!list->is_array()) throw LoadError("rules must be an array");
  std::vector<EnvironmentRule> rules;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const auto& r = (*list)[i];
    const auto where = "/rules/" + std::to_string(i);
    if (!r.is_object()) throw LoadError(where + " must be an object");
    for (const auto& [key, value] : r.items()) {
      if (key != "id" && key != "when" && key != "then" && key != "repeating") {
        throw LoadError(where + ": unknown key '" + key + "'");
      }
    }
    EnvironmentRule rule;
    rule.id = r.contains("id") && r.at("id").is_string() ? r.at("id").get<std::string>()
                                                         : "rule-" + std::to_string(i);
    if (!ids.insert(rule.id).second) throw LoadError(where + "/id: duplicate rule id '" + rule.id + "'");
    if (!r.contains("when")) throw LoadError(where + "/when is required");
    if (!r.contains("then")) throw LoadError(where + "/then is required");
    rule.when = precondition_from(r.at("when"), where + "/when");
    rule.then = effect_from(r.at("then"), where + "/then");
    if (r.contains("repeating")) {
      if (!r.at("repeating").is_boolean()) throw LoadError(where + "/repeating must be a boolean");
      rule.repeating = r.at("repeating").get<bool>();
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<EnvironmentRule> load_rules(const std::string& path) {
  return rules_from_json(parse_document(read_file(path), "rules file"));
}

bool precondition_holds(const RulePrecondition& w, const Entity& e) {
  switch (w.kind) {
    case RulePrecondition::Kind::EpochAtLeast:
      return static_cast<double>(e.entity_clock) >= w.threshold;
    case RulePrecondition::Kind::NodeCountAtLeast:
      return static_cast<double>(e.nodes.size()) >= w.threshold;
    case RulePrecondition::Kind::ProbeReadingAtLeast:
      for (const auto& p : e.output_probes) {
        if (p.id == w.probe) return !p.history.empty() && p.history.back() >= w.threshold;
      }
      return false;
  }
  return false;
}

std::vector<EnvironmentEvent> apply_environment_rules(Entity& e,
                                                      const std::vector<EnvironmentRule>& rules) {
  std::vector<EnvironmentEvent> events;
  for (const auto& rule : rules) {
    if (!rule.repeating && e.fired_rules.count(rule.id)) continue;
    if (!precondition_holds(rule.when, e)) continue;
    events.push_back(fire(e, rule));
    if (!rule.repeating) e.fired_rules.insert(rule.id);
  }
  return events;
}

json to_json(const EnvironmentEvent& ev) {
  return {{"epoch", ev.epoch},
          {"rule", ev.rule},
          {"effect", ev.effect},
          {"applied", ev.applied},
          {"detail", ev.detail}};
}

json session_record(const EpochReport& report, const Entity& e,
                    const std::vector<EnvironmentEvent>& events) {
  json nodes = json::array();
  for (const auto& [id, n] : e.nodes) {
    json dendrites = json::array();
    for (const auto& d : n.dendrites) dendrites.push_back(vec(d.position));
    json terminals = json::array();
    for (const auto& t : n.axon_terminals) terminals.push_back(vec(t.position));
    const auto spikes = report.spikes.find(id);
    nodes.push_back({{"id", id},
                     {"soma", vec(n.soma)},
                     {"dendrites", dendrites},
                     {"terminals", terminals},
                     {"stability", n.stability_index},
                     {"goal_z", n.goal ? json(n.goal->z_index) : json(nullptr)},
                     {"spikes", spikes == report.spikes.end() ? 0 : spikes->second.size()}});
  }
  json evs = json::array();
  for (const auto& ev : events) evs.push_back(to_json(ev));
  return {{"epoch", report.epoch},
          {"locked", report.locked},
          {"node_count", e.nodes.size()},
          {"spike_count", report.spike_count()},
          {"mutations", report.mutations},
          {"stability_threshold", e.config.stability_prune_threshold},
          {"nodes", nodes},
          {"pruned", report.pruned},
          {"born", report.born},
          {"payloads",
           {{"deposited", report.payloads_deposited},
            {"consumed", report.payloads_consumed},
            {"expired", report.payloads_expired}}},
          {"probe_readings", report.probe_readings},
          {"events", evs}};
}

SessionLog::SessionLog(const std::string& path) : path_(path), out_(path, std::ios::app) {
  if (!out_) throw IoError("cannot open session log '" + path + "'");
}

void SessionLog::append(const json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing session log '" + path_ + "'");
}

void append_session_record(SessionLog& log, const EpochReport& report, const Entity& entity,
                           const std::vector<EnvironmentEvent>& events) {
  log.append(session_record(report, entity, events));
}

std::vector<json> read_session_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open session log '" + path + "'");
  std::vector<json> records;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw LoadError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace eden
