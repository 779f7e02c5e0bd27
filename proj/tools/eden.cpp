#include <omp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "eden/hash.hpp"
#include "eden/session_store.hpp"

using namespace eden;
using nlohmann::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kSchema = 4,
  kVersion = 5,
  kRuntime = 6,
  kDivergence = 7,
};

const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  unexpected failure\n"
    "  2  usage error (bad flags or arguments)\n"
    "  3  I/O error (missing or unwritable file)\n"
    "  4  schema error (invalid config, save state, pattern, rules or log)\n"
    "  5  save state format version mismatch\n"
    "  6  simulation error\n"
    "  7  replay divergence\n"
    "Errors print one line: error: code=<name> message=\"...\"";

// Thrown by commands to exit with a specific code and message.
struct CommandError {
  int code;
  std::string name;
  std::string message;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

int report_error(int code, const std::string& name, const std::string& message) {
  std::cerr << "error: code=" << name << " message=\"" << escape(message) << "\"\n";
  return code;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

// A pattern file is either a list of frames or an object with the probe
// position, frames and optional readout probes.
struct Pattern {
  InputProbe probe;
  std::vector<OutputProbe> readouts;
};

Pattern load_pattern(const std::string& path, const EngineConfig& config) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw LoadError("malformed pattern: " + std::string(e.what()));
  }
  Pattern p;
  const Vec3 centre = (config.bounds.lo + config.bounds.hi) * 0.5;
  json probe = j.is_array() ? json{{"frames", j}} : j;
  if (!probe.is_object() || !probe.contains("frames")) {
    throw LoadError("pattern must be a list of frames or an object with \"frames\"");
  }
  for (const auto& [key, value] : probe.items()) {
    if (key != "position" && key != "frames" && key != "readouts") {
      throw LoadError("pattern: unknown key '" + key + "'");
    }
  }
  if (!probe.contains("position")) probe["position"] = {centre.x, centre.y, centre.z};
  json readouts = probe.value("readouts", json::array());
  probe.erase("readouts");
  try {
    p.probe = input_probe_from_json(probe);
    for (const auto& r : readouts) p.readouts.push_back(output_probe_from_json(r));
  } catch (const LoadError& e) {
    throw LoadError(std::string("pattern: ") + e.what());
  } catch (const json::exception& e) {
    throw LoadError(std::string("pattern: ") + e.what());
  }
  if (p.probe.frames.empty()) throw LoadError("pattern needs at least one frame");
  if (!config.bounds.contains(p.probe.position)) {
    throw LoadError("pattern position lies outside the grid");
  }
  return p;
}

// Installs the pattern as the entity's input probe at its position. Training
// again with the same pattern keeps the probe's cursor.
void install_pattern(Entity& e, const Pattern& pattern) {
  auto it = std::find_if(e.input_probes.begin(), e.input_probes.end(),
                         [&](const InputProbe& p) { return p.position == pattern.probe.position; });
  if (it == e.input_probes.end()) {
    InputProbe p = pattern.probe;
    p.id = e.next_probe_id++;
    p.cursor = 0;
    e.input_probes.push_back(std::move(p));
  } else if (it->frames != pattern.probe.frames) {
    it->frames = pattern.probe.frames;
    it->cursor = 0;
  }
  for (const auto& r : pattern.readouts) {
    const bool present = std::any_of(e.output_probes.begin(), e.output_probes.end(),
                                     [&](const OutputProbe& o) {
                                       return o.position == r.position && o.radius == r.radius;
                                     });
    if (present) continue;
    OutputProbe o = r;
    o.id = e.next_probe_id++;
    o.history.clear();
    e.output_probes.push_back(std::move(o));
  }
}

struct Stats {
  double mean = 0.0, min = 0.0, max = 0.0;
  bool any = false;
};

Stats stability_stats(const Entity& e) {
  Stats s;
  double sum = 0.0;
  for (const auto& [id, n] : e.nodes) {
    if (!s.any) s.min = s.max = n.stability_index;
    s.any = true;
    sum += n.stability_index;
    s.min = std::min(s.min, n.stability_index);
    s.max = std::max(s.max, n.stability_index);
  }
  if (s.any) s.mean = sum / static_cast<double>(e.nodes.size());
  return s;
}

int cmd_init(const std::string& config_path, const std::string& out,
             std::optional<std::uint64_t> seed) {
  EngineConfig config = config_path.empty() ? EngineConfig{} : load_config(config_path);
  if (seed) config.seed = *seed;
  const auto entity = seed_entity(config);
  save(entity, out);
  std::cout << "initialized " << out << ": " << entity.nodes.size() << " nodes, seed "
            << config.seed << "\n";
  return kOk;
}

int cmd_train(const std::string& state, const std::string& out, const std::string& pattern_path,
              long epochs, const std::string& log_path, const std::string& rules_path) {
  // Zero epochs is a no-op: nothing is read beyond validation, nothing written.
  auto entity = load(state);
  std::optional<Pattern> pattern;
  if (!pattern_path.empty()) pattern = load_pattern(pattern_path, entity.config);
  std::vector<EnvironmentRule> rules;
  if (!rules_path.empty()) rules = load_rules(rules_path);
  if (epochs == 0) {
    std::cout << "trained 0 epochs; state unchanged\n";
    return kOk;
  }
  if (pattern) install_pattern(entity, *pattern);
  std::optional<SessionLog> log;
  if (!log_path.empty()) log.emplace(log_path);

  std::size_t pruned = 0, born = 0, spikes = 0;
  for (long i = 0; i < epochs; ++i) {
    const auto events = apply_environment_rules(entity, rules);
    const auto report = run_epoch(entity);
    pruned += report.pruned.size();
    born += report.born.size();
    spikes += report.spike_count();
    if (log) append_session_record(*log, report, entity, events);
  }
  save(entity, out.empty() ? state : out);
  const auto s = stability_stats(entity);
  std::cout << "trained " << epochs << " epochs to clock " << entity.entity_clock << ": "
            << entity.nodes.size() << " nodes, " << spikes << " spikes, " << pruned
            << " pruned, " << born << " born, mean stability " << s.mean << "\n";
  return kOk;
}

int cmd_set_lock(const std::string& state, bool locked) {
  auto entity = load(state);
  if (locked) {
    lock(entity);
  } else {
    unlock(entity);
  }
  save(entity, state);
  std::cout << (locked ? "locked " : "unlocked ") << state << "\n";
  return kOk;
}

int cmd_inspect(const std::string& state) {
  const auto e = load(state);
  const auto s = stability_stats(e);
  std::cout << "entity " << e.id << "\n"
            << "  clock        " << e.entity_clock << "\n"
            << "  locked       " << (e.locked ? "yes" : "no") << "\n"
            << "  tensor       " << e.config.dim_xy << "x" << e.config.dim_xy << "x"
            << e.config.dim_z << " min_e " << e.config.min_e << " dr " << e.config.dr << "\n"
            << "  nodes        " << e.nodes.size() << "\n"
            << "  functomes    " << e.functomes.size() << "\n"
            << "  payloads     " << e.grid.size() << "\n"
            << "  probes       " << e.input_probes.size() << " in, " << e.output_probes.size()
            << " out\n";
  if (s.any) {
    std::cout << "  stability    mean " << s.mean << " min " << s.min << " max " << s.max << "\n";
  }
  for (const auto& [id, n] : e.nodes) {
    std::cout << "  node " << id << " soma (" << n.soma.x << ", " << n.soma.y << ", " << n.soma.z
              << ") dendrites " << n.dendrites.size() << " terminals " << n.axon_terminals.size()
              << " functome " << n.functome_id << " stability " << n.stability_index << " hash "
              << n.identity_hash << "\n";
  }
  return kOk;
}

int cmd_export_metrics(const std::string& log_path, const std::string& out) {
  const auto records = read_session_log(log_path);
  std::ostringstream csv;
  csv << "epoch,node_count,spike_count,stability_mean,stability_min,stability_max,pruned,born,"
         "mutations\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    try {
      double sum = 0.0, lo = 0.0, hi = 0.0;
      const auto& nodes = r.at("nodes");
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double v = nodes[k].at("stability").get<double>();
        sum += v;
        lo = k == 0 ? v : std::min(lo, v);
        hi = k == 0 ? v : std::max(hi, v);
      }
      csv << r.at("epoch").get<std::int64_t>() << "," << nodes.size() << ","
          << r.at("spike_count").get<std::size_t>() << ",";
      if (nodes.empty()) {
        csv << ",,";
      } else {
        csv << json(sum / static_cast<double>(nodes.size())).dump() << "," << json(lo).dump()
            << "," << json(hi).dump();
      }
      csv << "," << r.at("pruned").size() << "," << r.at("born").size() << ","
          << r.at("mutations").get<std::size_t>() << "\n";
    } catch (const json::exception& e) {
      throw LoadError(log_path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  write_text(out, csv.str());
  std::cout << "exported " << records.size() << " epochs to " << out << "\n";
  return kOk;
}

// Runs the state forward and returns one serialized report per epoch plus the
// final save state.
std::vector<std::string> trajectory(const std::string& text, long epochs,
                                    const std::optional<Pattern>& pattern) {
  auto e = parse_save_state(text);
  if (pattern) install_pattern(e, *pattern);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(epochs) + 1);
  for (long i = 0; i < epochs; ++i) out.push_back(to_json(run_epoch(e)).dump());
  out.push_back(serialize_save_state(e));
  return out;
}

int cmd_replay(const std::string& state, long epochs, const std::string& pattern_path) {
  const auto text = read_text(state);
  std::optional<Pattern> pattern;
  if (!pattern_path.empty()) pattern = load_pattern(pattern_path, parse_save_state(text).config);

  // The second run is forced onto one thread so the comparison also covers
  // the parallel kernels against serial execution.
  const int threads = omp_get_max_threads();
  const auto first = trajectory(text, epochs, pattern);
  omp_set_num_threads(1);
  const auto second = trajectory(text, epochs, pattern);
  omp_set_num_threads(threads);

  std::uint64_t digest = fnv1a64("");
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] != second[i]) {
      const bool final_state = i + 1 == first.size();
      throw CommandError{kDivergence, "divergence",
                         final_state ? "final states differ after " + std::to_string(epochs) +
                                           " epochs"
                                     : "reports differ at epoch offset " + std::to_string(i)};
    }
    digest = fnv1a64(hex_digest(digest) + first[i]);
  }
  std::cout << "identical epochs=" << epochs << " digest=" << hex_digest(digest) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving developmental neural network engine"};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log simulation detail to stderr");

  std::string config_path, state, out, pattern, log_path, rules;
  long epochs = 0;
  std::uint64_t seed_override = 0;

  auto* init = app.add_subcommand("init", "Seed a new entity and write its save state");
  init->add_option("--config", config_path, "EngineConfig JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  init->add_option("--out", out, "Save state to write")->required();
  auto* seed_opt = init->add_option("--seed-override", seed_override, "Replace config.seed");

  auto* train = app.add_subcommand("train", "Run epochs on a save state");
  train->add_option("--state", state, "Save state to train")->required();
  train->add_option("--pattern", pattern, "Input pattern JSON, cycled one frame per pass");
  train->add_option("--epochs", epochs, "Epochs to run")->required()->check(CLI::NonNegativeNumber);
  train->add_option("--log", log_path, "Session log to append (JSONL)");
  train->add_option("--rules", rules, "Environment control rules JSON");
  train->add_option("--out", out, "Write the result here instead of over --state");

  auto* lock_cmd = app.add_subcommand("lock", "Lock a save state (propagate only)");
  lock_cmd->add_option("--state", state, "Save state")->required();
  auto* unlock_cmd = app.add_subcommand("unlock", "Unlock a save state");
  unlock_cmd->add_option("--state", state, "Save state")->required();

  auto* inspect = app.add_subcommand("inspect", "Summarize a save state");
  inspect->add_option("--state", state, "Save state")->required();

  auto* metrics = app.add_subcommand("export-metrics", "Per-epoch CSV from a session log");
  metrics->add_option("--log", log_path, "Session log")->required();
  metrics->add_option("--out", out, "CSV to write")->required();

  auto* replay = app.add_subcommand("replay", "Run a save state twice and compare every report");
  replay->add_option("--state", state, "Save state")->required();
  replay->add_option("--epochs", epochs, "Epochs to run")->required()->check(CLI::NonNegativeNumber);
  replay->add_option("--pattern", pattern, "Input pattern JSON installed before both runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(kUsage, "usage", e.what());
    return kUsage;
  }

  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*init) {
      return cmd_init(config_path, out, *seed_opt ? std::optional(seed_override) : std::nullopt);
    }
    if (*train) return cmd_train(state, out, pattern, epochs, log_path, rules);
    if (*lock_cmd) return cmd_set_lock(state, true);
    if (*unlock_cmd) return cmd_set_lock(state, false);
    if (*inspect) return cmd_inspect(state);
    if (*metrics) return cmd_export_metrics(log_path, out);
    if (*replay) return cmd_replay(state, epochs, pattern);
  } catch (const CommandError& e) {
    return report_error(e.code, e.name, e.message);
  } catch (const IoError& e) {
    return report_error(kIo, "io", e.what());
  } catch (const std::ios_base::failure& e) {
    return report_error(kIo, "io", e.what());
  } catch (const VersionError& e) {
    return report_error(kVersion, "version", e.what());
  } catch (const ConfigError& e) {
    std::string msg;
    for (const auto& v : e.violations()) msg += (msg.empty() ? "" : "; ") + v;
    return report_error(kSchema, "config", msg);
  } catch (const LoadError& e) {
    return report_error(kSchema, "schema", e.what());
  } catch (const EdenError& e) {
    return report_error(kRuntime, "simulation", e.what());
  } catch (const std::exception& e) {
    return report_error(kFailure, "internal", e.what());
  }
  return kUsage;
}
