#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eden/entity.hpp"

namespace eden {

inline constexpr const char* kSaveFormat = "eden-save-state";
inline constexpr int kSaveFormatVersion = 1;

// Save state document: keys sorted, reals in shortest round-trip form.
nlohmann::json save_state_json(const Entity& entity);
std::string serialize_save_state(const Entity& entity);
// Throws VersionError on a format_version mismatch and LoadError (with the
// JSON location where known) for anything malformed.
Entity load_save_state(const nlohmann::json& doc);
Entity parse_save_state(const std::string& text);

// Writes through a temporary file so a failed save never leaves a partial one.
void save(const Entity& entity, const std::string& path);
Entity load(const std::string& path);

// Environment control rules, evaluated before each epoch's Propagate.
struct RulePrecondition {
  enum class Kind { EpochAtLeast, ProbeReadingAtLeast, NodeCountAtLeast };
  Kind kind = Kind::EpochAtLeast;
  double threshold = 0.0;
  std::uint64_t probe = 0;  // output probe id for ProbeReadingAtLeast
};

struct RuleEffect {
  enum class Kind { AddInputProbe, RemoveInputProbe, DepositPayload };
  Kind kind = Kind::AddInputProbe;
  InputProbe probe;             // AddInputProbe (id assigned on firing)
  std::uint64_t probe_id = 0;   // RemoveInputProbe
  TransArchPayload payload;     // DepositPayload
  bool payload_ttl_set = false; // otherwise config.payload_ttl
};

struct EnvironmentRule {
  std::string id;
  RulePrecondition when;
  RuleEffect then;
  bool repeating = false;
};

struct EnvironmentEvent {
  std::int64_t epoch = 0;
  std::string rule;
  std::string effect;
  bool applied = false;
  std::string detail;
};

std::vector<EnvironmentRule> rules_from_json(const nlohmann::json& j);
std::vector<EnvironmentRule> load_rules(const std::string& path);

bool precondition_holds(const RulePrecondition& when, const Entity& entity);
// Fires every rule whose precondition holds, in file order. Non-repeating
// rules are recorded in entity.fired_rules and never fire again.
std::vector<EnvironmentEvent> apply_environment_rules(Entity& entity,
                                                      const std::vector<EnvironmentRule>& rules);

nlohmann::json to_json(const EnvironmentEvent& event);

// One TrainingSessionMetaData line for the epoch just run.
nlohmann::json session_record(const EpochReport& report, const Entity& entity,
                              const std::vector<EnvironmentEvent>& events);

// Append-only JSONL writer; each record is flushed as it is written.
class SessionLog {
 public:
  explicit SessionLog(const std::string& path);
  void append(const nlohmann::json& record);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

void append_session_record(SessionLog& log, const EpochReport& report, const Entity& entity,
                           const std::vector<EnvironmentEvent>& events);

std::vector<nlohmann::json> read_session_log(const std::string& path);

}  // namespace eden
