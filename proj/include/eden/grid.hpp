#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "eden/types.hpp"

namespace eden {

enum class PayloadKind : std::uint8_t { Transmitter, Architector };

// Grid-borne transmitter or architector unit.
struct TransArchPayload {
  PayloadId id = 0;
  PayloadKind kind = PayloadKind::Transmitter;
  int index = 0;
  Vec3 position;
  double magnitude = 1.0;
  int ttl = 3;
  // Transmitters carry "excitatory" (+1 / -1); architectors carry
  // "target_action" (ordinal of the action they trigger).
  std::map<std::string, double> properties;

  bool operator==(const TransArchPayload&) const = default;
};

inline constexpr const char* kExcitatoryProperty = "excitatory";
inline constexpr const char* kTargetActionProperty = "target_action";

struct CommitStats {
  std::size_t added = 0;
  std::size_t removed = 0;
};

// Shared 3D environment. Reads only ever see the committed state; deposits and
// removals are staged and applied together by commit().
class NeuralGrid {
 public:
  explicit NeuralGrid(Box bounds = {}, double cell_size = 1.0);

  const Box& bounds() const { return bounds_; }
  double cell_size() const { return cell_size_; }

  // Validates and stages a payload, assigning its id. Throws InputError when
  // the position lies outside the bounds or the magnitude is not positive.
  PayloadId deposit(TransArchPayload payload);
  void stage_removal(PayloadId id);
  // Removals first (unknown or repeated ids are ignored), then additions in
  // staging order.
  CommitStats commit();
  std::size_t pending_additions() const { return staged_.size(); }

  // Committed payloads within Euclidean distance r, ordered by (distance, id).
  std::vector<const TransArchPayload*> query_radius(const Vec3& center, double r) const;

  double density(const Vec3& pos, int index, double sigma) const;
  Vec3 density_gradient(const Vec3& pos, int index, double sigma) const;

  // Scales every magnitude, ages ttl by one, and removes payloads whose ttl went
  // negative or whose magnitude fell below epsilon_magnitude.
  std::size_t decay_and_expire(double decay_factor, double epsilon_magnitude);

  const std::map<PayloadId, TransArchPayload>& payloads() const { return payloads_; }
  std::size_t size() const { return payloads_.size(); }

  PayloadId next_id() const { return next_id_; }
  // Rebuilds a grid from saved payloads; used by the loader.
  void restore(std::vector<TransArchPayload> payloads, PayloadId next_id);

 private:
  std::int64_t cell_key(int cx, int cy, int cz) const;
  int cell_coord(double v, double lo) const;
  void rebuild_index();

  Box bounds_;
  double cell_size_;
  int cells_x_ = 1, cells_y_ = 1, cells_z_ = 1;
  std::map<PayloadId, TransArchPayload> payloads_;
  std::unordered_map<std::int64_t, std::vector<PayloadId>> buckets_;
  std::vector<TransArchPayload> staged_;
  std::vector<PayloadId> staged_removals_;
  PayloadId next_id_ = 1;
};

}  // namespace eden
