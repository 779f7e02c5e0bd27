#include "eden/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "eden/kernels.hpp"

namespace eden {

NeuralGrid::NeuralGrid(Box bounds, double cell_size) : bounds_(bounds), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw ConfigError({"grid cell_size must be > 0"});
  if (!(bounds.lo.x < bounds.hi.x && bounds.lo.y < bounds.hi.y && bounds.lo.z < bounds.hi.z)) {
    throw ConfigError({"grid bounds must have lo < hi on every axis"});
  }
  auto count = [&](double lo, double hi) {
    return std::max(1, static_cast<int>(std::floor((hi - lo) / cell_size_)) + 1);
  };
  cells_x_ = count(bounds.lo.x, bounds.hi.x);
  cells_y_ = count(bounds.lo.y, bounds.hi.y);
  cells_z_ = count(bounds.lo.z, bounds.hi.z);
}

int NeuralGrid::cell_coord(double v, double lo) const {
  return static_cast<int>(std::floor((v - lo) / cell_size_));
}

std::int64_t NeuralGrid::cell_key(int cx, int cy, int cz) const {
  return (static_cast<std::int64_t>(cz) * cells_y_ + cy) * cells_x_ + cx;
}

void NeuralGrid::rebuild_index() {
  buckets_.clear();
  for (const auto& [id, p] : payloads_) {
    const int cx = cell_coord(p.position.x, bounds_.lo.x);
    const int cy = cell_coord(p.position.y, bounds_.lo.y);
    const int cz = cell_coord(p.position.z, bounds_.lo.z);
    buckets_[cell_key(cx, cy, cz)].push_back(id);
  }
}

PayloadId NeuralGrid::deposit(TransArchPayload payload) {
  if (!bounds_.contains(payload.position)) {
    throw InputError("payload position (" + std::to_string(payload.position.x) + "," +
                     std::to_string(payload.position.y) + "," +
                     std::to_string(payload.position.z) + ") lies outside the grid bounds");
  }
  if (!(payload.magnitude > 0.0) || !std::isfinite(payload.magnitude)) {
    throw InputError("payload magnitude must be finite and > 0");
  }
  if (payload.ttl < 0) throw InputError("payload ttl must be >= 0");
  payload.id = next_id_++;
  staged_.push_back(std::move(payload));
  return staged_.back().id;
}

void NeuralGrid::stage_removal(PayloadId id) { staged_removals_.push_back(id); }

CommitStats NeuralGrid::commit() {
  CommitStats stats;
  for (PayloadId id : staged_removals_) stats.removed += payloads_.erase(id);
  for (auto& p : staged_) {
    payloads_.emplace(p.id, std::move(p));
    ++stats.added;
  }
  staged_.clear();
  staged_removals_.clear();
  rebuild_index();
  return stats;
}

std::vector<const TransArchPayload*> NeuralGrid::query_radius(const Vec3& center,
                                                              double r) const {
  std::vector<std::pair<double, const TransArchPayload*>> hits;
  if (payloads_.empty() || r < 0.0) return {};
  const double r2 = r * r;

  const auto range = [&](double c, double lo, int n) {
    const int a = std::max(0, cell_coord(c - r, lo));
    const int b = std::min(n - 1, cell_coord(c + r, lo));
    return std::pair<int, int>{a, b};
  };
  const auto [x0, x1] = range(center.x, bounds_.lo.x, cells_x_);
  const auto [y0, y1] = range(center.y, bounds_.lo.y, cells_y_);
  const auto [z0, z1] = range(center.z, bounds_.lo.z, cells_z_);
  const auto span_cells = static_cast<std::int64_t>(std::max(0, x1 - x0 + 1)) *
                          std::max(0, y1 - y0 + 1) * std::max(0, z1 - z0 + 1);

  auto consider = [&](const TransArchPayload& p) {
    const double d2 = distance_sq(center, p.position);
    if (d2 <= r2) hits.emplace_back(d2, &p);
  };
  if (span_cells > static_cast<std::int64_t>(payloads_.size())) {
    for (const auto& [id, p] : payloads_) consider(p);
  } else {
    for (int cz = z0; cz <= z1; ++cz)
      for (int cy = y0; cy <= y1; ++cy)
        for (int cx = x0; cx <= x1; ++cx) {
          const auto it = buckets_.find(cell_key(cx, cy, cz));
          if (it == buckets_.end()) continue;
          for (PayloadId id : it->second) consider(payloads_.at(id));
        }
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second->id < b.second->id;
  });
  std::vector<const TransArchPayload*> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

namespace {

void gather_index(const std::map<PayloadId, TransArchPayload>& payloads, int index,
                  std::vector<Vec3>& pos, std::vector<double>& mag) {
  for (const auto& [id, p] : payloads) {
    if (p.index != index) continue;
    pos.push_back(p.position);
    mag.push_back(p.magnitude);
  }
}

}  // namespace

double NeuralGrid::density(const Vec3& pos, int index, double sigma) const {
  std::vector<Vec3> positions;
  std::vector<double> magnitudes;
  gather_index(payloads_, index, positions, magnitudes);
  return kernels::density(positions, magnitudes, pos, sigma);
}

Vec3 NeuralGrid::density_gradient(const Vec3& pos, int index, double sigma) const {
  std::vector<Vec3> positions;
  std::vector<double> magnitudes;
  gather_index(payloads_, index, positions, magnitudes);
  return kernels::density_gradient(positions, magnitudes, pos, sigma);
}

std::size_t NeuralGrid::decay_and_expire(double decay_factor, double epsilon_magnitude) {
  std::size_t removed = 0;
  for (auto it = payloads_.begin(); it != payloads_.end();) {
    auto& p = it->second;
    p.magnitude *= decay_factor;
    p.ttl -= 1;
    if (p.ttl < 0 || p.magnitude < epsilon_magnitude) {
      it = payloads_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  rebuild_index();
  return removed;
}

void NeuralGrid::restore(std::vector<TransArchPayload> payloads, PayloadId next_id) {
  payloads_.clear();
  staged_.clear();
  staged_removals_.clear();
  for (auto& p : payloads) {
    if (!bounds_.contains(p.position)) throw LoadError("saved payload lies outside grid bounds");
    payloads_.emplace(p.id, std::move(p));
  }
  next_id_ = next_id;
  rebuild_index();
}

}  // namespace eden
