#include "eden/cem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eden/kernels.hpp"

namespace eden::cem {

PwrTensor::PwrTensor(int dim_xy, int dim_z) : dim_xy_(dim_xy), dim_z_(dim_z) {
  if (dim_xy < 1 || dim_z < 1) {
    throw ConfigError({"tensor dimensions must be >= 1 (got dim_xy=" + std::to_string(dim_xy) +
                       ", dim_z=" + std::to_string(dim_z) + ")"});
  }
  p_.assign(size(), 0.0);
  w_.assign(size(), 0.0);
  r_.assign(size(), RouterOption::Center);
  plane_energy_.assign(static_cast<std::size_t>(dim_z_), 0.0);
  stale_.assign(size(), 0);
}

CellIndex PwrTensor::cell(std::size_t flat) const {
  const auto ps = plane_size();
  const auto in_plane = flat % ps;
  return {static_cast<int>(in_plane % static_cast<std::size_t>(dim_xy_)),
          static_cast<int>(in_plane / static_cast<std::size_t>(dim_xy_)),
          static_cast<int>(flat / ps)};
}

void PwrTensor::set_p(int x, int y, int z, double v) {
  if (!(v >= 0.0)) throw std::invalid_argument("propagation energy must be >= 0");
  p_[index(x, y, z)] = v;
}

void PwrTensor::set_w(int x, int y, int z, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("weight must lie in [0,1]");
  w_[index(x, y, z)] = v;
}

void PwrTensor::fill_w(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("weight must lie in [0,1]");
  std::fill(w_.begin(), w_.end(), v);
}

void PwrTensor::fill_r(RouterOption v) { std::fill(r_.begin(), r_.end(), v); }

void PwrTensor::randomize(Rng& rng) {
  for (auto& w : w_) w = rng.uniform01();
  for (auto& r : r_) r = static_cast<RouterOption>(rng.below(kRouterOptionCount));
}

std::span<const double> PwrTensor::p_plane(int z) const {
  return std::span<const double>(p_).subspan(static_cast<std::size_t>(z) * plane_size(),
                                             plane_size());
}
std::span<double> PwrTensor::p_plane(int z) {
  return std::span<double>(p_).subspan(static_cast<std::size_t>(z) * plane_size(), plane_size());
}
std::span<const double> PwrTensor::w_plane(int z) const {
  return std::span<const double>(w_).subspan(static_cast<std::size_t>(z) * plane_size(),
                                             plane_size());
}
std::span<const RouterOption> PwrTensor::r_plane(int z) const {
  return std::span<const RouterOption>(r_).subspan(static_cast<std::size_t>(z) * plane_size(),
                                                   plane_size());
}

void validate(const CemParams& params) {
  std::vector<std::string> v;
  if (!(params.min_e > 0.0)) v.emplace_back("min_e must be > 0");
  if (!(params.dr >= 0.0 && params.dr < 0.5)) v.emplace_back("dr must lie in [0, 0.5)");
  if (!(params.at_mod >= 0.0) || !std::isfinite(params.at_mod)) {
    v.emplace_back("at_mod must be finite and >= 0");
  }
  if (!v.empty()) throw ConfigError(std::move(v));
}

double transfer(double p_val, double w_val, double dr) {
  return std::max(0.0, kernels::sigmoid(p_val * w_val) - dr);
}

double accumulate_plane_energy(PwrTensor& cem, int z, double at_mod) {
  if (z < 0 || z >= cem.dim_z()) {
    throw IndexError("plane index " + std::to_string(z) + " outside [0, " +
                     std::to_string(cem.dim_z()) + ")");
  }
  const double prev = z == 0 ? 0.0 : cem.plane_energy()[static_cast<std::size_t>(z - 1)];
  const double pe = at_mod * prev + kernels::plane_sum(cem.p_plane(z), cem.dim_xy());
  cem.plane_energy()[static_cast<std::size_t>(z)] = pe;
  return pe;
}

std::optional<SpikeEvent> forward_propagate(PwrTensor& cem, std::span<const Deposit> deposits,
                                            const CemParams& params, PropagationTrace* trace) {
  for (const auto& d : deposits) {
    if (!cem.in_plane(d.x, d.y)) {
      throw InputError("deposit from " + (d.source.empty() ? std::string("<unnamed>") : d.source) +
                       " at (" + std::to_string(d.x) + "," + std::to_string(d.y) +
                       ") lies outside the " + std::to_string(cem.dim_xy()) + "x" +
                       std::to_string(cem.dim_xy()) + " entry plane");
    }
  }
  for (const auto& d : deposits) {
    const auto i = cem.index(d.x, d.y, 0);
    cem.p_data()[i] = std::max(0.0, cem.p_data()[i] + d.magnitude);
  }

  const int dim = cem.dim_xy();
  const std::size_t ps = cem.plane_size();
  std::vector<std::int32_t> route(ps);
  if (trace) {
    trace->dim_xy = dim;
    trace->dr = params.dr;
    trace->p.clear();
    trace->route.clear();
    trace->last_plane = -1;
  }

  // An empty lattice cannot spike or route; produce the same outcome as the
  // full pass without walking the planes.
  if (deposits.empty() && std::all_of(cem.p_data().begin(), cem.p_data().end(),
                                      [](double v) { return v == 0.0; })) {
    std::fill(cem.plane_energy().begin(), cem.plane_energy().end(), 0.0);
    if (trace) {
      trace->p.assign(cem.size(), 0.0);
      trace->route.assign(cem.size() - ps, -1);
      trace->last_plane = cem.dim_z() - 1;
    }
    return std::nullopt;
  }

  auto& stale = cem.stale_mask();
  for (int z = 0; z < cem.dim_z(); ++z) {
    const double pe = accumulate_plane_energy(cem, z, params.at_mod);
    const auto plane = cem.p_plane(z);
    for (std::size_t i = 0; i < ps; ++i) {
      if (plane[i] > 0.0) stale[static_cast<std::size_t>(z) * ps + i] = 1;
    }
    if (trace) {
      trace->p.insert(trace->p.end(), plane.begin(), plane.end());
      trace->last_plane = z;
    }
    if (pe >= params.min_e) {
      // Everything upstream of the spike took part in it.
      std::fill(stale.begin(), stale.begin() + static_cast<std::ptrdiff_t>((z + 1) * ps), 0);
      return SpikeEvent{z, pe, 0, 0};
    }
    if (z + 1 < cem.dim_z()) {
      kernels::route_plane(plane, cem.w_plane(z), cem.r_plane(z), cem.p_plane(z + 1), route, dim,
                           params.dr);
      if (trace) trace->route.insert(trace->route.end(), route.begin(), route.end());
    }
  }
  return std::nullopt;
}

std::vector<CellIndex> update_routers_on_spike(PwrTensor& cem, const SpikeEvent& spike) {
  std::vector<CellIndex> rewired;
  const int dim = cem.dim_xy();
  for (int z = 0; z < spike.z_index && z < cem.dim_z(); ++z) {
    for (int y = 0; y < dim; ++y) {
      for (int x = 0; x < dim; ++x) {
        if (cem.p(x, y, z) > 0.0) {
          cem.set_r(x, y, z, RouterOption::Center);
          rewired.push_back({x, y, z});
        }
      }
    }
  }
  return rewired;
}

std::size_t randomize_stale_routers(PwrTensor& cem, Rng& rng) {
  std::size_t count = 0;
  auto& stale = cem.stale_mask();
  auto routers = cem.r_data();
  for (std::size_t i = 0; i < stale.size(); ++i) {
    if (!stale[i]) continue;
    routers[i] = static_cast<RouterOption>(rng.below(kRouterOptionCount));
    stale[i] = 0;
    ++count;
  }
  return count;
}

void reset_propagation(PwrTensor& cem) {
  std::fill(cem.p_data().begin(), cem.p_data().end(), 0.0);
  std::fill(cem.plane_energy().begin(), cem.plane_energy().end(), 0.0);
}

GoalGradient goal_gradient(const PwrTensor& cem, const GoalPlane& goal,
                           const PropagationTrace& trace) {
  const int dim = cem.dim_xy();
  const std::size_t ps = cem.plane_size();
  if (trace.dim_xy != dim || goal.target_p.size() != ps) {
    throw StructuralError("goal plane is " + std::to_string(goal.target_p.size()) +
                          " cells but the tensor plane has " + std::to_string(ps));
  }
  if (goal.z_index < 0 || goal.z_index > trace.last_plane) {
    throw StructuralError("goal plane " + std::to_string(goal.z_index) +
                          " was not reached by the recorded pass (last plane " +
                          std::to_string(trace.last_plane) + ")");
  }

  GoalGradient out;
  out.dw.assign(cem.size(), 0.0);

  const auto gz = static_cast<std::size_t>(goal.z_index);
  std::vector<double> grad(ps);
  for (std::size_t i = 0; i < ps; ++i) {
    const double diff = trace.p[gz * ps + i] - goal.target_p[i];
    out.loss += 0.5 * diff * diff;
    grad[i] = diff;
  }

  const auto w = cem.w_data();
  std::vector<double> upstream(ps);
  for (int z = goal.z_index - 1; z >= 0; --z) {
    const auto zs = static_cast<std::size_t>(z);
    std::fill(upstream.begin(), upstream.end(), 0.0);
    for (std::size_t i = 0; i < ps; ++i) {
      const std::int32_t t = trace.route[zs * ps + i];
      if (t < 0) continue;
      const double g = grad[static_cast<std::size_t>(t)];
      const double p = trace.p[zs * ps + i];
      const double wi = w[zs * ps + i];
      const double s = kernels::sigmoid(p * wi);
      if (s - trace.dr <= 0.0) continue;  // clamped output carries no gradient
      const double ds = s * (1.0 - s);
      out.dw[zs * ps + i] = g * ds * p;
      upstream[i] = g * ds * wi;
    }
    grad.swap(upstream);
  }
  return out;
}

double backprop_to_goal(PwrTensor& cem, const GoalPlane& goal, const PropagationTrace& trace,
                        double learning_rate) {
  const auto g = goal_gradient(cem, goal, trace);
  if (learning_rate == 0.0) return g.loss;
  auto w = cem.w_data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (g.dw[i] == 0.0) continue;
    w[i] = std::clamp(w[i] - learning_rate * g.dw[i], 0.0, 1.0);
  }
  return g.loss;
}

GoalPlane goal_from_plane(const PwrTensor& cem, int z) {
  const auto plane = cem.p_plane(z);
  return GoalPlane{z, std::vector<double>(plane.begin(), plane.end())};
}

}  // namespace eden::cem
