#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eden/rng.hpp"
#include "eden/types.hpp"

// Currently Expressed Model: the propagation/weight/router lattices of one
// process node and the pass that pushes deposited energy through them.
namespace eden::cem {

// Forward fan-out from a cell to one of the 3x3 cells of the next plane.
// Center is the direct route.
enum class RouterOption : std::uint8_t {
  SouthWest = 0, South, SouthEast,
  West, Center, East,
  NorthWest, North, NorthEast,
};

inline constexpr int kRouterOptionCount = 9;

constexpr int router_dx(RouterOption r) { return static_cast<int>(r) % 3 - 1; }
constexpr int router_dy(RouterOption r) { return static_cast<int>(r) / 3 - 1; }

struct CellIndex {
  int x = 0;
  int y = 0;
  int z = 0;
  bool operator==(const CellIndex&) const = default;
  auto operator<=>(const CellIndex&) const = default;
};

// X x Y x Z lattices (X == Y) stored plane-major: a z-plane is contiguous.
class PwrTensor {
 public:
  PwrTensor() : PwrTensor(1, 1) {}
  PwrTensor(int dim_xy, int dim_z);

  int dim_xy() const { return dim_xy_; }
  int dim_z() const { return dim_z_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(dim_xy_) * dim_xy_; }
  std::size_t size() const { return plane_size() * static_cast<std::size_t>(dim_z_); }

  bool in_plane(int x, int y) const { return x >= 0 && y >= 0 && x < dim_xy_ && y < dim_xy_; }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dim_xy_ + static_cast<std::size_t>(y)) * dim_xy_ +
           static_cast<std::size_t>(x);
  }
  CellIndex cell(std::size_t flat) const;

  double p(int x, int y, int z) const { return p_[index(x, y, z)]; }
  double w(int x, int y, int z) const { return w_[index(x, y, z)]; }
  RouterOption r(int x, int y, int z) const { return r_[index(x, y, z)]; }

  void set_p(int x, int y, int z, double v);
  // Throws std::invalid_argument unless 0 <= v <= 1.
  void set_w(int x, int y, int z, double v);
  void set_r(int x, int y, int z, RouterOption v) { r_[index(x, y, z)] = v; }

  void fill_w(double v);
  void fill_r(RouterOption v);
  void randomize(Rng& rng);

  std::span<const double> p_plane(int z) const;
  std::span<double> p_plane(int z);
  std::span<const double> w_plane(int z) const;
  std::span<const RouterOption> r_plane(int z) const;

  std::span<const double> p_data() const { return p_; }
  std::span<double> p_data() { return p_; }
  std::span<const double> w_data() const { return w_; }
  std::span<double> w_data() { return w_; }
  std::span<const RouterOption> r_data() const { return r_; }
  std::span<RouterOption> r_data() { return r_; }

  const std::vector<double>& plane_energy() const { return plane_energy_; }
  std::vector<double>& plane_energy() { return plane_energy_; }

  // Cells that carried energy this epoch without taking part in a spike.
  const std::vector<std::uint8_t>& stale_mask() const { return stale_; }
  std::vector<std::uint8_t>& stale_mask() { return stale_; }

  bool operator==(const PwrTensor&) const = default;

 private:
  int dim_xy_;
  int dim_z_;
  std::vector<double> p_;
  std::vector<double> w_;
  std::vector<RouterOption> r_;
  std::vector<double> plane_energy_;
  std::vector<std::uint8_t> stale_;
};

struct CemParams {
  double min_e = 4.0;
  double dr = 0.05;
  double at_mod = 1.0;
};

// Throws ConfigError listing every violated range.
void validate(const CemParams& params);

struct Deposit {
  int x = 0;
  int y = 0;
  double magnitude = 0.0;
  std::string source;  // names the dendrite/probe in error messages
};

struct SpikeEvent {
  int z_index = 0;
  double plane_energy = 0.0;
  std::int64_t epoch = 0;
  NodeId node_id = 0;
  bool operator==(const SpikeEvent&) const = default;
};

struct GoalPlane {
  int z_index = 0;
  std::vector<double> target_p;  // dim_xy * dim_xy, row-major (y, x)
  bool operator==(const GoalPlane&) const = default;
};

// What one forward pass did: the p lattice of every traversed plane and, for
// each source cell, which cell of the next plane it fed (-1 when idle).
struct PropagationTrace {
  int dim_xy = 0;
  int last_plane = -1;
  double dr = 0.0;
  std::vector<double> p;         // planes 0..last_plane
  std::vector<std::int32_t> route;  // planes 0..last_plane-1, in-plane target index
};

double transfer(double p_val, double w_val, double dr);

// PE_z = at_mod * PE_{z-1} + sum of plane z, PE_{-1} = 0. Stored in the
// tensor's plane-energy accumulator.
double accumulate_plane_energy(PwrTensor& cem, int z, double at_mod);

std::optional<SpikeEvent> forward_propagate(PwrTensor& cem, std::span<const Deposit> deposits,
                                            const CemParams& params,
                                            PropagationTrace* trace = nullptr);

std::vector<CellIndex> update_routers_on_spike(PwrTensor& cem, const SpikeEvent& spike);

std::size_t randomize_stale_routers(PwrTensor& cem, Rng& rng);

void reset_propagation(PwrTensor& cem);

// Squared error at the goal plane and its gradient with respect to every
// weight, following the routes recorded in the trace. Weights the loss does not
// depend on get 0.
struct GoalGradient {
  double loss = 0.0;
  std::vector<double> dw;
};
GoalGradient goal_gradient(const PwrTensor& cem, const GoalPlane& goal,
                           const PropagationTrace& trace);

// One SGD step toward the goal; weights are clamped into [0, 1]. Returns the
// loss before the step.
double backprop_to_goal(PwrTensor& cem, const GoalPlane& goal, const PropagationTrace& trace,
                        double learning_rate);

GoalPlane goal_from_plane(const PwrTensor& cem, int z);

}  // namespace eden::cem
