#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>

#include "eden/cem.hpp"
#include "eden/types.hpp"

// OpenMP data-parallel kernels behind the CEM pass and the grid density field.
// Each kernel fixes its floating-point summation order so the result is
// bit-identical to the serial versions in eden/reference.hpp for any thread
// count.
namespace eden::kernels {

// Planes smaller than this run single-threaded.
inline constexpr std::size_t kParallelPlaneCells = 4096;
inline constexpr std::size_t kParallelPayloads = 2048;

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Row partial sums, then rows added in ascending y.
double plane_sum(std::span<const double> plane, int dim);

inline int route_target(int x, int y, cem::RouterOption r, int dim) {
  const int tx = std::clamp(x + cem::router_dx(r), 0, dim - 1);
  const int ty = std::clamp(y + cem::router_dy(r), 0, dim - 1);
  return ty * dim + tx;
}

// Sends transfer(p, w, dr) from every source cell with p > 0 into the routed
// cell of dst (accumulating onto what dst already holds). route_out receives
// the in-plane target index per source cell, -1 for idle cells. Contributions
// into one destination are added in ascending source order.
void route_plane(std::span<const double> p_src, std::span<const double> w_src,
                 std::span<const cem::RouterOption> r_src, std::span<double> p_dst,
                 std::span<std::int32_t> route_out, int dim, double dr);

// Gaussian kernel density sum_i m_i exp(-|pos - x_i|^2 / (2 sigma^2)) and its
// gradient; contributions summed in input order.
double density(std::span<const Vec3> positions, std::span<const double> magnitudes,
               const Vec3& pos, double sigma);
Vec3 density_gradient(std::span<const Vec3> positions, std::span<const double> magnitudes,
                      const Vec3& pos, double sigma);

}  // namespace eden::kernels
