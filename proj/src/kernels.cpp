#include "eden/kernels.hpp"

#include <vector>

namespace eden::kernels {

double plane_sum(std::span<const double> plane, int dim) {
  std::vector<double> rows(static_cast<std::size_t>(dim), 0.0);
  const bool parallel = plane.size() >= kParallelPlaneCells;
#pragma omp parallel for schedule(static) if (parallel)
  for (int y = 0; y < dim; ++y) {
    double row = 0.0;
    const double* base = plane.data() + static_cast<std::size_t>(y) * dim;
    for (int x = 0; x < dim; ++x) row += base[x];
    rows[static_cast<std::size_t>(y)] = row;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

void route_plane(std::span<const double> p_src, std::span<const double> w_src,
                 std::span<const cem::RouterOption> r_src, std::span<double> p_dst,
                 std::span<std::int32_t> route_out, int dim, double dr) {
  const std::size_t cells = static_cast<std::size_t>(dim) * dim;
  const bool parallel = cells >= kParallelPlaneCells;
  std::vector<double> out(cells, 0.0);

  // Pass 1: each source decides its target and contribution independently.
#pragma omp parallel for schedule(static) if (parallel)
  for (int y = 0; y < dim; ++y) {
    for (int x = 0; x < dim; ++x) {
      const auto i = static_cast<std::size_t>(y * dim + x);
      if (!(p_src[i] > 0.0)) {
        route_out[i] = -1;
        continue;
      }
      route_out[i] = route_target(x, y, r_src[i], dim);
      out[i] = std::max(0.0, sigmoid(p_src[i] * w_src[i]) - dr);
    }
  }

  // Pass 2: gather. Every source lies within one cell of its target, so the
  // 3x3 neighbourhood in ascending (y, x) reproduces the scatter order.
#pragma omp parallel for schedule(static) if (parallel)
  for (int ty = 0; ty < dim; ++ty) {
    for (int tx = 0; tx < dim; ++tx) {
      const int t = ty * dim + tx;
      double acc = p_dst[static_cast<std::size_t>(t)];
      for (int sy = std::max(0, ty - 1); sy <= std::min(dim - 1, ty + 1); ++sy) {
        for (int sx = std::max(0, tx - 1); sx <= std::min(dim - 1, tx + 1); ++sx) {
          const auto s = static_cast<std::size_t>(sy * dim + sx);
          if (route_out[s] == t) acc += out[s];
        }
      }
      p_dst[static_cast<std::size_t>(t)] = acc;
    }
  }
}

double density(std::span<const Vec3> positions, std::span<const double> magnitudes,
               const Vec3& pos, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const std::size_t n = positions.size();
  std::vector<double> terms(n);
#pragma omp parallel for schedule(static) if (n >= kParallelPayloads)
  for (std::size_t i = 0; i < n; ++i) {
    terms[i] = magnitudes[i] * std::exp(-distance_sq(pos, positions[i]) * inv);
  }
  double f = 0.0;
  for (double t : terms) f += t;
  return f;
}

Vec3 density_gradient(std::span<const Vec3> positions, std::span<const double> magnitudes,
                      const Vec3& pos, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const double inv_s2 = 1.0 / (sigma * sigma);
  const std::size_t n = positions.size();
  std::vector<Vec3> terms(n);
#pragma omp parallel for schedule(static) if (n >= kParallelPayloads)
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = positions[i] - pos;
    const double k = magnitudes[i] * std::exp(-d.norm_sq() * inv) * inv_s2;
    terms[i] = d * k;
  }
  Vec3 g;
  for (const auto& t : terms) g = g + t;
  return g;
}

}  // namespace eden::kernels
