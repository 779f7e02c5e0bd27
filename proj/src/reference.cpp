#include "eden/reference.hpp"

#include <algorithm>
#include <cmath>

namespace eden::reference {

double plane_sum(std::span<const double> plane, int dim) {
  double total = 0.0;
  for (int y = 0; y < dim; ++y) {
    double row = 0.0;
    for (int x = 0; x < dim; ++x) row += plane[static_cast<std::size_t>(y * dim + x)];
    total += row;
  }
  return total;
}

void route_plane(std::span<const double> p_src, std::span<const double> w_src,
                 std::span<const cem::RouterOption> r_src, std::span<double> p_dst,
                 std::span<std::int32_t> route_out, int dim, double dr) {
  for (int y = 0; y < dim; ++y) {
    for (int x = 0; x < dim; ++x) {
      const auto i = static_cast<std::size_t>(y * dim + x);
      if (!(p_src[i] > 0.0)) {
        route_out[i] = -1;
        continue;
      }
      const auto r = r_src[i];
      const int tx = std::clamp(x + cem::router_dx(r), 0, dim - 1);
      const int ty = std::clamp(y + cem::router_dy(r), 0, dim - 1);
      const int t = ty * dim + tx;
      route_out[i] = t;
      const double s = 1.0 / (1.0 + std::exp(-(p_src[i] * w_src[i])));
      p_dst[static_cast<std::size_t>(t)] += std::max(0.0, s - dr);
    }
  }
}

double density(std::span<const Vec3> positions, std::span<const double> magnitudes,
               const Vec3& pos, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double f = 0.0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    f += magnitudes[i] * std::exp(-distance_sq(pos, positions[i]) * inv);
  }
  return f;
}

Vec3 density_gradient(std::span<const Vec3> positions, std::span<const double> magnitudes,
                      const Vec3& pos, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const double inv_s2 = 1.0 / (sigma * sigma);
  Vec3 g;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Vec3 d = positions[i] - pos;
    const double k = magnitudes[i] * std::exp(-d.norm_sq() * inv) * inv_s2;
    g = g + d * k;
  }
  return g;
}

}  // namespace eden::reference
