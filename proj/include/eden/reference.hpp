#pragma once

#include <cstdint>
#include <span>

#include "eden/cem.hpp"
#include "eden/types.hpp"

// Plain serial implementations of the kernels in eden/kernels.hpp. The engine
// never calls these; tests hold the parallel kernels bit-identical to them and
// the benchmark compares the two.
namespace eden::reference {

double plane_sum(std::span<const double> plane, int dim);

// Scatter formulation: walk sources in order, add into the routed target.
void route_plane(std::span<const double> p_src, std::span<const double> w_src,
                 std::span<const cem::RouterOption> r_src, std::span<double> p_dst,
                 std::span<std::int32_t> route_out, int dim, double dr);

double density(std::span<const Vec3> positions, std::span<const double> magnitudes,
               const Vec3& pos, double sigma);
Vec3 density_gradient(std::span<const Vec3> positions, std::span<const double> magnitudes,
                      const Vec3& pos, double sigma);

}  // namespace eden::reference
