#include <algorithm>

#include "doctest.h"
#include "eden/grid.hpp"
#include "eden/rng.hpp"
#include "oracles.hpp"

using namespace eden;

namespace {

TransArchPayload transmitter(Vec3 at, int index = 0, double magnitude = 1.0, int ttl = 3) {
  TransArchPayload p;
  p.kind = PayloadKind::Transmitter;
  p.index = index;
  p.position = at;
  p.magnitude = magnitude;
  p.ttl = ttl;
  p.properties[kExcitatoryProperty] = 1.0;
  return p;
}

}  // namespace

TEST_CASE("deposit is invisible until commit") {
  NeuralGrid g;
  g.deposit(transmitter({1, 1, 1}));
  CHECK(g.query_radius({1, 1, 1}, 0.1).empty());
  const auto stats = g.commit();
  CHECK(stats.added == 1);
  CHECK(g.query_radius({1, 1, 1}, 0.1).size() == 1);
}

TEST_CASE("out-of-bounds deposit is rejected and leaves the grid unchanged") {
  NeuralGrid g;
  CHECK_THROWS_AS(g.deposit(transmitter({9, 1, 1})), InputError);
  CHECK(g.pending_additions() == 0);
  g.commit();
  CHECK(g.size() == 0);
  CHECK_THROWS_AS(g.deposit(transmitter({1, 1, 1}, 0, 0.0)), InputError);
}

TEST_CASE("query_radius basics") {
  NeuralGrid g;
  CHECK(g.query_radius({4, 4, 4}, 3.0).empty());
  g.deposit(transmitter({3, 1, 1}));
  g.commit();
  CHECK(g.query_radius({1, 1, 1}, 1.0).empty());
  CHECK(g.query_radius({1, 1, 1}, 2.0).size() == 1);
}

TEST_CASE("query_radius orders by distance then id") {
  NeuralGrid g;
  const auto far = g.deposit(transmitter({2, 0, 0}));
  const auto a = g.deposit(transmitter({1, 0, 0}));
  const auto b = g.deposit(transmitter({0, 1, 0}));
  g.commit();
  const auto hits = g.query_radius({0, 0, 0}, 5.0);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0]->id == a);
  CHECK(hits[1]->id == b);
  CHECK(hits[2]->id == far);
}

TEST_CASE("query_radius equals a linear scan on random instances") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const double cell = rng.uniform(0.3, 3.0);
    NeuralGrid g(Box{{0, 0, 0}, {8, 8, 8}}, cell);
    std::vector<TransArchPayload> all;
    for (int i = 0; i < 100; ++i) {
      g.deposit(transmitter({rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, 8)}));
    }
    g.commit();
    const Vec3 c{rng.uniform(-1, 9), rng.uniform(-1, 9), rng.uniform(-1, 9)};
    const double r = rng.uniform(0.0, 6.0);
    std::vector<std::pair<double, PayloadId>> expect;
    for (const auto& [id, p] : g.payloads()) {
      const double d2 = distance_sq(c, p.position);
      if (d2 <= r * r) expect.emplace_back(d2, id);
    }
    std::sort(expect.begin(), expect.end());
    const auto got = g.query_radius(c, r);
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i]->id == expect[i].second);
  }
}

TEST_CASE("repeated queries between commits agree") {
  NeuralGrid g;
  Rng rng(4);
  for (int i = 0; i < 50; ++i) g.deposit(transmitter({rng.uniform(0, 8), rng.uniform(0, 8), 1}));
  g.commit();
  const auto first = g.query_radius({4, 4, 1}, 2.5);
  g.deposit(transmitter({4, 4, 1}));  // staged only
  CHECK(g.query_radius({4, 4, 1}, 2.5) == first);
}

TEST_CASE("density_gradient examples") {
  NeuralGrid g;
  CHECK(g.density_gradient({4, 4, 4}, 2, 1.0) == Vec3{0, 0, 0});
  g.deposit(transmitter({4, 4, 4}, 2));
  g.commit();
  CHECK(g.density_gradient({4, 4, 4}, 2, 1.0) == Vec3{0, 0, 0});
  const auto grad = g.density_gradient({3, 4, 4}, 2, 1.0);
  CHECK(grad.x > 0.0);
  CHECK(g.density_gradient({3, 4, 4}, 5, 1.0) == Vec3{0, 0, 0});
}

TEST_CASE("density_gradient matches finite differences of the field") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    NeuralGrid g;
    std::vector<oracle::Point> pts;
    std::vector<double> mags;
    const int n = 1 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n; ++i) {
      const Vec3 at{rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, 8)};
      const double m = rng.uniform(0.1, 3.0);
      g.deposit(transmitter(at, 1, m));
      pts.push_back({at.x, at.y, at.z});
      mags.push_back(m);
    }
    g.deposit(transmitter({1, 1, 1}, 9, 5.0));  // other index, must be ignored
    g.commit();
    const double sigma = rng.uniform(0.5, 2.0);
    const Vec3 at{rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, 8)};
    const auto an = g.density_gradient(at, 1, sigma);
    const auto fd = oracle::field_gradient_fd(pts, mags, {at.x, at.y, at.z}, sigma);
    CHECK(std::abs(an.x - fd.x) < 1e-6);
    CHECK(std::abs(an.y - fd.y) < 1e-6);
    CHECK(std::abs(an.z - fd.z) < 1e-6);
    CHECK(g.density(at, 1, sigma) == doctest::Approx(oracle::field(pts, mags, {at.x, at.y, at.z}, sigma)));
  }
}

TEST_CASE("decay_and_expire examples") {
  SUBCASE("ttl 0 expires after one call") {
    NeuralGrid g;
    g.deposit(transmitter({1, 1, 1}, 0, 1.0, 0));
    g.commit();
    CHECK(g.decay_and_expire(0.9, 1e-3) == 1);
    CHECK(g.size() == 0);
  }
  SUBCASE("magnitude scales") {
    NeuralGrid g;
    g.deposit(transmitter({1, 1, 1}, 0, 2.0, 5));
    g.commit();
    CHECK(g.decay_and_expire(0.5, 1e-3) == 0);
    CHECK(g.payloads().begin()->second.magnitude == 1.0);
    CHECK(g.payloads().begin()->second.ttl == 4);
  }
  SUBCASE("no decay and long ttl removes nothing") {
    NeuralGrid g;
    for (int i = 0; i < 5; ++i) g.deposit(transmitter({1.0 * i, 1, 1}, 0, 1.0, 1000));
    g.commit();
    CHECK(g.decay_and_expire(1.0, 1e-3) == 0);
    CHECK(g.size() == 5);
  }
  SUBCASE("tiny magnitudes are removed") {
    NeuralGrid g;
    g.deposit(transmitter({1, 1, 1}, 0, 0.0015, 10));
    g.commit();
    CHECK(g.decay_and_expire(0.5, 1e-3) == 1);
  }
}

TEST_CASE("conservation across commits") {
  Rng rng(31);
  NeuralGrid g;
  std::size_t expected = 0;
  for (int round = 0; round < 50; ++round) {
    const auto adds = rng.below(6);
    for (std::size_t i = 0; i < adds; ++i) {
      g.deposit(transmitter({rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, 8)}, 0, 1.0, 2));
    }
    std::size_t removals = 0;
    for (const auto& [id, p] : g.payloads()) {
      if (rng.chance(0.3)) {
        g.stage_removal(id);
        g.stage_removal(id);  // a second claim must not remove twice
        ++removals;
      }
    }
    const auto stats = g.commit();
    CHECK(stats.removed == removals);
    const auto expired = g.decay_and_expire(0.9, 1e-3);
    expected = expected + adds - removals - expired;
    CHECK(g.size() == expected);
  }
}
