// Runs every acceptance criterion and prints one PASS/FAIL line for each.
//
// Exit status is 0 when the set of failing criteria equals the set named by
// --expect-fail (empty by default), so a known and documented failure stays
// visible without masking regressions elsewhere.

#include <omp.h>
#include <spdlog/spdlog.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "eden/cem.hpp"
#include "eden/grid.hpp"
#include "eden/session_store.hpp"
#include "oracles.hpp"

using namespace eden;
using namespace eden::cem;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int precision = 3) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

oracle::Lattice to_lattice(const PwrTensor& t) {
  oracle::Lattice L(t.dim_xy(), t.dim_z());
  for (int z = 0; z < t.dim_z(); ++z)
    for (int y = 0; y < t.dim_xy(); ++y)
      for (int x = 0; x < t.dim_xy(); ++x) {
        L.w[z][y][x] = t.w(x, y, z);
        L.r[z][y][x] = static_cast<int>(t.r(x, y, z));
      }
  return L;
}

PwrTensor straight_tensor(int dim, int depth) {
  PwrTensor t(dim, depth);
  t.fill_w(1.0);
  t.fill_r(RouterOption::Center);
  return t;
}

InputProbe repeating_probe(Vec3 at, double magnitude) {
  InputProbe p;
  p.position = at;
  ProbeFrame f;
  for (int i = 0; i < 4; ++i) f.payloads.push_back({{0, 0, 0}, i, magnitude});
  p.frames = {f};
  return p;
}

Entity probed_entity(std::uint64_t seed, int dim_xy, int dim_z, int nodes) {
  EngineConfig c;
  c.seed = seed;
  c.dim_xy = dim_xy;
  c.dim_z = dim_z;
  c.initial_nodes = nodes;
  auto e = seed_entity(c);
  auto p = repeating_probe({4, 4, 4}, 2.0);
  p.id = e.next_probe_id++;
  e.input_probes.push_back(p);
  return e;
}

// 1. transfer against the closed form.
Outcome transfer_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform(0.0, 20.0);
    const double w = rng.uniform01();
    const double dr = rng.uniform(0.0, 0.5);
    const double expect = std::max(0.0, 1.0 / (1.0 + std::exp(-p * w)) - dr);
    worst = std::max(worst, std::abs(transfer(p, w, dr) - expect));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 1.0,
          "max abs error " + num(worst) + " over 10^4 triples in " + num(secs) + " s"};
}

// 2. backprop_to_goal gradients against central differences.
Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  const long double h = 1e-6L;
  double worst_rel = 0.0;
  double worst_small = 0.0;
  std::size_t compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(rng.below(4));
    const int depth = 2 + static_cast<int>(rng.below(3));
    PwrTensor t(dim, depth);
    t.randomize(rng);
    std::vector<Deposit> deposits;
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < n; ++k) {
      deposits.push_back({static_cast<int>(rng.below(dim)), static_cast<int>(rng.below(dim)),
                          rng.uniform(0.1, 2.0), ""});
    }
    const double dr = rng.uniform(0.0, 0.45);
    PropagationTrace trace;
    forward_propagate(t, deposits, CemParams{1e300, dr, 1.0}, &trace);

    GoalPlane goal{depth - 1, {}};
    oracle::Plane target(dim, std::vector<double>(dim));
    for (int y = 0; y < dim; ++y)
      for (int x = 0; x < dim; ++x) {
        target[y][x] = rng.uniform(0.0, 2.0);
        goal.target_p.push_back(target[y][x]);
      }
    const auto grad = goal_gradient(t, goal, trace);

    auto L = to_lattice(t);
    oracle::Plane entry(dim, std::vector<double>(dim, 0.0));
    for (const auto& d : deposits) entry[d.y][d.x] += d.magnitude;
    for (int z = 0; z < goal.z_index; ++z)
      for (int y = 0; y < dim; ++y)
        for (int x = 0; x < dim; ++x) {
          const long double up =
              oracle::goal_loss_shifted(L, entry, dr, goal.z_index, target, z, y, x, h);
          const long double dn =
              oracle::goal_loss_shifted(L, entry, dr, goal.z_index, target, z, y, x, -h);
          const double fd = static_cast<double>((up - dn) / (2.0L * h));
          const double an = grad.dw[t.index(x, y, z)];
          const double scale = std::max(std::abs(an), std::abs(fd));
          // Exact zeros (cells that carried no energy) have no relative error.
          if (scale < 1e-12) {
            worst_small = std::max(worst_small, std::abs(an - fd));
          } else {
            worst_rel = std::max(worst_rel, std::abs(an - fd) / scale);
          }
          ++compared;
        }
  }
  const double secs = seconds_since(t0);
  return {worst_rel <= 1e-5 && worst_small <= 1e-12 && secs < 10.0,
          "max rel error " + num(worst_rel) + " (abs " + num(worst_small) +
              " where both are ~0) over " + std::to_string(compared) + " weights in " +
              num(secs) + " s"};
}

// 3. stability_index against a brute-force long double KL.
Outcome kl_stability_oracle() {
  Rng rng(303);
  double worst = 0.0;
  bool in_range = true;
  bool identical_exact = true;
  for (int i = 0; i < 1000; ++i) {
    const int bins = 1 + static_cast<int>(rng.below(12));
    SpikeDistribution prev(bins), curr(bins);
    for (int k = 0; k < static_cast<int>(rng.below(60)); ++k) prev.record(static_cast<int>(rng.below(bins)));
    for (int k = 0; k < static_cast<int>(rng.below(60)); ++k) curr.record(static_cast<int>(rng.below(bins)));
    const double si = stability_index(prev, curr);
    const double expect = oracle::stability(prev.probabilities(), curr.probabilities());
    worst = std::max(worst, std::abs(si - expect));
    in_range = in_range && si > 0.0 && si <= 1.0;
    identical_exact = identical_exact && stability_index(prev, prev) == 1.0;
  }
  return {worst <= 1e-10 && in_range && identical_exact,
          "max abs error " + num(worst) + " over 10^3 pairs; range " +
              (in_range ? "ok" : "violated") + "; identical pairs " +
              (identical_exact ? "exactly 1.0" : "not 1.0")};
}

// 4. the hand-traced spike scenarios.
Outcome spike_mechanics() {
  const CemParams params{2.0, 0.0, 1.0};
  auto run = [&](double m) {
    PwrTensor t = straight_tensor(3, 4);
    const std::vector<Deposit> d{{1, 1, m, ""}};
    return forward_propagate(t, d, params);
  };
  const auto one = run(1.0);
  const auto five = run(5.0);
  const auto zero = run(0.0);
  const double pe2 = 2.4060961060068285761;
  const bool ok_one = one && one->z_index == 2 && std::abs(one->plane_energy - pe2) <= 1e-9;
  const bool ok_five = five && five->z_index == 0;
  return {ok_one && ok_five && !zero,
          "deposit 1.0 -> " +
              (one ? "z=" + std::to_string(one->z_index) + " PE=" + num(one->plane_energy, 17)
                   : std::string("no spike")) +
              "; 5.0 -> " + (five ? "z=" + std::to_string(five->z_index) : std::string("no spike")) +
              "; 0.0 -> " + (zero ? "spike" : "no spike")};
}

// 5. reinforcement under a fixed repeated pattern at node level.
//
// MinE is 8 on a 4x4x8 tensor so that a vanishing deposit cannot spike: at
// the default MinE the sigmoid floor (0.5 - dr per active cell) reaches MinE
// by itself and the minimal spiking magnitude collapses to 0.
Outcome reinforcement() {
  EngineConfig c;
  c.dim_xy = 4;
  c.dim_z = 8;
  c.min_e = 8.0;
  c.dr = 0.05;
  const auto params = NodeParams::from(c);
  auto pattern = [](double m) { return std::vector<Deposit>{{1, 1, m, "a"}, {2, 2, m, "b"}}; };
  auto spikes = [&](const PwrTensor& t, double m) {
    PwrTensor copy = t;
    reset_propagation(copy);
    return forward_propagate(copy, pattern(m), c.cem_params()).has_value();
  };
  auto min_spiking = [&](const PwrTensor& t) {
    double lo = 0.0, hi = 1.0;
    while (!spikes(t, hi)) hi *= 2.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (spikes(t, mid) ? hi : lo) = mid;
    }
    return hi;
  };

  int passed = 0;
  std::string failures;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ProcessNode n(1, {1, 1, 1}, c.dim_xy, c.dim_z, c.cem_params());
    Rng rng(seed);
    n.cem.randomize(rng);
    const double m_first = min_spiking(n.cem);
    const double m_train = 1.5 * m_first;
    std::vector<int> zs;
    for (int epoch = 0; epoch < 50; ++epoch) {
      n.begin_epoch();
      const auto s = step_node(n, pattern(m_train), params, epoch);
      zs.push_back(s ? s->z_index : -1);
      end_propagation_epoch(n, params, rng);
      evaluate_stability(n);
    }
    int last_change = 0;
    for (int i = 1; i < 50; ++i) {
      if (zs[static_cast<std::size_t>(i)] != zs[static_cast<std::size_t>(i - 1)]) last_change = i;
    }
    const double m_after = min_spiking(n.cem);
    const bool settled = last_change <= c.dim_z && zs.back() >= 0;
    const bool cheaper = m_after <= m_first;
    if (settled && cheaper) {
      ++passed;
    } else {
      failures += " seed " + std::to_string(seed) + " (" +
                  (settled ? "" : "z settles at epoch " + std::to_string(last_change) + ", ") +
                  "threshold " + num(m_first, 4) + " -> " + num(m_after, 4) + ")";
    }
  }
  return {passed == 10, std::to_string(passed) + "/10 seeds" +
                            (failures.empty() ? "" : "; failing:" + failures)};
}

// 6. prune exemption and same-epoch pruning through run_epoch.
Outcome prune_semantics() {
  auto e = probed_entity(6, 4, 6, 16);
  e.config.stability_prune_threshold = 0.9;  // makes stimulated prunes frequent
  Rng rng(606);
  std::size_t exempt = 0, stimulated_prunes = 0, violations = 0;
  for (int epoch = 0; epoch < 100; ++epoch) {
    // Every node enters the epoch with a stability far below threshold.
    for (auto& [id, n] : e.nodes) n.stability_index = rng.uniform(0.001, 0.1);
    std::set<NodeId> before;
    for (const auto& [id, n] : e.nodes) before.insert(id);
    const auto r = run_epoch(e);
    std::set<NodeId> apoptosis;
    for (const auto& ch : r.changes) {
      if (ch.applied && ch.action == "Apoptosis") apoptosis.insert(ch.node);
    }
    const std::set<NodeId> pruned(r.pruned.begin(), r.pruned.end());
    for (NodeId id : before) {
      const bool stimulated = r.classification.count(id) > 0;
      if (apoptosis.count(id)) continue;
      if (!stimulated) {
        ++exempt;
        if (pruned.count(id) || !e.nodes.count(id)) ++violations;
      } else if (r.stability.at(id) < e.config.stability_prune_threshold) {
        ++stimulated_prunes;
        if (!pruned.count(id) || e.nodes.count(id)) ++violations;
      } else if (pruned.count(id)) {
        ++violations;
      }
    }
  }
  return {violations == 0 && exempt > 0 && stimulated_prunes > 0,
          std::to_string(exempt) + " unstimulated low-stability node-epochs retained, " +
              std::to_string(stimulated_prunes) + " stimulated prunes, " +
              std::to_string(violations) + " violations over 100 epochs"};
}

// 7. locked entities do not change structurally.
Outcome lock_semantics() {
  auto e = probed_entity(7, 4, 8, 12);
  for (int i = 0; i < 10; ++i) run_epoch(e);
  lock(e);
  e.config.stability_min = 1.0;  // would mutate every node if the lock leaked
  auto snapshot = [](const Entity& x) {
    std::string s = std::to_string(x.nodes.size());
    for (const auto& [id, n] : x.nodes) s += " " + std::to_string(id) + ":" + n.identity_hash;
    for (const auto& [id, f] : x.functomes) s += to_json(f).dump();
    return s;
  };
  const auto before = snapshot(e);
  std::size_t changes = 0;
  for (int i = 0; i < 50; ++i) {
    const auto r = run_epoch(e);
    changes += r.changes.size() + r.mutations + r.pruned.size() + r.born.size();
  }
  const bool same = snapshot(e) == before;
  return {same && changes == 0, std::to_string(e.nodes.size()) + " nodes; genes, count and hashes " +
                                    (same ? "unchanged" : "CHANGED") + "; " +
                                    std::to_string(changes) + " structural records in 50 epochs"};
}

struct ProcessResult {
  int code = -1;
  std::string out;
};

ProcessResult run_process(const std::string& cmd) {
  ProcessResult r;
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// 8. replay verdicts from two independent CLI processes.
Outcome end_to_end_determinism(const fs::path& dir) {
  {
    std::ofstream(dir / "config.json") << R"({"initial_nodes": 10, "dim_xy": 8, "dim_z": 8,
      "grid_min": [0, 0, 0], "grid_max": [8, 8, 8], "seed": 8})";
    std::ofstream(dir / "pattern.json") << R"({"position": [4, 4, 4], "frames": [{"jitter": 0.1,
      "payloads": [{"index": 0, "magnitude": 2}, {"index": 1, "magnitude": 2},
                   {"index": 2, "magnitude": 2}, {"index": 3, "magnitude": 2}]}]})";
  }
  const std::string cli = EDEN_CLI;
  const auto state = (dir / "replay.eden.json").string();
  const auto init = run_process(cli + " init --config " + (dir / "config.json").string() +
                                " --out " + state);
  if (init.code != 0) return {false, "init failed: " + init.out};
  const auto cmd = cli + " replay --state " + state + " --pattern " +
                   (dir / "pattern.json").string() + " --epochs 100";
  std::vector<std::string> verdicts;
  double slowest = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_process(cmd);
    slowest = std::max(slowest, seconds_since(t0));
    if (r.code != 0) return {false, "replay exited " + std::to_string(r.code) + ": " + r.out};
    const auto at = r.out.find("identical epochs=100 digest=");
    if (at == std::string::npos) return {false, "no identical verdict: " + r.out};
    verdicts.push_back(r.out.substr(at, r.out.find('\n', at) - at));
  }
  const bool same = verdicts[0] == verdicts[1];
  return {same && slowest < 60.0, "two processes: \"" + verdicts[0] + "\"" +
                                      (same ? " both" : " vs \"" + verdicts[1] + "\"") +
                                      "; slowest " + num(slowest) + " s"};
}

// 9. mean stability rises (or holds) under a repeating pattern.
Outcome stability_trend() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto e = probed_entity(seed, 8, 8, 10);
    double early = 0.0, late = 0.0;
    for (int epoch = 1; epoch <= 100; ++epoch) {
      const auto r = run_epoch(e);
      double sum = 0.0;
      for (const auto& [id, v] : r.stability) sum += v;
      const double mean = r.stability.empty() ? 0.0 : sum / static_cast<double>(r.stability.size());
      if (epoch <= 20) early += mean / 20.0;
      if (epoch > 80) late += mean / 20.0;
    }
    if (late >= early) {
      ++wins;
    } else {
      detail += " seed " + std::to_string(seed) + " " + num(early, 4) + " -> " + num(late, 4);
    }
  }
  return {wins >= 8, std::to_string(wins) + "/10 seeds hold or raise mean stability" +
                         (detail.empty() ? "" : "; lower:" + detail)};
}

// 10. grid queries against linear scans and finite differences.
Outcome grid_oracle() {
  Rng rng(1010);
  std::size_t query_mismatch = 0;
  double worst_grad = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    NeuralGrid g(Box{{0, 0, 0}, {8, 8, 8}}, rng.uniform(0.3, 3.0));
    std::vector<oracle::Point> pts;
    std::vector<double> mags;
    const int n = 1 + static_cast<int>(rng.below(60));
    for (int i = 0; i < n; ++i) {
      TransArchPayload p;
      p.index = static_cast<int>(rng.below(2));
      p.position = {rng.uniform(0, 8), rng.uniform(0, 8), rng.uniform(0, 8)};
      p.magnitude = rng.uniform(0.1, 3.0);
      g.deposit(p);
      if (p.index == 1) {
        pts.push_back({p.position.x, p.position.y, p.position.z});
        mags.push_back(p.magnitude);
      }
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
    bool same = got.size() == expect.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i]->id == expect[i].second;
    query_mismatch += same ? 0 : 1;

    const double sigma = rng.uniform(0.5, 2.0);
    const auto an = g.density_gradient(c, 1, sigma);
    const auto fd = oracle::field_gradient_fd(pts, mags, {c.x, c.y, c.z}, sigma);
    worst_grad = std::max({worst_grad, std::abs(an.x - fd.x), std::abs(an.y - fd.y),
                           std::abs(an.z - fd.z)});
  }
  return {query_mismatch == 0 && worst_grad <= 1e-6,
          std::to_string(query_mismatch) + " query mismatches in 10^3 instances; max gradient error " +
              num(worst_grad)};
}

// 11. save/load fixpoint and resumed runs.
Outcome persistence(const fs::path& dir) {
  auto e = probed_entity(11, 4, 8, 10);
  for (int i = 0; i < 10; ++i) run_epoch(e);
  const auto a = (dir / "a.eden.json").string();
  const auto b = (dir / "b.eden.json").string();
  save(e, a);
  auto resumed = load(a);
  save(resumed, b);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool fixpoint = slurp(a) == slurp(b);
  int matched = 0;
  for (int i = 0; i < 20; ++i) {
    if (to_json(run_epoch(e)).dump() == to_json(run_epoch(resumed)).dump()) ++matched;
  }
  const bool final_same = serialize_save_state(e) == serialize_save_state(resumed);
  return {fixpoint && matched == 20 && final_same,
          std::string("save/load/save ") + (fixpoint ? "byte-identical" : "DIFFERS") + "; " +
              std::to_string(matched) + "/20 resumed epochs identical"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--expect-fail" && i + 1 < argc) {
      expected_failures.insert(std::stoi(argv[++i]));
    } else if (arg == "--only" && i + 1 < argc) {
      only.insert(std::stoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--expect-fail N]... [--only N]...\n";
      return 2;
    }
  }
  spdlog::set_level(spdlog::level::err);

  const fs::path dir = fs::temp_directory_path() / ("eden_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  const std::vector<Criterion> criteria = {
      {1, "transfer exactness", transfer_exactness},
      {2, "gradient check", gradient_check},
      {3, "KL/stability oracle", kl_stability_oracle},
      {4, "spike mechanics", spike_mechanics},
      {5, "reinforcement", reinforcement},
      {6, "prune semantics", prune_semantics},
      {7, "lock semantics", lock_semantics},
      {8, "end-to-end determinism", [&] { return end_to_end_determinism(dir); }},
      {9, "stability trend", stability_trend},
      {10, "grid oracle", grid_oracle},
      {11, "persistence", [&] { return persistence(dir); }},
  };

  std::set<int> failed;
  std::size_t ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.number)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(c.number);
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.number << "] " << c.name << ": "
              << o.detail << " (" << num(seconds_since(t0)) << " s)" << std::endl;
  }
  fs::remove_all(dir);

  std::cout << (ran - failed.size()) << "/" << ran << " criteria pass";
  if (!expected_failures.empty()) {
    std::cout << "; expected failures:";
    for (int n : expected_failures) std::cout << " " << n;
  }
  std::cout << "\n";
  if (!only.empty()) {
    std::erase_if(expected_failures, [&](int n) { return !only.count(n); });
  }
  return failed == expected_failures ? 0 : 1;
}
