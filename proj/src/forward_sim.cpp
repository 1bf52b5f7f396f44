#include "genlab/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace genlab {

namespace {

// Lineage arena for branching particle systems. Particles are tips; a split
// records its time and two children.
struct Arena {
  struct ANode {
    int parent = -1;
    int child1 = -1;
    int child2 = -1;
    double split_time = -1.0;
  };
  std::vector<ANode> nodes;

  int new_root() {
    nodes.push_back({});
    return static_cast<int>(nodes.size()) - 1;
  }
  // splits v at time s; returns the two children
  std::pair<int, int> split(int v, double s) {
    int c1 = static_cast<int>(nodes.size());
    nodes.push_back({v, -1, -1, -1.0});
    int c2 = static_cast<int>(nodes.size());
    nodes.push_back({v, -1, -1, -1.0});
    nodes[v].child1 = c1;
    nodes[v].child2 = c2;
    nodes[v].split_time = s;
    return {c1, c2};
  }
};

// Collapse the arena onto the survivors and emit a Dendrogram subtree per
// requested root. Heights are t - split_time.
class GenealogyBuilder {
 public:
  GenealogyBuilder(const Arena& arena, const std::vector<int>& survivors,
                   double t, double leaf_mass)
      : arena_(arena), t_(t), leaf_mass_(leaf_mass) {
    marked_.assign(arena.nodes.size(), 0);
    is_survivor_.assign(arena.nodes.size(), 0);
    for (int s : survivors) {
      is_survivor_[s] = 1;
      for (int v = s; v != -1 && !marked_[v]; v = arena.nodes[v].parent)
        marked_[v] = 1;
    }
  }

  // Dendrogram node for the surviving part below arena node v (kNoNode if
  // the clan is extinct).
  NodeId build(int v, Dendrogram& out) const {
    const auto& n = arena_.nodes[v];
    if (!marked_[v]) return kNoNode;
    if (is_survivor_[v]) return out.add_leaf(leaf_mass_);
    if (n.child1 == -1) return kNoNode;  // died without offspring
    NodeId a = build(n.child1, out);
    NodeId b = build(n.child2, out);
    if (a == kNoNode) return b;
    if (b == kNoNode) return a;
    NodeId kids[2] = {a, b};
    return out.add_merge(t_ - n.split_time, kids);
  }

 private:
  const Arena& arena_;
  std::vector<char> marked_;
  std::vector<char> is_survivor_;
  double t_;
  double leaf_mass_;
};

struct ParticleRun {
  Arena arena;
  std::vector<int> alive;                  // arena ids of current tips
  std::vector<int> root_ids;               // arena ids of clan roots
  std::vector<std::size_t> group_of_root;  // aligned with root_ids

  void add_root(std::size_t group) {
    int id = arena.new_root();
    root_ids.push_back(id);
    group_of_root.push_back(group);
    alive.push_back(id);
  }
};

// Runs the binary GW dynamics from the given roots; immigration adds new
// roots at rate immig_rate (group index assigned by on_immigrant). One
// uniform selects the event, the particle, and the offspring count.
void run_particles(ParticleRun& run, double t, double branch_rate,
                   double p_two, double immig_rate, Rng& rng,
                   const std::function<std::size_t(double)>& on_immigrant) {
  double clock = 0.0;
  auto& alive = run.alive;
  while (true) {
    double n = static_cast<double>(alive.size());
    double total = branch_rate * n + immig_rate;
    if (total <= 0.0) return;
    clock += rng.exp_mean(1.0 / total);
    if (clock >= t) return;
    double u = rng.uniform() * total;
    if (u >= branch_rate * n) {
      run.add_root(on_immigrant(clock));
      continue;
    }
    double scaled = u / branch_rate;  // uniform on [0, n)
    auto idx = static_cast<std::size_t>(scaled);
    if (idx >= alive.size()) idx = alive.size() - 1;
    double frac = scaled - static_cast<double>(idx);
    int v = alive[idx];
    if (frac < p_two) {
      auto [c1, c2] = run.arena.split(v, clock);
      alive[idx] = c1;
      alive.push_back(c2);
    } else {
      alive[idx] = alive.back();
      alive.pop_back();
    }
  }
}

}  // namespace

Dendrogram simulate_gw_genealogy(std::size_t N, double x0, double t,
                                 const ModelParams& p, Rng& rng) {
  Dendrogram init = Dendrogram::point_mass(x0);
  return simulate_gw_genealogy_from(N, init, t, p, rng);
}

Dendrogram simulate_gw_genealogy_from(std::size_t N, const Dendrogram& init,
                                      double t, const ModelParams& p,
                                      Rng& rng) {
  if (N < 1) throw std::invalid_argument("simulate_gw_genealogy: N >= 1");
  double bN = p.b * static_cast<double>(N);
  double p_two = 0.5 + p.a / (2.0 * bN);
  if (p_two < 0.0 || p_two > 1.0)
    throw std::invalid_argument("offspring bias out of range; increase N");

  ParticleRun run;
  for (std::size_t l = 0; l < init.leaf_count(); ++l) {
    auto count = static_cast<std::size_t>(
        std::floor(static_cast<double>(N) * init.leaf_mass(l)));
    for (std::size_t k = 0; k < count; ++k) run.add_root(l);
  }
  if (run.alive.empty()) return Dendrogram::null_tree();

  run_particles(run, t, bN, p_two, 0.0, rng, {});
  if (run.alive.empty()) return Dendrogram::null_tree();

  // group survivors by initial leaf
  GenealogyBuilder builder(run.arena, run.alive, t, 1.0 / static_cast<double>(N));
  Dendrogram out;
  std::vector<std::vector<NodeId>> clan_nodes(init.leaf_count());
  for (std::size_t r = 0; r < run.root_ids.size(); ++r) {
    NodeId piece = builder.build(run.root_ids[r], out);
    if (piece != kNoNode) clan_nodes[run.group_of_root[r]].push_back(piece);
  }

  std::vector<std::size_t> leaf_index_of(init.node_count(), 0);
  for (std::size_t l = 0; l < init.leaf_count(); ++l)
    leaf_index_of[init.leaves()[l]] = l;

  // per-leaf star at height t, then the initial structure lifted by t
  std::function<NodeId(NodeId)> lift = [&](NodeId id) -> NodeId {
    const auto& n = init.node(id);
    if (n.is_leaf) {
      auto& pieces = clan_nodes[leaf_index_of[id]];
      if (pieces.empty()) return kNoNode;
      if (pieces.size() == 1) return pieces[0];
      return out.add_merge(t, pieces);
    }
    std::vector<NodeId> kids;
    for (NodeId c = n.first_child; c != kNoNode; c = init.node(c).next_sibling) {
      NodeId k = lift(c);
      if (k != kNoNode) kids.push_back(k);
    }
    if (kids.empty()) return kNoNode;
    if (kids.size() == 1) return kids[0];
    return out.add_merge(t + n.height, kids);
  };
  for (NodeId r : init.roots()) lift(r);
  out.finalize();
  return out;
}

Dendrogram simulate_immigration_genealogy(std::size_t N, double t,
                                          const ModelParams& p, Rng& rng,
                                          ImmigrantAttach attach, double x0) {
  if (N < 1) throw std::invalid_argument("N >= 1");
  if (!(p.c > 0.0)) throw std::invalid_argument("immigration needs c > 0");
  double bN = p.b * static_cast<double>(N);
  double p_two = 0.5 + p.a / (2.0 * bN);

  ParticleRun run;
  std::vector<double> group_time;  // arrival time per group (0 for initials)
  group_time.push_back(0.0);
  auto initial_count = static_cast<std::size_t>(
      std::floor(static_cast<double>(N) * x0));
  for (std::size_t k = 0; k < initial_count; ++k) run.add_root(0);

  auto on_immigrant = [&](double s) {
    group_time.push_back(s);
    return group_time.size() - 1;
  };
  run_particles(run, t, bN, p_two, p.c * static_cast<double>(N), rng,
                on_immigrant);
  if (run.alive.empty()) return Dendrogram::null_tree();

  GenealogyBuilder builder(run.arena, run.alive, t,
                           1.0 / static_cast<double>(N));
  Dendrogram out;
  struct Clan {
    double arrival;
    NodeId node;
  };
  std::vector<Clan> clans;
  for (std::size_t r = 0; r < run.root_ids.size(); ++r) {
    NodeId piece = builder.build(run.root_ids[r], out);
    if (piece != kNoNode)
      clans.push_back({group_time[run.group_of_root[r]], piece});
  }
  if (clans.empty()) return Dendrogram::null_tree();

  if (attach == ImmigrantAttach::root) {
    // all clans join at the root level: distance 2t
    if (clans.size() > 1) {
      std::vector<NodeId> kids;
      for (const auto& c : clans) kids.push_back(c.node);
      out.add_merge(t, kids);
    }
  } else {
    // immortal line: clans at arrivals s < s' are at distance 2(t - s);
    // comb with the earliest arrival on top
    std::sort(clans.begin(), clans.end(),
              [](const Clan& a, const Clan& b) { return a.arrival > b.arrival; });
    NodeId acc = clans[0].node;
    for (std::size_t i = 1; i < clans.size(); ++i) {
      NodeId kids[2] = {clans[i].node, acc};
      acc = out.add_merge(t - clans[i].arrival, kids);
    }
  }
  out.finalize();
  return out;
}

namespace {

// Cumulative time change Lambda(s) = int b/u over the path grid (trapezoid),
// restricted to [start_index, end]. Zero mass inside the window contributes
// a large finite rate so that the genealogy coalesces there.
struct TimeChange {
  std::vector<double> s;    // calendar times
  std::vector<double> lam;  // cumulative tau

  double total() const { return lam.back(); }
  // calendar time at cumulative tau v (v <= total())
  double calendar(double v) const {
    auto it = std::upper_bound(lam.begin(), lam.end(), v);
    std::size_t hi = std::min<std::size_t>(
        static_cast<std::size_t>(it - lam.begin()), lam.size() - 1);
    std::size_t lo = hi - 1;
    double span = lam[hi] - lam[lo];
    double w = span > 0.0 ? (v - lam[lo]) / span : 1.0;
    return s[lo] + w * (s[hi] - s[lo]);
  }
};

constexpr double kZeroMassRate = 1e9;

// A pair of lineages survives w units of the coalescence clock with
// probability e^{-w}: eras more than kMoranClockCap units before the end
// are below resolution, so the window is truncated there (entrance paths
// otherwise produce astronomically many events).
constexpr double kMoranClockCap = 50.0;

TimeChange build_time_change(const MassPath& path, double b,
                             std::size_t start) {
  TimeChange tc;
  tc.s.push_back(path.grid[start]);
  tc.lam.push_back(0.0);
  for (std::size_t i = start + 1; i < path.grid.size(); ++i) {
    double dt = path.grid[i] - path.grid[i - 1];
    double r0 = path.values[i - 1] > 0.0 ? b / path.values[i - 1] : kZeroMassRate;
    double r1 = path.values[i] > 0.0 ? b / path.values[i] : kZeroMassRate;
    tc.s.push_back(path.grid[i]);
    tc.lam.push_back(tc.lam.back() + 0.5 * (r0 + r1) * dt);
  }
  double cut = tc.lam.back() - kMoranClockCap;
  if (cut <= 0.0) return tc;
  // drop the era before the cut; rebase the clock at its calendar time
  double s_cut = tc.calendar(cut);
  TimeChange out;
  out.s.push_back(s_cut);
  out.lam.push_back(0.0);
  for (std::size_t i = 0; i < tc.s.size(); ++i) {
    if (tc.lam[i] <= cut) continue;
    out.s.push_back(tc.s[i]);
    out.lam.push_back(tc.lam[i] - cut);
  }
  return out;
}

}  // namespace

Dendrogram simulate_moran_given_mass(const MassPath& path, std::size_t K,
                                     const ModelParams& p, Rng& rng,
                                     int leaf_tag) {
  if (K < 1) throw std::invalid_argument("moran: K >= 1");
  if (path.grid.size() < 2) throw std::invalid_argument("moran: short path");
  double terminal = path.terminal();
  if (terminal <= 0.0) return Dendrogram::null_tree();

  std::size_t start = 0;
  while (start < path.values.size() && path.values[start] <= 0.0) ++start;
  if (start > 0) --start;  // keep one zero point: entrance ramp
  if (start + 1 >= path.values.size()) return Dendrogram::null_tree();
  TimeChange tc = build_time_change(path, p.b, start);
  double t0 = tc.s.front();
  double t_end = path.t_end();

  // MRCA calendar times of the current slot occupants
  std::vector<double> mrca(K * K, t0);
  auto at = [&](std::size_t i, std::size_t j) -> double& {
    return mrca[i * K + j];
  };

  double tau = 0.0;
  double total_rate = static_cast<double>(K) * static_cast<double>(K - 1) / 2.0;
  if (K > 1) {
    while (true) {
      tau += rng.exp_mean(1.0 / total_rate);
      if (tau >= tc.total()) break;
      double s = tc.calendar(tau);
      std::size_t i = rng.uniform_index(K);
      std::size_t j = rng.uniform_index(K - 1);
      if (j >= i) ++j;
      // slot j gets a child of slot i's occupant (direction is symmetric
      // for the pair genealogy)
      for (std::size_t k = 0; k < K; ++k) {
        if (k == i || k == j) continue;
        at(j, k) = at(i, k);
        at(k, j) = at(k, i);
      }
      at(i, j) = s;
      at(j, i) = s;
    }
  }

  // agglomerate: merge pairs from smallest distance (= latest MRCA) upward
  struct Pair {
    double h;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(K * (K - 1) / 2);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = i + 1; j < K; ++j)
      pairs.push_back({t_end - at(i, j), i, j});
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.h < b.h; });

  Dendrogram out;
  std::vector<std::size_t> parent(K);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  std::vector<NodeId> cluster_node(K);
  double leaf_mass = terminal / static_cast<double>(K);
  for (std::size_t i = 0; i < K; ++i)
    cluster_node[i] =
        out.add_leaf(leaf_mass, leaf_tag >= 0 ? leaf_tag : static_cast<int>(i));
  for (const auto& pr : pairs) {
    std::size_t a = find(pr.i), b = find(pr.j);
    if (a == b) continue;
    NodeId kids[2] = {cluster_node[a], cluster_node[b]};
    NodeId m = out.add_merge(pr.h, kids);
    parent[b] = a;
    cluster_node[a] = m;
  }
  out.finalize();
  return out;
}

double pair_mass_below(const Dendrogram& tree, double s) {
  double acc = 0.0;
  for (double m : ball_masses(tree, s)) acc += m * m;
  return acc;
}

double pair_mass_below_ideal(const Dendrogram& tree, double s) {
  if (tree.is_null()) return 0.0;
  double total = tree.total_mass();
  double balls = pair_mass_below(tree, s);
  double diag = 0.0;
  for (std::size_t l = 0; l < tree.leaf_count(); ++l) {
    double m = tree.leaf_mass(l);
    diag += m * m;
  }
  double denom = 1.0 - diag / (total * total);
  if (denom <= 0.0) return 0.0;  // single-atom tree
  return (balls - diag) / denom;
}

}  // namespace genlab
