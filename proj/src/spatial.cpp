#include "genlab/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace genlab {

std::vector<double> MarkedDendrogram::site_masses(int sites) const {
  std::vector<double> out(static_cast<std::size_t>(sites), 0.0);
  for (std::size_t l = 0; l < base.leaf_count(); ++l)
    out[static_cast<std::size_t>(marks[l])] += base.leaf_mass(l);
  return out;
}

namespace {

int step_site(int site, int sites, bool uniform, Rng& rng) {
  if (uniform) {
    int jump =
        1 + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(sites - 1)));
    return (site + jump) % sites;
  }
  if (sites == 2) return 1 - site;
  return rng.bernoulli(0.5) ? (site + 1) % sites : (site + sites - 1) % sites;
}

}  // namespace

MarkedDendrogram simulate_spatial_genealogy(std::size_t N,
                                            const std::vector<double>& init_mass,
                                            double t, const SpatialParams& sp,
                                            Rng& rng) {
  int sites = sp.sites;
  if (static_cast<int>(init_mass.size()) != sites)
    throw std::invalid_argument("init_mass size must equal sites");
  if (N < 1) throw std::invalid_argument("N >= 1");

  double bN = sp.base.b * static_cast<double>(N);
  double p_two = 0.5 + sp.base.a / (2.0 * bN);

  struct ANode {
    int parent = -1;
    int child1 = -1, child2 = -1;
    double split_time = -1.0;
  };
  std::vector<ANode> arena;
  struct Tip {
    int node;
    int site;
  };
  std::vector<Tip> alive;

  for (int s = 0; s < sites; ++s) {
    auto count = static_cast<std::size_t>(
        std::floor(static_cast<double>(N) * init_mass[static_cast<std::size_t>(s)]));
    for (std::size_t k = 0; k < count; ++k) {
      arena.push_back({});
      alive.push_back({static_cast<int>(arena.size()) - 1, s});
    }
  }

  double clock = 0.0;
  double per_particle = bN + sp.cmig;
  double q_mig = sp.cmig / per_particle;
  while (!alive.empty()) {
    double total = per_particle * static_cast<double>(alive.size());
    clock += rng.exp_mean(1.0 / total);
    if (clock >= t) break;
    double scaled = rng.uniform() * static_cast<double>(alive.size());
    auto idx = static_cast<std::size_t>(scaled);
    if (idx >= alive.size()) idx = alive.size() - 1;
    double frac = scaled - static_cast<double>(idx);
    if (frac < q_mig) {
      alive[idx].site = step_site(alive[idx].site, sites, sp.uniform_kernel, rng);
      continue;
    }
    double frac2 = (frac - q_mig) / (1.0 - q_mig);
    int v = alive[idx].node;
    if (frac2 < p_two) {
      int c1 = static_cast<int>(arena.size());
      arena.push_back({v, -1, -1, -1.0});
      int c2 = static_cast<int>(arena.size());
      arena.push_back({v, -1, -1, -1.0});
      arena[static_cast<std::size_t>(v)].child1 = c1;
      arena[static_cast<std::size_t>(v)].child2 = c2;
      arena[static_cast<std::size_t>(v)].split_time = clock;
      int site = alive[idx].site;
      alive[idx] = {c1, site};
      alive.push_back({c2, site});
    } else {
      alive[idx] = alive.back();
      alive.pop_back();
    }
  }

  MarkedDendrogram out;
  if (alive.empty()) return out;

  std::vector<char> marked(arena.size(), 0);
  std::vector<int> survivor_site(arena.size(), -1);
  for (const auto& tip : alive) {
    survivor_site[static_cast<std::size_t>(tip.node)] = tip.site;
    for (int v = tip.node; v != -1 && !marked[static_cast<std::size_t>(v)];
         v = arena[static_cast<std::size_t>(v)].parent)
      marked[static_cast<std::size_t>(v)] = 1;
  }

  Dendrogram tree;
  double leaf_mass = 1.0 / static_cast<double>(N);
  std::function<NodeId(int)> build = [&](int v) -> NodeId {
    const auto& n = arena[static_cast<std::size_t>(v)];
    if (!marked[static_cast<std::size_t>(v)]) return kNoNode;
    if (survivor_site[static_cast<std::size_t>(v)] >= 0) {
      return tree.add_leaf(leaf_mass, survivor_site[static_cast<std::size_t>(v)]);
    }
    if (n.child1 == -1) return kNoNode;
    NodeId a = build(n.child1);
    NodeId b = build(n.child2);
    if (a == kNoNode) return b;
    if (b == kNoNode) return a;
    NodeId kids[2] = {a, b};
    return tree.add_merge(t - n.split_time, kids);
  };
  std::vector<NodeId> clans;
  std::size_t n_roots = 0;
  for (std::size_t i = 0; i < arena.size(); ++i)
    if (arena[i].parent == -1) ++n_roots;
  for (std::size_t i = 0; i < n_roots; ++i) {
    NodeId piece = build(static_cast<int>(i));
    if (piece != kNoNode) clans.push_back(piece);
  }
  if (clans.size() > 1) tree.add_merge(t, clans);
  tree.finalize();

  out.base = std::move(tree);
  out.marks.reserve(out.base.leaf_count());
  for (NodeId l : out.base.leaves()) {
    int tag = out.base.node(l).tag;
    if (tag < 0) throw std::logic_error("unmarked leaf");
    out.marks.push_back(tag);
  }
  return out;
}

Estimate spatial_polynomial_estimate(
    const MarkedDendrogram& tree, int degree,
    const std::function<double(const DistanceMatrix&)>& phi,
    const std::function<double(const std::vector<int>&)>& g, std::size_t n_mc,
    Rng& rng) {
  if (degree < 1) throw std::invalid_argument("degree >= 1");
  if (tree.base.is_null()) return {0.0, 0.0};
  std::size_t n = static_cast<std::size_t>(degree);
  if (n == 1) {
    DistanceMatrix m(1);
    double phi1 = phi(m);
    double acc = 0.0;
    std::vector<int> site(1);
    for (std::size_t l = 0; l < tree.base.leaf_count(); ++l) {
      site[0] = tree.marks[l];
      acc += tree.base.leaf_mass(l) * g(site);
    }
    return {phi1 * acc, 0.0};
  }
  auto eval_tuple = [&](const std::vector<std::size_t>& pick) {
    DistanceMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double r = tree.base.distance(pick[i], pick[j]);
        m.at(i, j) = r;
        m.at(j, i) = r;
      }
    std::vector<int> sites(n);
    for (std::size_t i = 0; i < n; ++i) sites[i] = tree.marks[pick[i]];
    return phi(m) * g(sites);
  };

  if (tree.base.leaf_count() <= kExhaustiveCutoff) {
    std::vector<std::size_t> idx(n, 0);
    double acc = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t k = 0; k < n; ++k) w *= tree.base.leaf_mass(idx[k]);
      if (w > 0.0) acc += w * eval_tuple(idx);
      std::size_t k = 0;
      while (k < n && ++idx[k] == tree.base.leaf_count()) {
        idx[k] = 0;
        ++k;
      }
      if (k == n) break;
    }
    return {acc, 0.0};
  }

  double mass_n = std::pow(tree.base.total_mass(), static_cast<double>(n));
  double acc = 0.0, acc2 = 0.0;
  std::vector<std::size_t> pick(n);
  for (std::size_t rep = 0; rep < n_mc; ++rep) {
    for (auto& x : pick) x = tree.base.sample_leaf(rng);
    double v = eval_tuple(pick);
    acc += v;
    acc2 += v * v;
  }
  double nmc = static_cast<double>(n_mc);
  double mean = acc / nmc;
  double var = n_mc > 1 ? std::max(0.0, (acc2 - acc * acc / nmc) / (nmc - 1.0))
                        : 0.0;
  return {mass_n * mean, mass_n * std::sqrt(var / nmc)};
}

SiteMoments site_moment_oracle(const std::vector<double>& init_mass, double t,
                               const SpatialParams& sp, std::size_t rk_steps) {
  int sites = sp.sites;
  std::size_t S = static_cast<std::size_t>(sites);
  if (init_mass.size() != S)
    throw std::invalid_argument("init size mismatch");

  // kernel matrix a(xi, xi')
  std::vector<std::vector<double>> A(S, std::vector<double>(S, 0.0));
  for (std::size_t i = 0; i < S; ++i) {
    if (sp.uniform_kernel) {
      for (std::size_t j = 0; j < S; ++j)
        if (j != i) A[i][j] = 1.0 / static_cast<double>(sites - 1);
    } else if (sites == 2) {
      A[i][1 - i] = 1.0;
    } else {
      A[i][(i + 1) % S] = 0.5;
      A[i][(i + S - 1) % S] = 0.5;
    }
  }
  double c = sp.cmig;
  double b = sp.base.b;

  // dm/dt = c (A - I) m;  dM/dt = c[(A-I) M + M (A-I)^T] + b diag(m)
  auto deriv = [&](const std::vector<double>& m,
                   const std::vector<std::vector<double>>& M,
                   std::vector<double>& dm,
                   std::vector<std::vector<double>>& dM) {
    for (std::size_t i = 0; i < S; ++i) {
      double acc = -m[i];
      for (std::size_t j = 0; j < S; ++j) acc += A[i][j] * m[j];
      dm[i] = c * acc;
    }
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t j = 0; j < S; ++j) {
        double acc = -2.0 * M[i][j];
        for (std::size_t k = 0; k < S; ++k)
          acc += A[i][k] * M[k][j] + A[j][k] * M[i][k];
        dM[i][j] = c * acc + (i == j ? b * m[i] : 0.0);
      }
  };

  std::vector<double> m = init_mass;
  std::vector<std::vector<double>> M(S, std::vector<double>(S));
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j) M[i][j] = init_mass[i] * init_mass[j];

  double dt = t / static_cast<double>(rk_steps);
  std::vector<double> k1m(S), k2m(S), k3m(S), k4m(S), tm(S);
  std::vector<std::vector<double>> k1M(S, std::vector<double>(S)), k2M = k1M,
                                   k3M = k1M, k4M = k1M, tM = k1M;
  for (std::size_t step = 0; step < rk_steps; ++step) {
    deriv(m, M, k1m, k1M);
    for (std::size_t i = 0; i < S; ++i) {
      tm[i] = m[i] + 0.5 * dt * k1m[i];
      for (std::size_t j = 0; j < S; ++j)
        tM[i][j] = M[i][j] + 0.5 * dt * k1M[i][j];
    }
    deriv(tm, tM, k2m, k2M);
    for (std::size_t i = 0; i < S; ++i) {
      tm[i] = m[i] + 0.5 * dt * k2m[i];
      for (std::size_t j = 0; j < S; ++j)
        tM[i][j] = M[i][j] + 0.5 * dt * k2M[i][j];
    }
    deriv(tm, tM, k3m, k3M);
    for (std::size_t i = 0; i < S; ++i) {
      tm[i] = m[i] + dt * k3m[i];
      for (std::size_t j = 0; j < S; ++j) tM[i][j] = M[i][j] + dt * k3M[i][j];
    }
    deriv(tm, tM, k4m, k4M);
    for (std::size_t i = 0; i < S; ++i) {
      m[i] += dt / 6.0 * (k1m[i] + 2.0 * k2m[i] + 2.0 * k3m[i] + k4m[i]);
      for (std::size_t j = 0; j < S; ++j)
        M[i][j] +=
            dt / 6.0 * (k1M[i][j] + 2.0 * k2M[i][j] + 2.0 * k3M[i][j] + k4M[i][j]);
    }
  }
  return {std::move(m), std::move(M)};
}

}  // namespace genlab
