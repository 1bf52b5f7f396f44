#include "genlab/coalescent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace genlab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CoalescentState::CoalescentState(std::size_t n) : n_(n) {
  if (n < 1) throw std::invalid_argument("coalescent: n >= 1");
  blocks_.resize(n);
  block_of_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    blocks_[i] = {static_cast<int>(i)};
    block_of_[i] = static_cast<int>(i);
  }
  coal_time_.assign(n * n, kInf);
}

double CoalescentState::dual_distance(int i, int j) const {
  if (i == j) return 0.0;
  double tc = coal_time_[static_cast<std::size_t>(i) * n_ +
                         static_cast<std::size_t>(j)];
  if (tc == kInf) return 2.0 * clock_;
  return 2.0 * tc;
}

std::optional<double> CoalescentState::coalescence_time(int i, int j) const {
  double tc = coal_time_[static_cast<std::size_t>(i) * n_ +
                         static_cast<std::size_t>(j)];
  if (tc == kInf) return std::nullopt;
  return tc;
}

void CoalescentState::merge_blocks(std::size_t bi, std::size_t bj,
                                   double at_time) {
  if (bi == bj) throw std::invalid_argument("merge_blocks: distinct blocks");
  if (bi > bj) std::swap(bi, bj);
  for (int a : blocks_[bi])
    for (int b : blocks_[bj]) {
      coal_time_[static_cast<std::size_t>(a) * n_ + b] = at_time;
      coal_time_[static_cast<std::size_t>(b) * n_ + a] = at_time;
    }
  auto moved = std::move(blocks_[bj]);
  blocks_[bi].insert(blocks_[bi].end(), moved.begin(), moved.end());
  std::sort(blocks_[bi].begin(), blocks_[bi].end());
  blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(bj));
  // blocks stay ordered by least elements because we merged into the
  // smaller-index block and only removed a later one
  for (std::size_t b = 0; b < blocks_.size(); ++b)
    for (int e : blocks_[b]) block_of_[e] = static_cast<int>(b);
  clock_ = at_time;
}

CoalescentState run_kingman_enriched(std::size_t n, double t,
                                     const ModelParams& p, Rng& rng) {
  CoalescentState st(n);
  double clock = 0.0;
  while (true) {
    double k = static_cast<double>(st.block_count());
    double pairs = 0.5 * k * (k - 1.0);
    double rate = p.b * pairs;
    double next = rate > 0.0 ? clock + rng.exp_mean(1.0 / rate) : kInf;
    double upto = std::min(next, t);
    st.add_fk_log((p.b * pairs + p.a * k) * (upto - clock));
    clock = upto;
    if (next >= t) break;
    std::size_t bi = rng.uniform_index(st.block_count());
    std::size_t bj = rng.uniform_index(st.block_count() - 1);
    if (bj >= bi) ++bj;
    st.merge_blocks(bi, bj, clock);
  }
  st.advance_to(t);
  return st;
}

namespace {

// H^phi(u0, (p, r')): integrate phi over block representatives sampled
// mass-proportionally from u0; the full n x n argument matrix is
// r_u0(rep_i, rep_j) + r'_{ij}. Exact enumeration when u0 is small.
double dual_h_eval(const Dendrogram& u0, const Polynomial& poly,
                   const CoalescentState& st, Rng& rng) {
  std::size_t n = st.n();
  std::size_t k = st.block_count();
  DistanceMatrix m(n);
  auto fill_and_eval = [&](const std::vector<std::size_t>& reps) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        int bi = st.block_of(static_cast<int>(i));
        int bj = st.block_of(static_cast<int>(j));
        double r0 = bi == bj ? 0.0
                             : u0.distance(reps[static_cast<std::size_t>(bi)],
                                           reps[static_cast<std::size_t>(bj)]);
        double r = r0 + st.dual_distance(static_cast<int>(i),
                                         static_cast<int>(j));
        m.at(i, j) = r;
        m.at(j, i) = r;
      }
    if (poly.trunc_depth) {
      double lim = 2.0 * *poly.trunc_depth;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (!(m.at(i, j) < lim)) return 0.0;
    }
    return poly.testfn(m);
  };

  if (u0.leaf_count() <= kExhaustiveCutoff) {
    // exact integral over mu0^{(x) k}
    std::vector<std::size_t> reps(k, 0);
    double acc = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t b = 0; b < k; ++b) w *= u0.leaf_mass(reps[b]);
      if (w > 0.0) {
        double v = fill_and_eval(reps);
        if (v != 0.0) acc += w * v;
      }
      std::size_t b = 0;
      while (b < k && ++reps[b] == u0.leaf_count()) {
        reps[b] = 0;
        ++b;
      }
      if (b == k) break;
    }
    return acc;
  }

  std::vector<std::size_t> reps(k);
  for (auto& r : reps) r = u0.sample_leaf(rng);
  double mass_k = std::pow(u0.total_mass(), static_cast<double>(k));
  return mass_k * fill_and_eval(reps);
}

}  // namespace

DualEstimate dual_moment_estimate(const Dendrogram& u0, const Polynomial& poly,
                                  double t, const ModelParams& p,
                                  std::size_t n_mc, Rng& rng) {
  if (n_mc < 1) throw std::invalid_argument("dual_moment_estimate: n_mc >= 1");
  if (poly.degree < 1)
    throw std::invalid_argument("dual_moment_estimate: degree >= 1");
  std::size_t n = static_cast<std::size_t>(poly.degree);

  // The FK weight grows like e^{b C(n,2) t}; accumulate in log space and
  // stabilize the exponentials by the running maximum exponent.
  std::vector<double> log_w(n_mc), h_val(n_mc);
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t rep = 0; rep < n_mc; ++rep) {
    CoalescentState st = run_kingman_enriched(n, t, p, rng);
    log_w[rep] = st.fk_log_weight();
    h_val[rep] = dual_h_eval(u0, poly, st, rng);
    lmax = std::max(lmax, log_w[rep]);
  }
  double acc = 0.0, acc2 = 0.0, wsum = 0.0, wsum2 = 0.0;
  for (std::size_t rep = 0; rep < n_mc; ++rep) {
    double w = std::exp(log_w[rep] - lmax);  // in (0, 1]
    double v = h_val[rep] * w;
    acc += v;
    acc2 += v * v;
    wsum += w;
    wsum2 += w * w;
  }
  double scale = std::exp(lmax);
  double nmc = static_cast<double>(n_mc);
  double mean = acc / nmc;
  double var = n_mc > 1 ? std::max(0.0, (acc2 - acc * acc / nmc) / (nmc - 1.0))
                        : 0.0;
  DualEstimate out;
  out.value = scale * mean;
  out.std_error = scale * std::sqrt(var / nmc);
  out.effective_sample_size = wsum2 > 0.0 ? wsum * wsum / wsum2 : 0.0;
  out.low_ess_warning = out.effective_sample_size < kEssWarnThreshold;
  return out;
}

namespace {

// Backward cumulative coalescence clock: Lam(s) = int_0^s b/u(t_end - v) dv
// on the reversed grid, capped at rate_cap (entrance/extinction zeros make
// the integral diverge).
struct BackwardClock {
  std::vector<double> s;    // backward times
  std::vector<double> lam;  // cumulative
  bool capped = false;

  double total() const { return lam.back(); }
  double backward_time(double v) const {
    auto it = std::upper_bound(lam.begin(), lam.end(), v);
    std::size_t hi = std::min<std::size_t>(
        static_cast<std::size_t>(it - lam.begin()), lam.size() - 1);
    std::size_t lo = hi - 1;
    double span = lam[hi] - lam[lo];
    double w = span > 0.0 ? (v - lam[lo]) / span : 1.0;
    return s[lo] + w * (s[hi] - s[lo]);
  }
};

BackwardClock build_backward_clock(const MassPath& path, double b,
                                   double rate_cap) {
  BackwardClock bc;
  std::size_t M = path.grid.size();
  double t_end = path.grid.back();
  bc.s.push_back(0.0);
  bc.lam.push_back(0.0);
  constexpr double kZeroRate = 1e12;
  for (std::size_t k = 1; k < M; ++k) {
    std::size_t i1 = M - 1 - k;      // value index at backward time s_k
    double sb = t_end - path.grid[i1];
    double z0 = path.values[i1 + 1];
    double z1 = path.values[i1];
    double r0 = z0 > 0.0 ? b / z0 : kZeroRate;
    double r1 = z1 > 0.0 ? b / z1 : kZeroRate;
    double inc = 0.5 * (r0 + r1) * (sb - bc.s.back());
    double nxt = bc.lam.back() + inc;
    bc.s.push_back(sb);
    if (nxt >= rate_cap) {
      bc.lam.push_back(rate_cap);
      bc.capped = true;
      break;
    }
    bc.lam.push_back(nxt);
  }
  return bc;
}

}  // namespace

CoalescentState run_conditioned_coalescent(const MassPath& path,
                                           std::size_t n, Rng& rng,
                                           const ModelParams& p) {
  CoalescentState st(n);
  BackwardClock bc = build_backward_clock(path, p.b, kConditionedRateCap);
  double window = path.t_end() - path.grid.front();

  double tau = 0.0;
  while (st.block_count() > 1) {
    double k = static_cast<double>(st.block_count());
    double pairs = 0.5 * k * (k - 1.0);
    tau += rng.exp_mean(1.0 / pairs);
    if (tau >= bc.total()) break;
    double sb = bc.backward_time(tau);
    std::size_t bi = rng.uniform_index(st.block_count());
    std::size_t bj = rng.uniform_index(st.block_count() - 1);
    if (bj >= bi) ++bj;
    st.merge_blocks(bi, bj, sb);
  }
  if (bc.capped && st.block_count() > 1) {
    // the rate integral diverged: realize the proven coalescence to a
    // single block at the cap location
    double sb = bc.s.back();
    while (st.block_count() > 1) st.merge_blocks(0, 1, sb);
    st.mark_forced();
  }
  st.advance_to(window);
  return st;
}

std::optional<double> pair_coalescence_backward(const MassPath& path,
                                                const ModelParams& p,
                                                Rng& rng) {
  BackwardClock bc = build_backward_clock(path, p.b, kConditionedRateCap);
  double e = rng.exp_mean(1.0);
  if (e >= bc.total()) {
    if (bc.capped) return bc.s.back();
    return std::nullopt;
  }
  return bc.backward_time(e);
}

DualEstimate spatial_dual_moment(const std::vector<double>& init_mass,
                                 const std::vector<int>& xi, double t,
                                 const ModelParams& p,
                                 const SpatialDualConfig& cfg, std::size_t n_mc,
                                 Rng& rng) {
  if (xi.empty() || xi.size() > 2)
    throw std::invalid_argument("spatial_dual_moment: degree 1 or 2");
  int sites = cfg.sites;
  if (static_cast<int>(init_mass.size()) != sites)
    throw std::invalid_argument("init_mass size must match sites");

  auto step_site = [&](int site) {
    if (cfg.uniform_kernel) {
      int jump = 1 + static_cast<int>(rng.uniform_index(
                         static_cast<std::size_t>(sites - 1)));
      return (site + jump) % sites;
    }
    if (sites == 2) return 1 - site;
    return rng.bernoulli(0.5) ? (site + 1) % sites
                              : (site + sites - 1) % sites;
  };

  double acc = 0.0, acc2 = 0.0;
  for (std::size_t rep = 0; rep < n_mc; ++rep) {
    // blocks: sites of surviving lineages
    std::vector<int> loc = xi;
    double clock = 0.0;
    double log_w = 0.0;
    while (true) {
      std::size_t k = loc.size();
      double colocated = 0.0;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
          if (loc[i] == loc[j]) colocated += 1.0;
      double mig_rate = cfg.cmig * static_cast<double>(k);
      double coal_rate = p.b * colocated;
      double total = mig_rate + coal_rate;
      double next = total > 0.0 ? clock + rng.exp_mean(1.0 / total) : kInf;
      double upto = std::min(next, t);
      log_w += p.b * colocated * (upto - clock);
      clock = upto;
      if (next >= t) break;
      if (rng.uniform() * total < mig_rate) {
        std::size_t i = rng.uniform_index(k);
        loc[i] = step_site(loc[i]);
      } else {
        // merge a uniformly chosen co-located pair
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = i + 1; j < k; ++j)
            if (loc[i] == loc[j]) pairs.push_back({i, j});
        auto [bi, bj] = pairs[rng.uniform_index(pairs.size())];
        loc.erase(loc.begin() + static_cast<std::ptrdiff_t>(bj));
        (void)bi;
      }
    }
    double h = 1.0;
    for (int site : loc) h *= init_mass[static_cast<std::size_t>(site)];
    double v = h * std::exp(log_w);
    acc += v;
    acc2 += v * v;
  }
  double nmc = static_cast<double>(n_mc);
  double mean = acc / nmc;
  double var = n_mc > 1 ? std::max(0.0, (acc2 - acc * acc / nmc) / (nmc - 1.0))
                        : 0.0;
  DualEstimate out;
  out.value = mean;
  out.std_error = std::sqrt(var / nmc);
  out.effective_sample_size = nmc;
  return out;
}

}  // namespace genlab
