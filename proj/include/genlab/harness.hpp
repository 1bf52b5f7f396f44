#ifndef GENLAB_HARNESS_HPP
#define GENLAB_HARNESS_HPP

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "genlab/rng.hpp"

namespace genlab {

struct ExperimentConfig {
  std::string model = "feller";  // feller|immigration|moran|cox|yaglom|
                                 // backbone|kallenberg|spatial|verify-duality
  double b = 1.0;
  double a = 0.0;
  double c = 0.0;
  double x0 = 1.0;
  double t = 1.0;
  double h = 0.5;
  double T = 0.0;          // survival horizon where applicable
  std::size_t N = 400;     // particle mass scale
  std::size_t K = 500;     // Moran particle count
  int degree = 2;          // duality degree
  int sites = 2;
  double cmig = 1.0;
  std::string kernel = "nn";  // nn | uniform
  std::size_t replicates = 1000;
  std::size_t grid_steps = 512;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  std::string kernels_backend = "auto";
  std::string out_dir = "runs";

  std::string to_canonical_json() const;
};

struct RunRecord {
  std::string config_json;
  std::string content_hash;  // fnv-1a of the canonical config
  std::string outputs_json;
  std::string started_at;
  std::string finished_at;
  double runtime_seconds = 0.0;

  std::string to_json() const;
};

// Validates, dispatches on model, aggregates replicates deterministically.
RunRecord run_experiment(const ExperimentConfig& cfg);

// Content-addressed persistence: <out_dir>/<content_hash>.json. Returns the
// path written.
std::string write_run_record(const RunRecord& rec, const std::string& out_dir);

// Replicate pool: workers pull indices from a shared counter; results land
// at their index and are reduced in index order, so the outcome does not
// depend on scheduling.
template <typename Fn>
void parallel_for_indices(std::size_t n, int threads, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  unsigned want = threads > 0 ? static_cast<unsigned>(threads)
                              : (hw > 0 ? hw : 1);
  if (want <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < want; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

// Deterministic replicate map: replicate i runs on a stream derived from
// (master, tag, i).
template <typename T, typename Fn>
std::vector<T> replicate_map(std::size_t n, std::uint64_t master,
                             std::string_view tag, int threads, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for_indices(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(master, tag, i));
    out[i] = fn(rng, i);
  });
  return out;
}

}  // namespace genlab

#endif  // GENLAB_HARNESS_HPP
