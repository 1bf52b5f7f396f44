#ifndef GENLAB_RNG_HPP
#define GENLAB_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace genlab {

// 64-bit FNV-1a, used for stream tags and content hashes.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Counter scheme for splittable streams: every (tag, index) pair gets its own
// seed derived from the master seed. No global mutable RNG anywhere.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ fnv1a64(tag)) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return unif_(eng_); }
  double uniform_positive() {
    double u;
    do {
      u = unif_(eng_);
    } while (u <= 0.0);
    return u;
  }
  double normal() { return std::normal_distribution<double>()(eng_); }
  double exp_mean(double mean) {
    return -mean * std::log(uniform_positive());
  }
  long long poisson(double mean) {
    return std::poisson_distribution<long long>(mean)(eng_);
  }
  double gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(eng_);
  }
  // Uniform over {0, ..., n-1}.
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

}  // namespace genlab

#endif  // GENLAB_RNG_HPP
