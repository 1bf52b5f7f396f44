#include <doctest.h>

#include <cmath>
#include <map>
#include <stdexcept>

#include "genlab/umspace.hpp"
#include "support.hpp"

using namespace genlab;

namespace {

Dendrogram two_leaf_tree(double m1, double m2, double h) {
  Dendrogram d;
  NodeId a = d.add_leaf(m1);
  NodeId b = d.add_leaf(m2);
  NodeId kids[2] = {a, b};
  d.add_merge(h, kids);
  d.finalize();
  return d;
}

// leaves a,b merge at 1, then c joins at 2; equal masses 1/3
Dendrogram three_leaf_tree() {
  Dendrogram d;
  NodeId a = d.add_leaf(1.0 / 3.0);
  NodeId b = d.add_leaf(1.0 / 3.0);
  NodeId kids[2] = {a, b};
  NodeId ab = d.add_merge(1.0, kids);
  NodeId c = d.add_leaf(1.0 / 3.0);
  NodeId kids2[2] = {ab, c};
  d.add_merge(2.0, kids2);
  d.finalize();
  return d;
}

}  // namespace

TEST_CASE("null and unit trees") {
  CHECK(Dendrogram::null_tree().is_null());
  CHECK(Dendrogram::null_tree().total_mass() == 0.0);
  auto e = Dendrogram::unit_tree();
  CHECK(e.total_mass() == 1.0);
  CHECK(e.leaf_count() == 1);
  CHECK(e.height() == 0.0);
}

TEST_CASE("unit tree sample distance matrix is the one-point space") {
  Rng rng(derive_seed(1, "um.unit"));
  auto e = Dendrogram::unit_tree();
  auto s = sample_distance_matrix(e, 2, rng);
  CHECK(s.entries.at(0, 1) == 0.0);
}

TEST_CASE("two-leaf tree distance split is half-half") {
  Rng rng(derive_seed(1, "um.two"));
  auto d = two_leaf_tree(0.5, 0.5, 1.0);
  int at2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto s = sample_distance_matrix(d, 2, rng);
    double r = s.entries.at(0, 1);
    CHECK((r == 0.0 || r == 2.0));
    if (r == 2.0) ++at2;
  }
  CHECK(std::abs(at2 / static_cast<double>(n) - 0.5) < 0.015);
}

TEST_CASE("3-leaf tree matches brute-force enumeration over ordered triples") {
  auto d = three_leaf_tree();
  // brute force over the 27 ordered triples
  const double dist[3][3] = {{0, 2, 4}, {2, 0, 4}, {4, 4, 0}};
  std::map<double, double> expect;  // r12 marginal
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) expect[dist[i][j]] += 1.0 / 9.0;

  Rng rng(derive_seed(1, "um.three"));
  std::map<double, int> got;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    auto s = sample_distance_matrix(d, 3, rng);
    ++got[s.entries.at(0, 1)];
  }
  for (auto [r, p] : expect)
    CHECK(std::abs(got[r] / static_cast<double>(n) - p) < 0.012);
  // exchangeability: the (0,2) marginal agrees with the (0,1) marginal
  std::map<double, int> got02;
  for (int i = 0; i < n; ++i) {
    auto s = sample_distance_matrix(d, 3, rng);
    ++got02[s.entries.at(0, 2)];
  }
  for (auto [r, p] : expect)
    CHECK(std::abs(got02[r] / static_cast<double>(n) - p) < 0.012);
}

TEST_CASE("sampling the null tree is rejected") {
  Rng rng(derive_seed(1, "um.null"));
  auto d = Dendrogram::null_tree();
  CHECK_THROWS_WITH_AS(sample_distance_matrix(d, 2, rng),
                       "null-tree sampling", std::runtime_error);
}

TEST_CASE("polynomial evaluation: constants and exact enumeration") {
  Rng rng(derive_seed(1, "um.poly"));
  auto d = two_leaf_tree(0.5, 0.5, 1.0);

  auto c0 = evaluate_polynomial(d, Polynomial::constant(0, 3.5), 1, rng);
  CHECK(c0.value == 3.5);
  CHECK(c0.std_error == 0.0);

  auto c1 = evaluate_polynomial(d, Polynomial::constant(1, 2.0), 1, rng);
  CHECK(c1.value == doctest::Approx(2.0 * 1.0));
  CHECK(c1.std_error == 0.0);

  // degree 2, phi(r) = r: enumeration of the 4 ordered pairs gives 1
  Polynomial pr{2, [](const DistanceMatrix& m) { return m.at(0, 1); },
                std::nullopt};
  auto c2 = evaluate_polynomial(d, pr, 1, rng);
  CHECK(c2.value == doctest::Approx(1.0));
  CHECK(c2.std_error == 0.0);

  // Monte Carlo branch agrees (force it with cutoff 0)
  auto mc = evaluate_polynomial(d, pr, 40000, rng, 0);
  CHECK(std::abs(mc.value - 1.0) < 4.0 * mc.std_error + 1e-9);
}

TEST_CASE("h_top caps distances and preserves ball structure") {
  auto d = two_leaf_tree(1.0, 2.0, 3.0);
  auto capped = h_top(d, 1.0);
  CHECK(capped.height() == 1.0);
  CHECK(capped.total_mass() == 3.0);
  CHECK(capped.distance(0, 1) == 2.0);

  // cap above the height leaves the tree alone
  CHECK(dendrogram_equal(h_top(d, 5.0), d));

  Rng rng(derive_seed(1, "um.top"));
  for (int rep = 0; rep < 50; ++rep) {
    auto r = testsupport::random_tree(rng, 8);
    double h = 0.3 + rng.uniform();
    double hp = h * rng.uniform();
    if (hp <= 0.0) continue;
    CHECK(count_balls(h_top(r, h), hp) == count_balls(r, hp));
  }
  CHECK_THROWS_AS(h_top(d, 0.0), std::invalid_argument);
}

TEST_CASE("h_trunk quotients balls and shifts distances") {
  auto d = two_leaf_tree(1.0, 2.0, 3.0);
  // h above the height: single leaf of total mass
  auto tr = h_trunk(d, 4.0);
  CHECK(tr.leaf_count() == 1);
  CHECK(tr.total_mass() == 3.0);

  auto tr2 = h_trunk(d, 1.0);
  CHECK(tr2.leaf_count() == 2);
  CHECK(tr2.distance(0, 1) == doctest::Approx(4.0));  // 6 - 2h

  // trunk-then-count equals count at the original depth
  Rng rng(derive_seed(1, "um.trunk"));
  for (int rep = 0; rep < 50; ++rep) {
    auto r = testsupport::random_tree(rng, 8);
    double h = 0.2 + rng.uniform();
    CHECK(static_cast<long long>(h_trunk(r, h).leaf_count()) ==
          count_balls(r, h));
  }
}

TEST_CASE("concatenation: neutral element, cross distance, associativity") {
  auto e = Dendrogram::unit_tree();
  auto both = concatenate_h(e, e, 1.5);
  CHECK(both.total_mass() == 2.0);
  CHECK(both.distance(0, 1) == 3.0);

  auto a = two_leaf_tree(1.0, 1.0, 0.5);
  CHECK(dendrogram_equal(concatenate_h(a, Dendrogram::null_tree(), 2.0), a));

  Rng rng(derive_seed(1, "um.concat"));
  for (int rep = 0; rep < 30; ++rep) {
    auto x = testsupport::random_tree(rng, 5);
    auto y = testsupport::random_tree(rng, 5);
    auto z = testsupport::random_tree(rng, 5);
    double h = 2.5;
    auto left = concatenate_h(concatenate_h(x, y, h), z, h);
    auto right = concatenate_h(x, concatenate_h(y, z, h), h);
    CHECK(dendrogram_equal(left, right));
    CHECK(dendrogram_equal(concatenate_h(x, y, h), concatenate_h(y, x, h)));
  }
}

TEST_CASE("decompose_balls round-trips through concatenation") {
  Rng rng(derive_seed(1, "um.decomp"));
  for (int rep = 0; rep < 40; ++rep) {
    auto r = testsupport::random_tree(rng, 9);
    double h = 0.2 + rng.uniform() * 1.2;
    auto balls = decompose_balls(r, h);
    CHECK(static_cast<long long>(balls.size()) == count_balls(r, h));
    Dendrogram acc = Dendrogram::null_tree();
    for (const auto& b : balls) {
      CHECK(b.height() < h);
      acc = concatenate_h(acc, b, h);
    }
    CHECK(dendrogram_equal(acc, h_top(r, h)));
  }
}

TEST_CASE("compound poisson forest") {
  Rng rng(derive_seed(1, "um.cpf"));
  auto unit_cluster = [](Rng&) { return Dendrogram::unit_tree(); };
  CHECK(sample_compound_poisson_forest(0.0, unit_cluster, 1.0, rng).is_null());

  // total mass ~ Poisson(theta) when clusters are unit trees
  double theta = 2.5;
  double acc = 0.0;
  int n = 4000;
  for (int i = 0; i < n; ++i)
    acc += sample_compound_poisson_forest(theta, unit_cluster, 1.0, rng)
               .total_mass();
  CHECK(std::abs(acc / n - theta) < 0.1);
}

TEST_CASE("ultrametric inequality holds exactly on random trees") {
  Rng rng(derive_seed(1, "um.ultra"));
  for (int rep = 0; rep < 100; ++rep) {
    auto r = testsupport::random_tree(rng, 10);
    std::size_t L = r.leaf_count();
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j)
        for (std::size_t k = 0; k < L; ++k)
          CHECK(r.distance(i, j) <=
                std::max(r.distance(i, k), r.distance(k, j)));
  }
}

TEST_CASE("json round trip is bit exact") {
  Rng rng(derive_seed(1, "um.json"));
  for (int rep = 0; rep < 25; ++rep) {
    auto r = testsupport::random_tree(rng, 9);
    auto text = r.to_json();
    auto back = Dendrogram::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(dendrogram_equal(back, r));
  }
}

TEST_CASE("zero-mass leaves are pruned eagerly") {
  Dendrogram d;
  NodeId a = d.add_leaf(0.0);
  NodeId b = d.add_leaf(1.5);
  NodeId kids[2] = {a, b};
  d.add_merge(1.0, kids);
  d.finalize();
  CHECK(d.leaf_count() == 1);
  CHECK(d.total_mass() == 1.5);
  CHECK(d.height() == 0.0);  // collapsed single-child merge
}
