#ifndef GENLAB_UMSPACE_HPP
#define GENLAB_UMSPACE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genlab/rng.hpp"

namespace genlab {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

// Finite representative of an ultrametric measure space, stored as a merge
// forest. Leaves sit at height 0 and carry mass; internal nodes are merge
// events at increasing heights. The genealogical distance between two
// leaves is twice the height of their lowest common merge node. Leaves in
// different root components are at distance 2 * root_separation() (the
// explicit stand-in for the paper-level "infinite separation" of forests).
//
// Immutable after finalize(); safe to share across worker threads.
class Dendrogram {
 public:
  struct Node {
    double height = 0.0;  // 0 for leaves
    double mass = 0.0;    // leaf mass; 0 for internal nodes
    NodeId parent = kNoNode;
    NodeId first_child = kNoNode;
    NodeId next_sibling = kNoNode;
    int tag = -1;  // caller-owned leaf annotation (e.g. a site mark)
    bool is_leaf = true;
  };

  Dendrogram() = default;

  static Dendrogram null_tree() { return Dendrogram(); }
  static Dendrogram unit_tree() { return point_mass(1.0); }
  static Dendrogram point_mass(double mass);

  // -- construction ---------------------------------------------------------
  NodeId add_leaf(double mass, int tag = -1);
  NodeId add_merge(double height, std::span<const NodeId> children);
  void set_root_separation(double sep) { root_sep_ = sep; }
  // Prunes zero-mass leaves, collapses single-child and equal-height chains,
  // validates the height ordering, and builds the sampling index.
  void finalize();

  // -- observers ------------------------------------------------------------
  bool is_null() const { return leaves_.empty(); }
  double total_mass() const { return total_mass_; }
  std::size_t leaf_count() const { return leaves_.size(); }
  const std::vector<NodeId>& leaves() const { return leaves_; }
  const std::vector<NodeId>& roots() const { return roots_; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  std::size_t node_count() const { return nodes_.size(); }
  double leaf_mass(std::size_t leaf_index) const {
    return nodes_[leaves_[leaf_index]].mass;
  }
  // Height of the tallest merge node (0 for a bare leaf / null tree).
  double height() const;
  double root_separation() const { return root_sep_; }

  // Distance between leaves given by leaf *indices* (positions in leaves()).
  double distance(std::size_t leaf_a, std::size_t leaf_b) const;

  // Mass-proportional leaf index draw.
  std::size_t sample_leaf(Rng& rng) const;

  // Structural equality up to leaf/child relabeling (exact doubles).
  std::string canonical_signature() const;

  std::string to_json() const;
  static Dendrogram from_json(const std::string& text);

 private:
  std::vector<Node> nodes_;
  std::vector<NodeId> leaves_;
  std::vector<NodeId> roots_;
  std::vector<double> mass_prefix_;
  double total_mass_ = 0.0;
  double root_sep_ = 0.0;
  // Whether the root merge is the finite stand-in for forest separation
  // (kept so serialization records the convention).
  bool forest_annotation_ = false;
};

bool dendrogram_equal(const Dendrogram& a, const Dendrogram& b);

// Upper-triangular matrix of pairwise distances of n sampled points.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), v_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double& at(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }

 private:
  std::size_t n_;
  std::vector<double> v_;
};

struct DistanceMatrixSample {
  std::size_t n = 0;
  DistanceMatrix entries{0};
};

// Test function phi of a polynomial of fixed degree, optionally truncated:
// the truncated variant multiplies phi by prod 1{r_ij < 2h}.
struct Polynomial {
  int degree = 0;
  std::function<double(const DistanceMatrix&)> testfn;
  std::optional<double> trunc_depth;

  static Polynomial constant(int degree, double c);
  static Polynomial mass_indicator(double threshold);  // deg 2, 1{r < thr}
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Exact evaluation is used whenever leaf_count <= exhaustive_cutoff.
inline constexpr std::size_t kExhaustiveCutoff = 12;

DistanceMatrixSample sample_distance_matrix(const Dendrogram& tree,
                                            std::size_t n, Rng& rng);

Estimate evaluate_polynomial(const Dendrogram& tree, const Polynomial& poly,
                             std::size_t n_mc, Rng& rng,
                             std::size_t exhaustive_cutoff = kExhaustiveCutoff);

Dendrogram h_top(const Dendrogram& tree, double h);
Dendrogram h_trunk(const Dendrogram& tree, double h);
Dendrogram concatenate_h(const Dendrogram& a, const Dendrogram& b, double h);
long long count_balls(const Dendrogram& tree, double h);
std::vector<Dendrogram> decompose_balls(const Dendrogram& tree, double h);

// Masses of the open 2h-balls (the trunk leaf masses); cheaper than a full
// decomposition when only masses are needed.
std::vector<double> ball_masses(const Dendrogram& tree, double h);

Dendrogram sample_compound_poisson_forest(
    double theta, const std::function<Dendrogram(Rng&)>& cluster_sampler,
    double t, Rng& rng);

// Scale all leaf masses (mass_scale) and all heights (distance_scale / 2 on
// distances means heights scale by distance_scale).
Dendrogram scale_tree(const Dendrogram& tree, double mass_scale,
                      double distance_scale);

// Copy src (single tree or null) into dst under construction; returns the
// copied root, or kNoNode for a null src.
NodeId copy_into(Dendrogram& dst, const Dendrogram& src);

}  // namespace genlab

#endif  // GENLAB_UMSPACE_HPP
