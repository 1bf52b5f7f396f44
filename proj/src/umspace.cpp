#include "genlab/umspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace genlab {

Dendrogram Dendrogram::point_mass(double mass) {
  Dendrogram d;
  d.add_leaf(mass);
  d.finalize();
  return d;
}

NodeId Dendrogram::add_leaf(double mass, int tag) {
  if (mass < 0.0) throw std::invalid_argument("leaf mass must be >= 0");
  Node n;
  n.mass = mass;
  n.tag = tag;
  n.is_leaf = true;
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Dendrogram::add_merge(double height, std::span<const NodeId> children) {
  if (height < 0.0) throw std::invalid_argument("merge height must be >= 0");
  Node n;
  n.height = height;
  n.is_leaf = false;
  NodeId id = static_cast<NodeId>(nodes_.size());
  NodeId prev = kNoNode;
  for (NodeId c : children) {
    if (nodes_[c].parent != kNoNode)
      throw std::invalid_argument("child already attached");
    if (!nodes_[c].is_leaf && nodes_[c].height > height)
      throw std::invalid_argument("merge height below child height");
    nodes_[c].parent = id;
    nodes_[c].next_sibling = kNoNode;
    if (prev == kNoNode)
      n.first_child = c;
    else
      nodes_[prev].next_sibling = c;
    prev = c;
  }
  nodes_.push_back(n);
  return id;
}

void Dendrogram::finalize() {
  std::vector<Node> old = std::move(nodes_);
  nodes_.clear();
  leaves_.clear();
  roots_.clear();

  // post-order over the old forest
  std::vector<NodeId> order;
  order.reserve(old.size());
  {
    std::vector<std::pair<NodeId, bool>> stack;
    for (std::size_t i = 0; i < old.size(); ++i)
      if (old[i].parent == kNoNode)
        stack.push_back({static_cast<NodeId>(i), false});
    while (!stack.empty()) {
      auto [id, expanded] = stack.back();
      stack.pop_back();
      if (expanded) {
        order.push_back(id);
        continue;
      }
      stack.push_back({id, true});
      for (NodeId c = old[id].first_child; c != kNoNode;
           c = old[c].next_sibling)
        stack.push_back({c, false});
    }
  }

  std::vector<double> subtree_mass(old.size(), 0.0);
  for (NodeId id : order) {
    if (old[id].is_leaf) {
      subtree_mass[id] = old[id].mass;
    } else {
      double m = 0.0;
      for (NodeId c = old[id].first_child; c != kNoNode;
           c = old[c].next_sibling)
        m += subtree_mass[c];
      subtree_mass[id] = m;
    }
  }

  // Rebuild bottom-up: drop zero-mass subtrees, collapse single-child
  // merges, splice children whose merge height equals the parent's
  // (canonical multifurcation).
  std::vector<Node> fresh;
  fresh.reserve(old.size());
  auto fresh_leaf = [&](double mass, int tag) {
    Node n;
    n.mass = mass;
    n.tag = tag;
    n.is_leaf = true;
    fresh.push_back(n);
    return static_cast<NodeId>(fresh.size() - 1);
  };
  auto fresh_merge = [&](double height, const std::vector<NodeId>& kids) {
    Node n;
    n.height = height;
    n.is_leaf = false;
    NodeId id = static_cast<NodeId>(fresh.size());
    NodeId prev = kNoNode;
    for (NodeId c : kids) {
      fresh[c].parent = id;
      fresh[c].next_sibling = kNoNode;
      if (prev == kNoNode)
        n.first_child = c;
      else
        fresh[prev].next_sibling = c;
      prev = c;
    }
    fresh.push_back(n);
    return id;
  };

  std::vector<NodeId> remap(old.size(), kNoNode);
  for (NodeId id : order) {
    if (subtree_mass[id] <= 0.0) continue;
    if (old[id].is_leaf) {
      remap[id] = fresh_leaf(old[id].mass, old[id].tag);
      continue;
    }
    std::vector<NodeId> kids;
    for (NodeId c = old[id].first_child; c != kNoNode;
         c = old[c].next_sibling) {
      if (subtree_mass[c] <= 0.0) continue;
      NodeId nc = remap[c];
      if (!fresh[nc].is_leaf && fresh[nc].height == old[id].height) {
        for (NodeId gc = fresh[nc].first_child; gc != kNoNode;) {
          NodeId next = fresh[gc].next_sibling;
          fresh[gc].parent = kNoNode;
          kids.push_back(gc);
          gc = next;
        }
        fresh[nc].first_child = kNoNode;  // shell, dropped in compaction
      } else {
        kids.push_back(nc);
      }
    }
    if (kids.size() == 1) {
      fresh[kids[0]].parent = kNoNode;
      remap[id] = kids[0];
    } else {
      remap[id] = fresh_merge(old[id].height, kids);
    }
  }

  // Compact to reachable nodes (old roots' images).
  std::vector<char> keep(fresh.size(), 0);
  {
    std::vector<NodeId> stack;
    for (std::size_t i = 0; i < old.size(); ++i)
      if (old[i].parent == kNoNode && remap[i] != kNoNode)
        stack.push_back(remap[i]);
    while (!stack.empty()) {
      NodeId id = stack.back();
      stack.pop_back();
      if (keep[id]) continue;
      keep[id] = 1;
      for (NodeId c = fresh[id].first_child; c != kNoNode;
           c = fresh[c].next_sibling)
        stack.push_back(c);
    }
  }
  std::vector<NodeId> remap2(fresh.size(), kNoNode);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    if (!keep[i]) continue;
    remap2[i] = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(fresh[i]);
  }
  for (Node& n : nodes_) {
    if (n.parent != kNoNode) n.parent = remap2[n.parent];
    if (n.first_child != kNoNode) n.first_child = remap2[n.first_child];
    if (n.next_sibling != kNoNode) n.next_sibling = remap2[n.next_sibling];
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].parent == kNoNode) roots_.push_back(static_cast<NodeId>(i));

  // Canonical form is a single tree: a forest with separation D is the same
  // space as a tree with a root merge at height D (the finite stand-in for
  // the paper-level infinite separation between root components).
  if (roots_.size() > 1) {
    double max_h = height();
    if (root_sep_ < max_h)
      throw std::logic_error("root separation below tree height");
    NodeId top = static_cast<NodeId>(nodes_.size());
    Node n;
    n.height = root_sep_;
    n.is_leaf = false;
    NodeId prev = kNoNode;
    for (NodeId r : roots_) {
      nodes_[r].parent = top;
      nodes_[r].next_sibling = kNoNode;
      if (prev == kNoNode)
        n.first_child = r;
      else
        nodes_[prev].next_sibling = r;
      prev = r;
    }
    nodes_.push_back(n);
    roots_.assign(1, top);
    forest_annotation_ = true;
  }

  total_mass_ = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf) {
      leaves_.push_back(static_cast<NodeId>(i));
      total_mass_ += nodes_[i].mass;
    }
  }
  mass_prefix_.clear();
  mass_prefix_.reserve(leaves_.size());
  double acc = 0.0;
  for (NodeId l : leaves_) {
    acc += nodes_[l].mass;
    mass_prefix_.push_back(acc);
  }
}

double Dendrogram::height() const {
  double h = 0.0;
  for (const Node& n : nodes_)
    if (!n.is_leaf) h = std::max(h, n.height);
  return h;
}

double Dendrogram::distance(std::size_t leaf_a, std::size_t leaf_b) const {
  if (leaf_a == leaf_b) return 0.0;
  NodeId a = leaves_[leaf_a];
  NodeId b = leaves_[leaf_b];
  auto node_height = [&](NodeId id) {
    return nodes_[id].is_leaf ? 0.0 : nodes_[id].height;
  };
  while (a != b) {
    NodeId pa = nodes_[a].parent;
    NodeId pb = nodes_[b].parent;
    if (pa == kNoNode && pb == kNoNode) return 2.0 * root_sep_;
    if (pa == kNoNode) {
      b = pb;
    } else if (pb == kNoNode) {
      a = pa;
    } else if (node_height(pa) <= node_height(pb)) {
      a = pa;
    } else {
      b = pb;
    }
  }
  return 2.0 * node_height(a);
}

std::size_t Dendrogram::sample_leaf(Rng& rng) const {
  if (leaves_.empty() || total_mass_ <= 0.0)
    throw std::runtime_error("null-tree sampling");
  double u = rng.uniform() * total_mass_;
  auto it = std::lower_bound(mass_prefix_.begin(), mass_prefix_.end(), u);
  std::size_t idx = static_cast<std::size_t>(it - mass_prefix_.begin());
  return std::min(idx, leaves_.size() - 1);
}

namespace {

void signature_rec(const Dendrogram& d, NodeId id, std::string& out) {
  const auto& n = d.node(id);
  char buf[64];
  if (n.is_leaf) {
    std::snprintf(buf, sizeof(buf), "L%.17g", n.mass);
    out += buf;
    return;
  }
  std::vector<std::string> kids;
  for (NodeId c = n.first_child; c != kNoNode; c = d.node(c).next_sibling) {
    std::string s;
    signature_rec(d, c, s);
    kids.push_back(std::move(s));
  }
  std::sort(kids.begin(), kids.end());
  std::snprintf(buf, sizeof(buf), "M%.17g(", n.height);
  out += buf;
  for (const auto& k : kids) {
    out += k;
    out += ',';
  }
  out += ')';
}

}  // namespace

std::string Dendrogram::canonical_signature() const {
  std::vector<std::string> parts;
  for (NodeId r : roots_) {
    std::string s;
    signature_rec(*this, r, s);
    parts.push_back(std::move(s));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  if (roots_.size() > 1) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "S%.17g|", root_sep_);
    out += buf;
  }
  for (const auto& p : parts) {
    out += p;
    out += ';';
  }
  return out;
}

bool dendrogram_equal(const Dendrogram& a, const Dendrogram& b) {
  return a.canonical_signature() == b.canonical_signature();
}

std::string Dendrogram::to_json() const {
  nlohmann::json j;
  j["leaves"] = nlohmann::json::array();
  j["merges"] = nlohmann::json::array();
  // Canonical ids: depth-first from the root with children visited in
  // signature order, leaves numbered in visit order, merges in post-order.
  // Structurally equal trees therefore serialize identically.
  std::vector<std::string> sig(nodes_.size());
  std::function<void(NodeId)> sig_of = [&](NodeId id) {
    std::string s;
    signature_rec(*this, id, s);
    sig[id] = std::move(s);
  };
  std::map<NodeId, int> id_of;
  int next_leaf = 0;
  std::vector<NodeId> post_merges;
  std::function<void(NodeId)> walk = [&](NodeId id) {
    const Node& n = nodes_[id];
    if (n.is_leaf) {
      id_of[id] = next_leaf;
      j["leaves"].push_back({{"id", next_leaf}, {"mass", n.mass}});
      ++next_leaf;
      return;
    }
    std::vector<NodeId> kids;
    for (NodeId c = n.first_child; c != kNoNode; c = nodes_[c].next_sibling) {
      if (sig[c].empty()) sig_of(c);
      kids.push_back(c);
    }
    std::sort(kids.begin(), kids.end(),
              [&](NodeId x, NodeId y) { return sig[x] < sig[y]; });
    for (NodeId c : kids) walk(c);
    post_merges.push_back(id);
  };
  for (NodeId r : roots_) walk(r);
  int next_id = next_leaf;
  for (NodeId m : post_merges) id_of[m] = next_id++;
  for (NodeId m : post_merges) {
    std::vector<int> kids;
    for (NodeId c = nodes_[m].first_child; c != kNoNode;
         c = nodes_[c].next_sibling)
      kids.push_back(id_of[c]);
    std::sort(kids.begin(), kids.end());
    j["merges"].push_back(
        {{"id", id_of[m]}, {"height", nodes_[m].height}, {"children", kids}});
  }
  if (forest_annotation_) {
    j["root_separation"] = root_sep_;
    j["separation_convention"] =
        "forest components are joined by the top merge at root_separation; "
        "cross-component distance 2*root_separation stands in for the "
        "paper-level infinite separation";
  }
  return j.dump();
}

Dendrogram Dendrogram::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Dendrogram d;
  std::map<int, NodeId> node_of;
  for (const auto& l : j.at("leaves"))
    node_of[l.at("id").get<int>()] = d.add_leaf(l.at("mass").get<double>());
  for (const auto& m : j.at("merges")) {
    std::vector<NodeId> kids;
    for (const auto& c : m.at("children"))
      kids.push_back(node_of.at(c.get<int>()));
    node_of[m.at("id").get<int>()] =
        d.add_merge(m.at("height").get<double>(), kids);
  }
  if (j.contains("root_separation")) {
    d.set_root_separation(j["root_separation"].get<double>());
    d.forest_annotation_ = true;
  }
  d.finalize();
  return d;
}

// ---------------------------------------------------------------------------

Polynomial Polynomial::constant(int degree, double c) {
  return Polynomial{degree, [c](const DistanceMatrix&) { return c; },
                    std::nullopt};
}

Polynomial Polynomial::mass_indicator(double threshold) {
  return Polynomial{2,
                    [threshold](const DistanceMatrix& m) {
                      return m.at(0, 1) < threshold ? 1.0 : 0.0;
                    },
                    std::nullopt};
}

DistanceMatrixSample sample_distance_matrix(const Dendrogram& tree,
                                            std::size_t n, Rng& rng) {
  if (tree.total_mass() <= 0.0) throw std::runtime_error("null-tree sampling");
  if (n < 2) throw std::invalid_argument("sample_distance_matrix: n >= 2");
  std::vector<std::size_t> pick(n);
  for (auto& p : pick) p = tree.sample_leaf(rng);
  DistanceMatrixSample out;
  out.n = n;
  out.entries = DistanceMatrix(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double r = tree.distance(pick[i], pick[j]);
      out.entries.at(i, j) = r;
      out.entries.at(j, i) = r;
    }
  return out;
}

namespace {

double apply_testfn(const Polynomial& poly, const DistanceMatrix& m) {
  if (poly.trunc_depth) {
    double lim = 2.0 * *poly.trunc_depth;
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j)
        if (!(m.at(i, j) < lim)) return 0.0;
  }
  return poly.testfn(m);
}

double evaluate_exhaustive(const Dendrogram& tree, const Polynomial& poly) {
  std::size_t L = tree.leaf_count();
  std::size_t n = static_cast<std::size_t>(poly.degree);
  DistanceMatrix leaf_d(L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = i + 1; j < L; ++j) {
      double r = tree.distance(i, j);
      leaf_d.at(i, j) = r;
      leaf_d.at(j, i) = r;
    }
  std::vector<std::size_t> idx(n, 0);
  DistanceMatrix m(n);
  double acc = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t k = 0; k < n; ++k) w *= tree.leaf_mass(idx[k]);
    if (w > 0.0) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          double r = leaf_d.at(idx[i], idx[j]);
          m.at(i, j) = r;
          m.at(j, i) = r;
        }
      double v = apply_testfn(poly, m);
      if (v != 0.0) acc += w * v;
    }
    std::size_t k = 0;
    while (k < n && ++idx[k] == L) {
      idx[k] = 0;
      ++k;
    }
    if (k == n) break;
  }
  return acc;
}

}  // namespace

Estimate evaluate_polynomial(const Dendrogram& tree, const Polynomial& poly,
                             std::size_t n_mc, Rng& rng,
                             std::size_t exhaustive_cutoff) {
  if (poly.degree == 0) {
    DistanceMatrix m(0);
    return {apply_testfn(poly, m), 0.0};
  }
  if (tree.is_null()) return {0.0, 0.0};
  if (poly.degree == 1) {
    DistanceMatrix m(1);
    return {apply_testfn(poly, m) * tree.total_mass(), 0.0};
  }
  std::size_t n = static_cast<std::size_t>(poly.degree);
  if (tree.leaf_count() <= exhaustive_cutoff)
    return {evaluate_exhaustive(tree, poly), 0.0};

  if (n_mc < 1) throw std::invalid_argument("evaluate_polynomial: n_mc >= 1");
  double mass_n = std::pow(tree.total_mass(), static_cast<double>(n));
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t rep = 0; rep < n_mc; ++rep) {
    auto s = sample_distance_matrix(tree, n, rng);
    double v = apply_testfn(poly, s.entries);
    acc += v;
    acc2 += v * v;
  }
  double mean = acc / static_cast<double>(n_mc);
  double var = n_mc > 1 ? (acc2 - acc * acc / static_cast<double>(n_mc)) /
                              static_cast<double>(n_mc - 1)
                        : 0.0;
  var = std::max(var, 0.0);
  return {mass_n * mean, mass_n * std::sqrt(var / static_cast<double>(n_mc))};
}

namespace {

// Deep-copy the subtree at src_id into dst, skipping nodes at height >= cap
// (their children are emitted as separate pieces) and shifting the copied
// heights by -shift.
void copy_below(const Dendrogram& src, NodeId src_id, double cap, double shift,
                Dendrogram& dst, std::vector<NodeId>& out_roots) {
  const auto& n = src.node(src_id);
  if (!n.is_leaf && n.height >= cap) {
    for (NodeId c = n.first_child; c != kNoNode; c = src.node(c).next_sibling)
      copy_below(src, c, cap, shift, dst, out_roots);
    return;
  }
  std::function<NodeId(NodeId)> rec = [&](NodeId id) -> NodeId {
    const auto& sn = src.node(id);
    if (sn.is_leaf) return dst.add_leaf(sn.mass, sn.tag);
    std::vector<NodeId> kids;
    for (NodeId c = sn.first_child; c != kNoNode; c = src.node(c).next_sibling)
      kids.push_back(rec(c));
    return dst.add_merge(sn.height - shift, kids);
  };
  out_roots.push_back(rec(src_id));
}

double subtree_mass_of(const Dendrogram& tree, NodeId id) {
  const auto& n = tree.node(id);
  if (n.is_leaf) return n.mass;
  double m = 0.0;
  for (NodeId c = n.first_child; c != kNoNode; c = tree.node(c).next_sibling)
    m += subtree_mass_of(tree, c);
  return m;
}

// Call fn on every maximal subtree of diameter < 2h (the open 2h-balls).
template <typename Fn>
void for_each_ball_root(const Dendrogram& tree, double h, Fn&& fn) {
  std::function<void(NodeId)> walk = [&](NodeId id) {
    const auto& n = tree.node(id);
    if (n.is_leaf || n.height < h) {
      fn(id);
      return;
    }
    for (NodeId c = n.first_child; c != kNoNode; c = tree.node(c).next_sibling)
      walk(c);
  };
  for (NodeId r : tree.roots()) walk(r);
}

}  // namespace

Dendrogram h_top(const Dendrogram& tree, double h) {
  if (h <= 0.0) throw std::invalid_argument("h_top: h > 0 required");
  if (tree.is_null()) return Dendrogram::null_tree();
  if (tree.height() < h) return tree;

  Dendrogram out;
  std::vector<NodeId> pieces;
  for (NodeId r : tree.roots()) copy_below(tree, r, h, 0.0, out, pieces);
  if (pieces.size() > 1) out.add_merge(h, pieces);
  out.finalize();
  return out;
}

Dendrogram h_trunk(const Dendrogram& tree, double h) {
  if (h <= 0.0) throw std::invalid_argument("h_trunk: h > 0 required");
  if (tree.is_null()) return Dendrogram::null_tree();

  Dendrogram out;
  std::function<NodeId(NodeId)> rec = [&](NodeId id) -> NodeId {
    const auto& n = tree.node(id);
    if (n.is_leaf || n.height < h)
      return out.add_leaf(subtree_mass_of(tree, id));
    std::vector<NodeId> kids;
    for (NodeId c = n.first_child; c != kNoNode; c = tree.node(c).next_sibling)
      kids.push_back(rec(c));
    return out.add_merge(n.height - h, kids);
  };
  for (NodeId r : tree.roots()) rec(r);
  out.finalize();
  return out;
}

Dendrogram concatenate_h(const Dendrogram& a, const Dendrogram& b, double h) {
  if (h <= 0.0) throw std::invalid_argument("concatenate_h: h > 0 required");
  if (a.is_null() && b.is_null()) return Dendrogram::null_tree();
  if (a.is_null()) return h_top(b, h);
  if (b.is_null()) return h_top(a, h);

  Dendrogram ta = h_top(a, h);
  Dendrogram tb = h_top(b, h);
  Dendrogram out;
  std::vector<NodeId> pieces;
  for (NodeId r : ta.roots()) copy_below(ta, r, h, 0.0, out, pieces);
  for (NodeId r : tb.roots()) copy_below(tb, r, h, 0.0, out, pieces);
  if (pieces.size() > 1) out.add_merge(h, pieces);
  out.finalize();
  return out;
}

long long count_balls(const Dendrogram& tree, double h) {
  if (tree.is_null()) return 0;
  long long count = 0;
  for_each_ball_root(tree, h, [&](NodeId id) {
    if (subtree_mass_of(tree, id) > 0.0) ++count;
  });
  return count;
}

std::vector<double> ball_masses(const Dendrogram& tree, double h) {
  std::vector<double> out;
  if (tree.is_null()) return out;
  for_each_ball_root(tree, h, [&](NodeId id) {
    double m = subtree_mass_of(tree, id);
    if (m > 0.0) out.push_back(m);
  });
  return out;
}

std::vector<Dendrogram> decompose_balls(const Dendrogram& tree, double h) {
  std::vector<Dendrogram> out;
  if (tree.is_null()) return out;
  for_each_ball_root(tree, h, [&](NodeId id) {
    Dendrogram piece;
    std::vector<NodeId> roots;
    copy_below(tree, id, std::numeric_limits<double>::infinity(), 0.0, piece,
               roots);
    piece.finalize();
    if (!piece.is_null()) out.push_back(std::move(piece));
  });
  return out;
}

Dendrogram sample_compound_poisson_forest(
    double theta, const std::function<Dendrogram(Rng&)>& cluster_sampler,
    double t, Rng& rng) {
  if (theta < 0.0) throw std::invalid_argument("theta >= 0 required");
  long long n = theta > 0.0 ? rng.poisson(theta) : 0;
  Dendrogram acc = Dendrogram::null_tree();
  for (long long i = 0; i < n; ++i)
    acc = concatenate_h(acc, cluster_sampler(rng), t);
  return acc;
}

NodeId copy_into(Dendrogram& dst, const Dendrogram& src) {
  if (src.is_null()) return kNoNode;
  NodeId root = kNoNode;
  std::vector<NodeId> roots;
  for (NodeId r : src.roots()) {
    copy_below(src, r, std::numeric_limits<double>::infinity(), 0.0, dst,
               roots);
  }
  root = roots.size() == 1 ? roots[0] : kNoNode;
  return root;
}

Dendrogram scale_tree(const Dendrogram& tree, double mass_scale,
                      double distance_scale) {
  if (mass_scale <= 0.0 || distance_scale <= 0.0)
    throw std::invalid_argument("scales must be > 0");
  Dendrogram out;
  std::function<NodeId(NodeId)> rec = [&](NodeId id) -> NodeId {
    const auto& n = tree.node(id);
    if (n.is_leaf) return out.add_leaf(n.mass * mass_scale, n.tag);
    std::vector<NodeId> kids;
    for (NodeId c = n.first_child; c != kNoNode; c = tree.node(c).next_sibling)
      kids.push_back(rec(c));
    return out.add_merge(n.height * distance_scale, kids);
  };
  for (NodeId r : tree.roots()) rec(r);
  out.set_root_separation(tree.root_separation() * distance_scale);
  out.finalize();
  return out;
}

}  // namespace genlab
