#include "dbap/forest.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace dbap {

double Tree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int n = 0;
  while (nodes[n].feature >= 0) n = (x(nodes[n].feature) <= nodes[n].thr) ? nodes[n].left
                                                                          : nodes[n].right;
  return nodes[n].value;
}

namespace {

double lower_median(std::vector<double> v) {
  auto mid = v.begin() + (v.size() - 1) / 2;
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

struct Builder {
  const Mat& X;
  const Vec& y;
  const ForestConfig& cfg;
  const std::vector<int>& feats;  // candidate features for this tree
  Tree* tree;

  int build(std::vector<int>& rows, int depth) {
    TreeNode node;
    node.depth = depth;
    double sum = 0.0;
    for (int r : rows) sum += y(r);
    node.value = sum / static_cast<double>(rows.size());

    const int id = static_cast<int>(tree->nodes.size());
    tree->nodes.push_back(node);
    if (depth >= cfg.max_depth || static_cast<int>(rows.size()) < 2 * cfg.min_leaf)
      return id;

    double sse_parent = 0.0;
    for (int r : rows) sse_parent += (y(r) - node.value) * (y(r) - node.value);

    int best_f = -1;
    double best_thr = 0.0, best_gain = 0.0;
    for (int f : feats) {
      std::vector<double> xs;
      xs.reserve(rows.size());
      for (int r : rows) xs.push_back(X(r, f));
      const double thr = lower_median(xs);
      double sl = 0, sr = 0;
      int nl = 0, nr = 0;
      for (int r : rows) {
        if (X(r, f) <= thr) {
          sl += y(r);
          ++nl;
        } else {
          sr += y(r);
          ++nr;
        }
      }
      if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
      const double ml = sl / nl, mr = sr / nr;
      double sse = 0.0;
      for (int r : rows) {
        const double m = (X(r, f) <= thr) ? ml : mr;
        sse += (y(r) - m) * (y(r) - m);
      }
      const double gain = sse_parent - sse;
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best_f = f;
        best_thr = thr;
      }
    }
    if (best_f < 0) return id;

    std::vector<int> left, right;
    for (int r : rows)
      (X(r, best_f) <= best_thr ? left : right).push_back(r);
    tree->nodes[id].feature = best_f;
    tree->nodes[id].thr = best_thr;
    const int l = build(left, depth + 1);
    tree->nodes[id].left = l;
    const int r = build(right, depth + 1);
    tree->nodes[id].right = r;
    return id;
  }
};

std::string path_signature(const Tree& t, int target) {
  // reconstruct the split path root -> target by walking down
  std::string sig;
  int n = 0;
  while (n != target) {
    const TreeNode& nd = t.nodes[n];
    // target ids are assigned preorder: left subtree occupies (nd.left ... nd.right-1)
    char buf[64];
    if (target >= nd.right) {
      std::snprintf(buf, sizeof(buf), "%d>%.17g;", nd.feature, nd.thr);
      n = nd.right;
    } else {
      std::snprintf(buf, sizeof(buf), "%d<=%.17g;", nd.feature, nd.thr);
      n = nd.left;
    }
    sig += buf;
  }
  return sig;
}

}  // namespace

Forest forest_fit(const Mat& X, const Vec& y, const ForestConfig& cfg) {
  const int n = static_cast<int>(X.rows());
  const int K = static_cast<int>(X.cols());
  if (n == 0 || K == 0) throw ConfigError("forest_fit: empty feature matrix");
  if (y.size() != n) throw DataError("forest_fit: target length mismatch");

  Forest forest;
  forest.cfg = cfg;
  forest.n_features = K;
  int mf = cfg.max_features;
  if (mf <= 0) mf = std::max(1, static_cast<int>(std::lround(std::log2(std::max(2, K)))));
  mf = std::min(mf, K);

  Rng root(cfg.seed);
  forest.trees.resize(cfg.trees);
  for (int ti = 0; ti < cfg.trees; ++ti) {
    Rng rng = root.fork(1000 + ti);
    // feature subset for the tree
    std::vector<int> all(K);
    std::iota(all.begin(), all.end(), 0);
    for (int i = K - 1; i > 0; --i) std::swap(all[i], all[rng.uniform_int(i + 1)]);
    std::vector<int> feats(all.begin(), all.begin() + mf);
    std::sort(feats.begin(), feats.end());

    std::vector<int> rows(n);
    if (cfg.bootstrap)
      for (int i = 0; i < n; ++i) rows[i] = rng.uniform_int(n);
    else
      std::iota(rows.begin(), rows.end(), 0);

    Builder b{X, y, cfg, feats, &forest.trees[ti]};
    b.build(rows, 0);
  }

  std::map<std::string, char> seen;
  for (int ti = 0; ti < cfg.trees; ++ti) {
    const Tree& t = forest.trees[ti];
    forest.raw_node_count += static_cast<int>(t.nodes.size());
    for (int ni = 0; ni < static_cast<int>(t.nodes.size()); ++ni) {
      const std::string sig = path_signature(t, ni);
      if (seen.emplace(sig, 1).second) forest.unique_nodes.push_back({ti, ni});
    }
  }
  return forest;
}

Vec Forest::predict(const Mat& Z) const {
  Vec out = Vec::Zero(Z.rows());
  for (const Tree& t : trees)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) out(i) += t.predict_row(Z.row(i));
  return out / static_cast<double>(trees.size());
}

Mat Forest::node_weights(const Mat& Z, std::vector<char>* empty_flags) const {
  const int N = static_cast<int>(Z.rows());
  const int M = static_cast<int>(unique_nodes.size());
  Mat W = Mat::Zero(N, M);
  if (empty_flags) empty_flags->assign(M, 0);

  // route every row through every tree once, tagging node membership
  std::vector<std::vector<std::vector<int>>> members(trees.size());
  for (size_t ti = 0; ti < trees.size(); ++ti)
    members[ti].resize(trees[ti].nodes.size());
  for (int i = 0; i < N; ++i) {
    for (size_t ti = 0; ti < trees.size(); ++ti) {
      const Tree& t = trees[ti];
      int n = 0;
      members[ti][0].push_back(i);
      while (t.nodes[n].feature >= 0) {
        n = (Z(i, t.nodes[n].feature) <= t.nodes[n].thr) ? t.nodes[n].left : t.nodes[n].right;
        members[ti][n].push_back(i);
      }
    }
  }

  for (int c = 0; c < M; ++c) {
    const auto& ref = unique_nodes[c];
    const auto& rows = members[ref.tree][ref.node];
    const int m = static_cast<int>(rows.size());
    if (m == 0) {
      if (empty_flags) (*empty_flags)[c] = 1;
      continue;
    }
    const double w = 1.0 / std::sqrt(static_cast<double>(m) * static_cast<double>(N));
    for (int r : rows) W(r, c) = w;
  }
  return W;
}

}  // namespace dbap
