#pragma once

#include <string>
#include <vector>

#include "dbap/common.hpp"

namespace dbap {

struct ForestConfig {
  int trees = 100;
  int max_depth = 4;
  int max_features = -1;  // -1: about log2(K), at least 1
  int min_leaf = 1;
  bool bootstrap = true;
  uint64_t seed = 1;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double thr = 0.0;  // route left when x <= thr
  int left = -1, right = -1;
  double value = 0.0;  // node sample mean
  int depth = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// CART regression forest with median split points: at every node the
/// candidate threshold for a feature is the node-sample median, and the
/// feature with the largest variance reduction wins (lowest index on ties).
struct Forest {
  ForestConfig cfg;
  std::vector<Tree> trees;
  int n_features = 0;

  struct NodeRef {
    int tree = 0;
    int node = 0;
  };
  std::vector<NodeRef> unique_nodes;  // structural de-duplication by split path
  int raw_node_count = 0;

  /// mean prediction across trees for each row of Z
  Vec predict(const Mat& Z) const;

  /// One column per unique node: assets routed to the node this month,
  /// equal-weighted and rescaled by sqrt(m/N) so that portfolio-level noise is
  /// comparable across nodes and the root column equals iota/N exactly.
  /// Empty nodes yield zero columns and set the matching flag.
  Mat node_weights(const Mat& Z, std::vector<char>* empty_flags = nullptr) const;
};

Forest forest_fit(const Mat& X, const Vec& y, const ForestConfig& cfg);

}  // namespace dbap
