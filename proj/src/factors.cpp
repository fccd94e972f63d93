#include "dbap/factors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace dbap {

FactorWeights linear_weights(const Mat& Z, const std::vector<std::string>& cols) {
  FactorWeights fw;
  fw.W = Z * (4.0 / static_cast<double>(Z.rows()));
  fw.col_names = cols;
  return fw;
}

FactorWeights subset_weights(const Mat& Z, const std::vector<std::string>& all_cols,
                             const std::vector<std::string>& wanted) {
  FactorWeights fw;
  fw.W = Mat(Z.rows(), static_cast<Eigen::Index>(wanted.size()));
  for (size_t c = 0; c < wanted.size(); ++c) {
    auto it = std::find(all_cols.begin(), all_cols.end(), wanted[c]);
    if (it == all_cols.end())
      throw ConfigError("subset_weights: predictor column '" + wanted[c] + "' not available");
    fw.W.col(static_cast<Eigen::Index>(c)) =
        Z.col(it - all_cols.begin()) * (4.0 / static_cast<double>(Z.rows()));
  }
  fw.col_names = wanted;
  return fw;
}

FactorMoments factor_moments(const Mat& F_history) {
  const int T = static_cast<int>(F_history.rows());
  if (T < 2) throw DataError("factor_moments: need at least 2 observations");
  FactorMoments m;
  m.T_used = T;
  m.Fbar = F_history.colwise().mean();
  Mat centered = F_history.rowwise() - m.Fbar.transpose();
  m.Omega = centered.transpose() * centered / static_cast<double>(T);
  return m;
}

Mat pca_reduce_Q(const Mat& Omega1, int M, bool* tie_flag) {
  const int M1 = static_cast<int>(Omega1.rows());
  if (M > M1) throw ConfigError("pca_reduce: M exceeds source dimension");
  Mat sym = 0.5 * (Omega1 + Omega1.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("pca_reduce: eigensolver failed");
  if (tie_flag) {
    *tie_flag = false;
    if (M < M1) {
      const double cut = es.eigenvalues()(M1 - M);
      const double next = es.eigenvalues()(M1 - M - 1);
      if (std::abs(cut - next) <= 1e-12 * std::max(1.0, std::abs(cut))) *tie_flag = true;
    }
  }
  Mat Q(M1, M);
  for (int c = 0; c < M; ++c) {
    Vec v = es.eigenvectors().col(M1 - 1 - c);
    // sign convention: largest-magnitude entry positive, lowest index on ties
    int arg = 0;
    for (int i = 1; i < M1; ++i)
      if (std::abs(v(i)) > std::abs(v(arg)) + 1e-15) arg = i;
    if (v(arg) < 0) v = -v;
    Q.col(c) = v;
  }
  return Q;
}

std::vector<std::pair<int, int>> cv_blocks(int T, int folds) {
  if (folds < 2 || T < folds) throw ConfigError("cv_blocks: need T >= folds >= 2");
  std::vector<std::pair<int, int>> out;
  const int base = T / folds, extra = T % folds;
  int start = 0;
  for (int f = 0; f < folds; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    out.emplace_back(start, start + len - 1);
    start += len;
  }
  return out;
}

}  // namespace dbap
