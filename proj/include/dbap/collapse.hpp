#pragma once

#include <optional>

#include "dbap/common.hpp"

namespace dbap {

/// Folds M factors into one portfolio. Methods follow the four estimator
/// families plus the trivial unit collapse used by single-factor models.
struct CollapseSpec {
  enum class Method { BSV, KNS, BPZ, DGU, Unit };
  Method method = Method::BSV;
  double lambda0 = 0.0;   // mean shift (BPZ)
  double lambda1 = 0.0;   // L1 penalty (KNS)
  double lambda2 = 0.0;   // ridge penalty (KNS/BPZ)
  int nonzero_count = -1; // LARS sparsity target (BPZ); -1 means M
  bool allow_pseudo = false;

  void validate(int M) const;
};

CollapseSpec::Method collapse_method_from_name(const std::string& s);
std::string collapse_method_name(CollapseSpec::Method m);

/// b = Omega^{-1} Fbar. Singular Omega raises NumericError unless
/// allow_pseudo, in which case the pseudo-inverse solution is returned.
Vec bsv_b(const Vec& Fbar, const Mat& Omega, bool allow_pseudo = false);

/// Elastic-net style collapse solved through the eigen-truncated LARS
/// reformulation; lambda1 = lambda2 = 0 reduces to bsv_b.
Vec kns_b(const Vec& Fbar, const Mat& Omega, int T_used, double lambda1, double lambda2,
          bool* truncated = nullptr);

/// Mean-shifted LARS collapse truncated at a sparsity target.
Vec bpz_b(const Vec& Fbar, const Mat& Omega, int T_used, double lambda0, int nonzero_count,
          double lambda2, bool* truncated = nullptr);

/// b = sign(Fbar)/M with sign(0) = 0.
Vec dgu_b(const Vec& Fbar);

Vec collapse_b(const CollapseSpec& spec, const Vec& Fbar, const Mat& Omega, int T_used);

/// Leverage c > 0 such that stdev(c * portfolio) = stdev(market).
double scale_to_market_vol(const Vec& portfolio_returns, const Vec& market_returns);

// ---- pieces exposed for tests ----------------------------------------------

struct LarsResult {
  Vec b;
  bool truncated = false;  // path ended early on rank trouble
};

/// Lasso-modified LARS on Gram inputs: minimizes (y-Xb)'(y-Xb) + lambda1|b|_1
/// given G = X'X and c0 = X'y. If max_nonzero > 0 the path stops at that many
/// active coefficients. Ties break toward the lowest index.
LarsResult lars_lasso_gram(const Mat& G, const Vec& c0, double lambda1, int max_nonzero = -1);

/// Truncated eigen pieces of Omega: keeps m = min(T, M, J) eigenpairs where J
/// counts eigenvalues above 1e-12 of the largest. U is M x m, d the kept
/// eigenvalues in decreasing order.
void omega_eigen_trunc(const Mat& Omega, int T_used, Mat* U, Vec* d);

}  // namespace dbap
