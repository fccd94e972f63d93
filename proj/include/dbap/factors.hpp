#pragma once

#include <string>
#include <vector>

#include "dbap/normalize.hpp"

namespace dbap {

/// N x M matrix of factor portfolio weights plus column bookkeeping.
struct FactorWeights {
  Mat W;
  std::vector<std::string> col_names;
  int n_factors() const { return static_cast<int>(W.cols()); }
};

struct FactorMoments {
  Vec Fbar;
  Mat Omega;
  int T_used = 0;
};

/// f(Z) = breve Z: every predictor column becomes a long-short portfolio.
FactorWeights linear_weights(const Mat& Z, const std::vector<std::string>& cols);

/// f(Z) restricted to named columns, order preserved as given.
FactorWeights subset_weights(const Mat& Z, const std::vector<std::string>& all_cols,
                             const std::vector<std::string>& wanted);

/// Mean and covariance of a T x M factor-return history with divisor = count.
FactorMoments factor_moments(const Mat& F_history);

/// Q holds the top-M eigenvectors of Omega1 (orthonormal columns, fixed sign
/// convention, index-order tie break). Reduced weights are W * Q.
Mat pca_reduce_Q(const Mat& Omega1, int M, bool* tie_flag = nullptr);

/// contiguous 4-fold (or k-fold) splitter used by the hyperparameter harness
std::vector<std::pair<int, int>> cv_blocks(int T, int folds);

// ---- IPCA -------------------------------------------------------------------

struct IpcaParams {
  Mat gamma_beta;  // K x M, orthonormal columns
  int iters = 0;
  double objective = 0.0;
};

/// Aligned (Z_t, r_{t+1}) pairs; rows are the assets present at both months.
struct FitSeries {
  std::vector<Mat> Z;  // per pair, n_t x K
  std::vector<Vec> r;  // matching next-month excess returns
  int n_pairs() const { return static_cast<int>(Z.size()); }
};

IpcaParams ipca_fit(const FitSeries& fs, int M, double tol = 1e-8, int max_iter = 500);
FactorWeights ipca_weights(const Mat& Z, const IpcaParams& par, int month_id = -1);

// ---- GKX ---------------------------------------------------------------------

struct GkxParams {
  Mat gamma_A;  // K x M
  Vec gamma_B;  // M
  Mat gamma_beta;  // K x M loading map used during fitting
  int iters = 0;
  double objective = 0.0;
};

GkxParams gkx_fit(const FitSeries& fs, int M, double ridge = 1e-10, double tol = 1e-8,
                  int max_iter = 200);
FactorWeights gkx_weights(const Mat& Z, const GkxParams& par, int month_id = -1);

// ---- NN ----------------------------------------------------------------------

/// Feed-forward map with zero or one tanh hidden layer.
struct Mlp {
  std::vector<Mat> W;
  std::vector<Vec> bias;

  int inputs() const { return W.empty() ? 0 : static_cast<int>(W.front().cols()); }
  int outputs() const { return W.empty() ? 0 : static_cast<int>(W.back().rows()); }
  Vec forward(const Vec& x) const;
  /// Jacobian of outputs with respect to inputs at x
  Mat input_jacobian(const Vec& x) const;

  int n_params() const;
  void to_flat(Vec* theta) const;
  void from_flat(const Vec& theta);
};

Mlp make_mlp(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng);

struct NnParams {
  Mlp g;        // K inputs -> J+1 outputs; first output is mu, rest Gamma
  double zeta = 1.0;
  int J = 1;
};

struct NnFitConfig {
  std::vector<int> hidden;   // {} means linear
  int J = 1;
  double l2_penalty = 0.0;   // lambda on ||theta||_2
  int max_iter = 300;
  double learning_rate = 0.02;
  uint64_t seed = 1;
};

NnParams nn_fit(const FitSeries& fs, const NnFitConfig& cfg);
FactorWeights nn_weights(const Mat& Z, const NnParams& par);

/// Gaussian log-likelihood of one month through the Woodbury/Sylvester forms
/// (never forms an N x N matrix).
double nn_month_loglik(const Vec& resid, const Mat& Gamma, double zeta);

/// Sigma^{-1} v through the Woodbury identity.
Vec woodbury_solve(const Mat& Gamma, double zeta, const Vec& v);
/// log|Sigma| through the Sylvester identity.
double sylvester_logdet(const Mat& Gamma, double zeta, int N);

}  // namespace dbap
