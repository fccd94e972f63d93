#include <Eigen/Eigenvalues>

#include "dbap/factors.hpp"

namespace dbap {

namespace {

// deterministic starting loadings: principal directions of the managed
// portfolio returns Z_t' r_{t+1}
Mat ipca_init(const FitSeries& fs, int K, int M) {
  Mat acc = Mat::Zero(K, K);
  for (int p = 0; p < fs.n_pairs(); ++p) {
    Vec q = fs.Z[p].transpose() * fs.r[p];
    acc += q * q.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(acc);
  Mat g(K, M);
  for (int c = 0; c < M; ++c) {
    Vec v = es.eigenvectors().col(K - 1 - c);
    int arg = 0;
    for (int i = 1; i < K; ++i)
      if (std::abs(v(i)) > std::abs(v(arg)) + 1e-15) arg = i;
    if (v(arg) < 0) v = -v;
    g.col(c) = v;
  }
  return g;
}

double ipca_objective(const FitSeries& fs, const Mat& gamma, std::vector<Vec>* factors) {
  double obj = 0.0;
  if (factors) factors->assign(fs.n_pairs(), Vec());
  for (int p = 0; p < fs.n_pairs(); ++p) {
    Mat B = fs.Z[p] * gamma;  // n x M betas
    Eigen::LDLT<Mat> ldlt(B.transpose() * B);
    if (ldlt.info() != Eigen::Success)
      throw NumericError("ipca: singular beta gram at pair " + std::to_string(p));
    Vec F = ldlt.solve(B.transpose() * fs.r[p]);
    if (factors) (*factors)[p] = F;
    obj += (fs.r[p] - B * F).squaredNorm();
  }
  return obj;
}

}  // namespace

IpcaParams ipca_fit(const FitSeries& fs, int M, double tol, int max_iter) {
  if (fs.n_pairs() == 0) throw DataError("ipca_fit: empty history");
  const int K = static_cast<int>(fs.Z[0].cols());
  if (fs.n_pairs() <= M) throw DataError("ipca_fit: history shorter than factor count");
  if (M < 1 || M > K) throw ConfigError("ipca_fit: factor count out of range");

  IpcaParams par;
  par.gamma_beta = ipca_init(fs, K, M);
  std::vector<Vec> factors;
  double prev = ipca_objective(fs, par.gamma_beta, &factors);

  for (int it = 0; it < max_iter; ++it) {
    // loading step: least squares over vec(gamma) given factors
    Mat A = Mat::Zero(K * M, K * M);
    Vec rhs = Vec::Zero(K * M);
    for (int p = 0; p < fs.n_pairs(); ++p) {
      const Vec& F = factors[p];
      Mat ZtZ = fs.Z[p].transpose() * fs.Z[p];
      Mat FF = F * F.transpose();
      for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) A.block(a * K, b * K, K, K) += FF(a, b) * ZtZ;
      Vec Zr = fs.Z[p].transpose() * fs.r[p];
      for (int a = 0; a < M; ++a) rhs.segment(a * K, K) += F(a) * Zr;
    }
    Vec g = A.ldlt().solve(rhs);
    for (int a = 0; a < M; ++a) par.gamma_beta.col(a) = g.segment(a * K, K);

    const double obj = ipca_objective(fs, par.gamma_beta, &factors);
    par.iters = it + 1;
    par.objective = obj;
    if (std::abs(prev - obj) < tol * std::max(1.0, prev)) break;
    prev = obj;
  }

  // identification: orthonormal columns with a fixed sign convention
  Eigen::HouseholderQR<Mat> qr(par.gamma_beta);
  Mat Qthin = qr.householderQ() * Mat::Identity(K, M);
  for (int c = 0; c < M; ++c) {
    int arg = 0;
    for (int i = 1; i < K; ++i)
      if (std::abs(Qthin(i, c)) > std::abs(Qthin(arg, c)) + 1e-15) arg = i;
    if (Qthin(arg, c) < 0) Qthin.col(c) = -Qthin.col(c);
  }
  par.gamma_beta = Qthin;
  par.objective = ipca_objective(fs, par.gamma_beta, nullptr);
  return par;
}

FactorWeights ipca_weights(const Mat& Z, const IpcaParams& par, int month_id) {
  const int M = static_cast<int>(par.gamma_beta.cols());
  Mat B = Z * par.gamma_beta;
  Mat gram = B.transpose() * B;
  Eigen::FullPivLU<Mat> lu(gram);
  if (!lu.isInvertible())
    throw NumericError("ipca_weights: singular factor gram at month " + std::to_string(month_id));
  FactorWeights fw;
  fw.W = B * lu.inverse();
  fw.col_names.reserve(M);
  for (int m = 0; m < M; ++m) fw.col_names.push_back("ipca_f" + std::to_string(m + 1));
  return fw;
}

}  // namespace dbap
