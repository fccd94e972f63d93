#include <Eigen/Eigenvalues>

#include "dbap/factors.hpp"

namespace dbap {

namespace {

struct MonthCache {
  Vec c;     // (Z'Z)^{-1} Z' r, cross-sectional slopes
  double s;  // iota' r
};

double gkx_objective(const FitSeries& fs, const std::vector<MonthCache>& mc, const Mat& gA,
                     const Vec& gB, const Mat& gbeta) {
  double obj = 0.0;
  for (int t : fs.use_pairs) {
    const Mat& Z = *fs.Z[t];
    Vec F = gA.transpose() * mc[t].c + gB * mc[t].s;
    obj += (fs.returns.col(t + 1) - (Z * gbeta) * F).squaredNorm();
  }
  return obj;
}

}  // namespace

GkxParams gkx_fit(const FitSeries& fs, int M, double ridge, double tol, int max_iter) {
  if (fs.use_pairs.empty()) throw DataError("gkx_fit: empty history");
  const int K = static_cast<int>(fs.Z[fs.use_pairs.front()]->cols());
  if (M < 1 || M > K) throw ConfigError("gkx_fit: factor count out of range");

  std::vector<MonthCache> mc(fs.Z.size());
  for (int t : fs.use_pairs) {
    const Mat& Z = *fs.Z[t];
    Eigen::LDLT<Mat> ldlt(Z.transpose() * Z);
    if (ldlt.info() != Eigen::Success)
      throw NumericError("gkx_fit: singular Z'Z at month index " + std::to_string(t));
    mc[t].c = ldlt.solve(Z.transpose() * fs.returns.col(t + 1));
    mc[t].s = fs.returns.col(t + 1).sum();
  }

  GkxParams par;
  // start from the IPCA initialization for the loading map
  {
    Mat acc = Mat::Zero(K, K);
    for (int t : fs.use_pairs) {
      Vec q = fs.Z[t]->transpose() * fs.returns.col(t + 1);
      acc += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(acc);
    par.gamma_beta = Mat(K, M);
    for (int c = 0; c < M; ++c) par.gamma_beta.col(c) = es.eigenvectors().col(K - 1 - c);
  }
  par.gamma_A = par.gamma_beta;
  par.gamma_B = Vec::Zero(M);

  double prev = std::numeric_limits<double>::infinity();
  const int P = K * M + M;
  for (int it = 0; it < max_iter; ++it) {
    // step 1: factor-weight parameters given betas; linear least squares
    Mat A = Mat::Zero(P, P);
    Vec rhs = Vec::Zero(P);
    for (int t : fs.use_pairs) {
      const Mat& Z = *fs.Z[t];
      Mat B = Z * par.gamma_beta;  // N x M
      // design column for (k, m): B[:, m] * c_k ; for bias m: B[:, m] * s
      Mat BtB = B.transpose() * B;  // M x M
      Vec Btr = B.transpose() * fs.returns.col(t + 1);
      const Vec& c = mc[t].c;
      const double s = mc[t].s;
      for (int m1 = 0; m1 < M; ++m1)
        for (int m2 = 0; m2 < M; ++m2) {
          const double bb = BtB(m1, m2);
          for (int k1 = 0; k1 < K; ++k1) {
            const int i1 = m1 * K + k1;
            for (int k2 = 0; k2 < K; ++k2) A(i1, m2 * K + k2) += bb * c(k1) * c(k2);
            A(i1, K * M + m2) += bb * c(k1) * s;
            A(K * M + m2, i1) += bb * c(k1) * s;
          }
          A(K * M + m1, K * M + m2) += bb * s * s;
        }
      for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) rhs(m * K + k) += Btr(m) * c(k);
        rhs(K * M + m) += Btr(m) * s;
      }
    }
    A.diagonal().array() += ridge;
    Vec theta = A.ldlt().solve(rhs);
    for (int m = 0; m < M; ++m) par.gamma_A.col(m) = theta.segment(m * K, K);
    par.gamma_B = theta.segment(K * M, M);

    // step 2: beta loadings given factors (same shape as the IPCA update)
    Mat L = Mat::Zero(K * M, K * M);
    Vec lrhs = Vec::Zero(K * M);
    for (int t : fs.use_pairs) {
      const Mat& Z = *fs.Z[t];
      Vec F = par.gamma_A.transpose() * mc[t].c + par.gamma_B * mc[t].s;
      Mat ZtZ = Z.transpose() * Z;
      Mat FF = F * F.transpose();
      for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) L.block(a * K, b * K, K, K) += FF(a, b) * ZtZ;
      Vec Zr = Z.transpose() * fs.returns.col(t + 1);
      for (int a = 0; a < M; ++a) lrhs.segment(a * K, K) += F(a) * Zr;
    }
    L.diagonal().array() += ridge;
    Vec g = L.ldlt().solve(lrhs);
    for (int a = 0; a < M; ++a) par.gamma_beta.col(a) = g.segment(a * K, K);

    const double obj = gkx_objective(fs, mc, par.gamma_A, par.gamma_B, par.gamma_beta);
    par.iters = it + 1;
    par.objective = obj;
    if (std::isfinite(prev) && std::abs(prev - obj) < tol * std::max(1.0, prev)) break;
    prev = obj;
  }
  return par;
}

FactorWeights gkx_weights(const Mat& Z, const GkxParams& par, int month_id) {
  const int M = static_cast<int>(par.gamma_A.cols());
  Eigen::FullPivLU<Mat> lu(Z.transpose() * Z);
  if (!lu.isInvertible())
    throw NumericError("gkx_weights: singular Z'Z at month " + std::to_string(month_id));
  FactorWeights fw;
  fw.W = Z * (lu.inverse() * par.gamma_A);
  fw.W.rowwise() += par.gamma_B.transpose();
  fw.col_names.reserve(M);
  for (int m = 0; m < M; ++m) fw.col_names.push_back("gkx_f" + std::to_string(m + 1));
  return fw;
}

}  // namespace dbap
