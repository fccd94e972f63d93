#include <cmath>

#include "dbap/factors.hpp"

namespace dbap {

Vec Mlp::forward(const Vec& x) const {
  Vec a = x;
  for (size_t l = 0; l < W.size(); ++l) {
    a = W[l] * a + bias[l];
    if (l + 1 < W.size()) a = a.array().tanh();
  }
  return a;
}

Mat Mlp::input_jacobian(const Vec& x) const {
  if (W.size() == 1) return W[0];
  Vec z1 = W[0] * x + bias[0];
  Vec d = 1.0 - z1.array().tanh().square();
  return W[1] * d.asDiagonal() * W[0];
}

int Mlp::n_params() const {
  int n = 0;
  for (size_t l = 0; l < W.size(); ++l)
    n += static_cast<int>(W[l].size() + bias[l].size());
  return n;
}

void Mlp::to_flat(Vec* theta) const {
  theta->resize(n_params());
  int off = 0;
  for (size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index j = 0; j < W[l].size(); ++j) (*theta)(off++) = W[l].data()[j];
    for (Eigen::Index j = 0; j < bias[l].size(); ++j) (*theta)(off++) = bias[l](j);
  }
}

void Mlp::from_flat(const Vec& theta) {
  int off = 0;
  for (size_t l = 0; l < W.size(); ++l) {
    for (Eigen::Index j = 0; j < W[l].size(); ++j) W[l].data()[j] = theta(off++);
    for (Eigen::Index j = 0; j < bias[l].size(); ++j) bias[l](j) = theta(off++);
  }
}

Mlp make_mlp(int inputs, const std::vector<int>& hidden, int outputs, Rng& rng) {
  if (hidden.size() > 1) throw ConfigError("mlp: at most one hidden layer is supported");
  Mlp m;
  std::vector<int> dims;
  dims.push_back(inputs);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(outputs);
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const double scale = 0.5 / std::sqrt(static_cast<double>(dims[l]));
    Mat w(dims[l + 1], dims[l]);
    for (Eigen::Index j = 0; j < w.size(); ++j) w.data()[j] = scale * rng.normal();
    m.W.push_back(w);
    m.bias.push_back(Vec::Zero(dims[l + 1]));
  }
  return m;
}

Vec woodbury_solve(const Mat& Gamma, double zeta, const Vec& v) {
  if (!(zeta > 0)) throw NumericError("woodbury_solve: zeta must be positive");
  const int J = static_cast<int>(Gamma.cols());
  Mat B = Mat::Identity(J, J) * zeta + Gamma.transpose() * Gamma;
  Vec inner = B.ldlt().solve(Gamma.transpose() * v);
  return (v - Gamma * inner) / zeta;
}

double sylvester_logdet(const Mat& Gamma, double zeta, int N) {
  if (!(zeta > 0)) throw NumericError("sylvester_logdet: zeta must be positive");
  const int J = static_cast<int>(Gamma.cols());
  Mat inner = Mat::Identity(J, J) + Gamma.transpose() * Gamma / zeta;
  Eigen::LLT<Mat> llt(inner);
  if (llt.info() != Eigen::Success) throw NumericError("sylvester_logdet: factorization failed");
  double ld = 0.0;
  for (int j = 0; j < J; ++j) ld += 2.0 * std::log(llt.matrixL()(j, j));
  return static_cast<double>(N) * std::log(zeta) + ld;
}

double nn_month_loglik(const Vec& resid, const Mat& Gamma, double zeta) {
  const int N = static_cast<int>(resid.size());
  const double quad = resid.dot(woodbury_solve(Gamma, zeta, resid));
  const double logdet = sylvester_logdet(Gamma, zeta, N);
  return -0.5 * N * std::log(2.0 * 3.14159265358979323846) - 0.5 * logdet - 0.5 * quad;
}

namespace {

struct MonthGrad {
  double loglik = 0.0;
  Mat gout;     // N x (J+1) gradient wrt network outputs
  double dzeta = 0.0;
};

MonthGrad nn_month_grad(const Vec& r, const Mat& out, double zeta, int J) {
  const int N = static_cast<int>(r.size());
  MonthGrad g;
  Vec mu = out.col(0);
  Mat Gamma = out.rightCols(J);
  Vec e = r - mu;

  Mat B = Mat::Identity(J, J) * zeta + Gamma.transpose() * Gamma;
  Eigen::LDLT<Mat> ldlt(B);
  Mat Binv = ldlt.solve(Mat::Identity(J, J));
  Vec u = (e - Gamma * (Binv * (Gamma.transpose() * e))) / zeta;  // Sigma^{-1} e

  g.loglik = nn_month_loglik(e, Gamma, zeta);
  g.gout = Mat(N, J + 1);
  g.gout.col(0) = u;  // dl/dmu
  // dl/dGamma = -Gamma B^{-1} + u (u' Gamma)
  Mat dG = -Gamma * Binv + u * (u.transpose() * Gamma);
  g.gout.rightCols(J) = dG;

  const double trSigInv = (static_cast<double>(N - J)) / zeta + Binv.trace();
  g.dzeta = -0.5 * trSigInv + 0.5 * u.squaredNorm();
  return g;
}

}  // namespace

NnParams nn_fit(const FitSeries& fs, const NnFitConfig& cfg) {
  if (fs.use_pairs.empty()) throw DataError("nn_fit: empty history");
  const int K = static_cast<int>(fs.Z[fs.use_pairs.front()]->cols());
  const int J = cfg.J;
  if (J < 1) throw ConfigError("nn_fit: J must be >= 1");

  Rng rng(cfg.seed);
  NnParams par;
  par.J = J;
  par.g = make_mlp(K, cfg.hidden, J + 1, rng);

  double var0 = 0.0;
  int cnt = 0;
  for (int t : fs.use_pairs) {
    var0 += fs.returns.col(t + 1).squaredNorm();
    cnt += static_cast<int>(fs.returns.rows());
  }
  double s = std::log(std::max(var0 / std::max(cnt, 1), 1e-8));  // zeta = exp(s)

  Vec theta;
  par.g.to_flat(&theta);
  const int P = static_cast<int>(theta.size()) + 1;
  Vec full(P);
  full.head(P - 1) = theta;
  full(P - 1) = s;

  Vec m = Vec::Zero(P), v = Vec::Zero(P);
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  const bool linear = cfg.hidden.empty();

  for (int it = 1; it <= cfg.max_iter; ++it) {
    par.g.from_flat(full.head(P - 1));
    const double zeta = std::exp(full(P - 1));

    Vec grad = Vec::Zero(P);
    double obj = 0.0;
    for (int t : fs.use_pairs) {
      const Mat& Z = *fs.Z[t];
      const int N = static_cast<int>(Z.rows());
      Mat out(N, J + 1);
      Mat A1;  // hidden activations when present
      if (linear) {
        out = Z * par.g.W[0].transpose();
        out.rowwise() += par.g.bias[0].transpose();
      } else {
        Mat Z1 = Z * par.g.W[0].transpose();
        Z1.rowwise() += par.g.bias[0].transpose();
        A1 = Z1.array().tanh();
        out = A1 * par.g.W[1].transpose();
        out.rowwise() += par.g.bias[1].transpose();
      }
      MonthGrad mg = nn_month_grad(fs.returns.col(t + 1), out, zeta, J);
      obj += mg.loglik;
      grad(P - 1) += mg.dzeta * zeta;  // chain through zeta = exp(s)

      // backprop parameter gradients
      int off = 0;
      if (linear) {
        Mat dW0 = mg.gout.transpose() * Z;
        Vec db0 = mg.gout.colwise().sum();
        for (Eigen::Index j = 0; j < dW0.size(); ++j) grad(off + j) += dW0.data()[j];
        off += static_cast<int>(dW0.size());
        for (Eigen::Index j = 0; j < db0.size(); ++j) grad(off + j) += db0(j);
      } else {
        Mat delta1 = (mg.gout * par.g.W[1]).array() * (1.0 - A1.array().square());
        Mat dW0 = delta1.transpose() * Z;
        Vec db0 = delta1.colwise().sum();
        Mat dW1 = mg.gout.transpose() * A1;
        Vec db1 = mg.gout.colwise().sum();
        for (Eigen::Index j = 0; j < dW0.size(); ++j) grad(off + j) += dW0.data()[j];
        off += static_cast<int>(dW0.size());
        for (Eigen::Index j = 0; j < db0.size(); ++j) grad(off + j) += db0(j);
        off += static_cast<int>(db0.size());
        for (Eigen::Index j = 0; j < dW1.size(); ++j) grad(off + j) += dW1.data()[j];
        off += static_cast<int>(dW1.size());
        for (Eigen::Index j = 0; j < db1.size(); ++j) grad(off + j) += db1(j);
      }
    }
    if (cfg.l2_penalty > 0) {
      const double nrm = std::max(full.norm(), 1e-12);
      obj -= cfg.l2_penalty * nrm;
      grad -= cfg.l2_penalty / nrm * full;
    }
    if (!std::isfinite(obj))
      throw NumericError("nn_fit: non-finite objective at iteration " + std::to_string(it) +
                         " (zeta=" + std::to_string(zeta) + ")");

    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad.array().square().matrix();
    const double c1 = 1 - std::pow(b1, it), c2 = 1 - std::pow(b2, it);
    full += (cfg.learning_rate * (m / c1).array() / ((v / c2).array().sqrt() + adam_eps))
                .matrix();
  }
  par.g.from_flat(full.head(P - 1));
  par.zeta = std::exp(full(P - 1));
  return par;
}

FactorWeights nn_weights(const Mat& Z, const NnParams& par) {
  const int N = static_cast<int>(Z.rows());
  const int J = par.J;
  Mat out(N, J + 1);
  for (int i = 0; i < N; ++i) out.row(i) = par.g.forward(Z.row(i).transpose()).transpose();
  Vec mu = out.col(0);
  Mat Gamma = out.rightCols(J);
  FactorWeights fw;
  fw.W = woodbury_solve(Gamma, par.zeta, mu);
  fw.col_names = {"nn_mve"};
  return fw;
}

}  // namespace dbap
