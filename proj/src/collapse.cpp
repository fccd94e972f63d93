#include "dbap/collapse.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

namespace dbap {

void CollapseSpec::validate(int M) const {
  if (lambda0 < 0 || lambda1 < 0 || lambda2 < 0)
    throw ConfigError("collapse: penalties must be nonnegative");
  if (nonzero_count > M)
    throw ConfigError("collapse: nonzero_count exceeds factor count");
  if (method == Method::BPZ && nonzero_count == 0)
    throw ConfigError("collapse: nonzero_count must be in [1, M]");
}

CollapseSpec::Method collapse_method_from_name(const std::string& s) {
  if (s == "bsv") return CollapseSpec::Method::BSV;
  if (s == "kns") return CollapseSpec::Method::KNS;
  if (s == "bpz") return CollapseSpec::Method::BPZ;
  if (s == "dgu") return CollapseSpec::Method::DGU;
  if (s == "unit") return CollapseSpec::Method::Unit;
  throw ConfigError("unknown collapse method '" + s + "' (bsv|kns|bpz|dgu|unit)");
}

std::string collapse_method_name(CollapseSpec::Method m) {
  switch (m) {
    case CollapseSpec::Method::BSV: return "bsv";
    case CollapseSpec::Method::KNS: return "kns";
    case CollapseSpec::Method::BPZ: return "bpz";
    case CollapseSpec::Method::DGU: return "dgu";
    case CollapseSpec::Method::Unit: return "unit";
  }
  return "?";
}

Vec bsv_b(const Vec& Fbar, const Mat& Omega, bool allow_pseudo) {
  Eigen::LDLT<Mat> ldlt(Omega);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Vec b = ldlt.solve(Fbar);
    const double resid = (Omega * b - Fbar).norm();
    if (resid <= 1e-8 * std::max(1.0, Fbar.norm())) return b;
  }
  if (!allow_pseudo) throw NumericError("bsv_b: singular covariance matrix");
  return Omega.completeOrthogonalDecomposition().pseudoInverse() * Fbar;
}

void omega_eigen_trunc(const Mat& Omega, int T_used, Mat* U, Vec* d) {
  const int M = static_cast<int>(Omega.rows());
  Mat sym = 0.5 * (Omega + Omega.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.info() != Eigen::Success) throw NumericError("omega_eigen_trunc: eigensolver failed");
  // eigenvalues ascending; walk from the back
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  const double tol = 1e-12 * std::max(lmax, 1e-300);
  int J = 0;
  for (int i = 0; i < M; ++i)
    if (es.eigenvalues()(i) > tol) ++J;
  const int m = std::max(0, std::min({T_used, M, J}));
  *U = Mat(M, m);
  *d = Vec(m);
  for (int c = 0; c < m; ++c) {
    const int src = M - 1 - c;
    U->col(c) = es.eigenvectors().col(src);
    (*d)(c) = es.eigenvalues()(src);
  }
}

LarsResult lars_lasso_gram(const Mat& G, const Vec& c0, double lambda1, int max_nonzero) {
  const int M = static_cast<int>(G.rows());
  const int target = max_nonzero > 0 ? std::min(max_nonzero, M) : M;
  const double c_stop = std::max(lambda1 / 2.0, 0.0);
  const double eps = 1e-12;

  LarsResult res;
  res.b = Vec::Zero(M);
  Vec c = c0;
  std::vector<int> active;
  std::vector<char> in_active(M, 0);

  auto abs_max_inactive = [&](int* arg) {
    double best = -1.0;
    *arg = -1;
    for (int j = 0; j < M; ++j) {
      if (in_active[j]) continue;
      const double a = std::abs(c(j));
      if (a > best + eps) {
        best = a;
        *arg = j;
      }
    }
    return best;
  };

  bool pending_add = true;
  for (int guard = 0; guard < 8 * M + 16; ++guard) {
    double C;
    if (active.empty()) {
      int j;
      C = abs_max_inactive(&j);
      if (j < 0 || C <= c_stop + eps) break;
      active.push_back(j);
      in_active[j] = 1;
    } else {
      C = 0.0;
      for (int a : active) C = std::max(C, std::abs(c(a)));
      if (C <= c_stop + eps) break;
      if (pending_add) {
        int j;
        const double cm = abs_max_inactive(&j);
        if (j >= 0 && cm >= C - 1e-9 * std::max(1.0, C)) {
          active.push_back(j);
          in_active[j] = 1;
        }
      }
    }
    pending_add = false;

    const int na = static_cast<int>(active.size());
    Vec s(na);
    Mat Gaa(na, na);
    for (int r = 0; r < na; ++r) {
      s(r) = c(active[r]) >= 0 ? 1.0 : -1.0;
      for (int q = 0; q < na; ++q) Gaa(r, q) = G(active[r], active[q]);
    }
    Eigen::LDLT<Mat> ldlt(Gaa);
    Vec w = ldlt.solve(s);
    if (ldlt.info() != Eigen::Success || (Gaa * w - s).norm() > 1e-6 * std::sqrt(double(na))) {
      res.truncated = true;  // rank-deficient active Gram; stop the path here
      break;
    }
    // correlation decay: c_j(gamma) = c_j - gamma * a_j, with a_a = s_a on A
    Vec a = Vec::Zero(M);
    for (int r = 0; r < na; ++r) a += G.col(active[r]) * w(r);

    double C_now = 0.0;
    for (int r = 0; r < na; ++r) C_now = std::max(C_now, std::abs(c(active[r])));

    double gamma = C_now;  // full step to zero correlations (OLS endpoint)
    int join = -1;
    for (int j = 0; j < M; ++j) {
      if (in_active[j]) continue;
      const double d1 = 1.0 - a(j), d2 = 1.0 + a(j);
      if (d1 > eps) {
        const double g = (C_now - c(j)) / d1;
        if (g > eps && g < gamma - eps) {
          gamma = g;
          join = j;
        } else if (g > eps && std::abs(g - gamma) <= eps && join >= 0 && j < join) {
          join = j;
        }
      }
      if (d2 > eps) {
        const double g = (C_now + c(j)) / d2;
        if (g > eps && g < gamma - eps) {
          gamma = g;
          join = j;
        } else if (g > eps && std::abs(g - gamma) <= eps && join >= 0 && j < join) {
          join = j;
        }
      }
    }
    int drop = -1;
    for (int r = 0; r < na; ++r) {
      if (std::abs(w(r)) < eps) continue;
      const double g = -res.b(active[r]) / w(r);
      if (g > eps && g < gamma - eps) {
        gamma = g;
        drop = r;
        join = -1;
      }
    }
    bool stop_at_lambda = false;
    if (C_now - gamma < c_stop) {
      gamma = C_now - c_stop;
      join = -1;
      drop = -1;
      stop_at_lambda = true;
    }

    for (int r = 0; r < na; ++r) res.b(active[r]) += gamma * w(r);
    c -= gamma * a;

    if (stop_at_lambda) break;
    if (drop >= 0) {
      const int v = active[drop];
      res.b(v) = 0.0;
      in_active[v] = 0;
      active.erase(active.begin() + drop);
      continue;  // lasso modification: drop without adding
    }
    if (join >= 0) {
      if (na >= target) break;  // sparsity target reached
      pending_add = true;
      continue;
    }
    break;  // OLS endpoint
  }
  return res;
}

namespace {

Vec penalized_collapse(const Vec& Fbar, const Mat& Omega, int T_used, double lambda0,
                       double lambda1, double lambda2, int nonzero, bool* truncated) {
  const int M = static_cast<int>(Fbar.size());
  Mat U;
  Vec d;
  omega_eigen_trunc(Omega, T_used, &U, &d);
  Vec rhs = Fbar;
  if (lambda0 != 0.0) rhs.array() += lambda0;
  // G = Omega_tilde + lambda2 I, c0 = U U' rhs
  Mat G = U * d.asDiagonal() * U.transpose();
  G.diagonal().array() += lambda2;
  Vec c0 = U * (U.transpose() * rhs);
  LarsResult lr = lars_lasso_gram(G, c0, lambda1, nonzero);
  if (truncated) *truncated = lr.truncated;
  (void)M;
  return lr.b;
}

}  // namespace

Vec kns_b(const Vec& Fbar, const Mat& Omega, int T_used, double lambda1, double lambda2,
          bool* truncated) {
  if (lambda1 < 0 || lambda2 < 0) throw ConfigError("kns_b: penalties must be nonnegative");
  return penalized_collapse(Fbar, Omega, T_used, 0.0, lambda1, lambda2, -1, truncated);
}

Vec bpz_b(const Vec& Fbar, const Mat& Omega, int T_used, double lambda0, int nonzero_count,
          double lambda2, bool* truncated) {
  const int M = static_cast<int>(Fbar.size());
  if (nonzero_count < 1 || nonzero_count > M)
    throw ConfigError("bpz_b: nonzero_count must be in [1, M]");
  if (lambda0 < 0 || lambda2 < 0) throw ConfigError("bpz_b: penalties must be nonnegative");
  return penalized_collapse(Fbar, Omega, T_used, lambda0, 0.0, lambda2, nonzero_count, truncated);
}

Vec dgu_b(const Vec& Fbar) {
  const int M = static_cast<int>(Fbar.size());
  Vec b(M);
  for (int i = 0; i < M; ++i)
    b(i) = (Fbar(i) > 0 ? 1.0 : Fbar(i) < 0 ? -1.0 : 0.0) / static_cast<double>(M);
  return b;
}

Vec collapse_b(const CollapseSpec& spec, const Vec& Fbar, const Mat& Omega, int T_used) {
  const int M = static_cast<int>(Fbar.size());
  spec.validate(M);
  switch (spec.method) {
    case CollapseSpec::Method::BSV:
      return bsv_b(Fbar, Omega, spec.allow_pseudo);
    case CollapseSpec::Method::KNS:
      return kns_b(Fbar, Omega, T_used, spec.lambda1, spec.lambda2);
    case CollapseSpec::Method::BPZ:
      return bpz_b(Fbar, Omega, T_used, spec.lambda0,
                   spec.nonzero_count > 0 ? spec.nonzero_count : M, spec.lambda2);
    case CollapseSpec::Method::DGU:
      return dgu_b(Fbar);
    case CollapseSpec::Method::Unit:
      return Vec::Ones(M);
  }
  throw ConfigError("collapse_b: bad method");
}

double scale_to_market_vol(const Vec& portfolio_returns, const Vec& market_returns) {
  if (portfolio_returns.size() < 12 || market_returns.size() < 12)
    throw DataError("scale_to_market_vol: need at least 12 months of returns");
  const double sp = stdev(portfolio_returns);
  const double sm = stdev(market_returns);
  if (!(sp > 0)) throw NumericError("scale_to_market_vol: zero portfolio volatility");
  return sm / sp;
}

}  // namespace dbap
