#include "dbap/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "dbap/csv.hpp"

namespace dbap {

double silverman_bandwidth(const Vec& x) {
  const auto n = x.size();
  if (n < 2) throw DataError("silverman_bandwidth: need at least 2 observations");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(x(i))) throw DataError("silverman_bandwidth: non-finite value");
  std::vector<double> s(x.data(), x.data() + n);
  std::sort(s.begin(), s.end());
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  const double sigma = stdev(x);
  if (sigma <= 0.0 && iqr <= 0.0)
    throw DataError("silverman_bandwidth: degenerate distribution (all values identical)");
  const double spread = (iqr > 0.0) ? std::min(sigma, iqr / 1.34) : sigma;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

Vec kernel_cdf_at(const Vec& eval, const Vec& ref, double h) {
  if (!(h > 0)) throw DataError("kernel_cdf: bandwidth must be positive");
  const auto n = ref.size();
  Vec out(eval.size());
  for (Eigen::Index i = 0; i < eval.size(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += norm_cdf((eval(i) - ref(j)) / h);
    out(i) = acc / static_cast<double>(n);
  }
  return out;
}

Vec kernel_cdf(const Vec& x, double h) { return kernel_cdf_at(x, x, h); }

Vec kernel_pdf_at(const Vec& eval, const Vec& ref, double h) {
  if (!(h > 0)) throw DataError("kernel_pdf: bandwidth must be positive");
  const auto n = ref.size();
  Vec out(eval.size());
  for (Eigen::Index i = 0; i < eval.size(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) acc += norm_pdf((eval(i) - ref(j)) / h);
    out(i) = acc / (static_cast<double>(n) * h);
  }
  return out;
}

Vec breve(const Vec& z) { return z * (4.0 / static_cast<double>(z.size())); }
Vec invbreve(const Vec& z) { return z * (static_cast<double>(z.size()) / 4.0); }

NormalizedPredictor normalize_predictor(const PredictorSlice& s, const Vec& price) {
  const auto n = s.x.size();
  if (s.tax == Taxonomy::market)
    throw DataError("normalize_predictor: market column is built from the panel");
  if (s.tax != Taxonomy::exogenous) {
    if (s.tax == Taxonomy::denominator && s.xn.size() != n)
      throw DataError("normalize_predictor: denominator predictor missing x_n component");
    if (s.tax == Taxonomy::numerator && s.xd.size() != n)
      throw DataError("normalize_predictor: numerator predictor missing x_d component");
    if (price.size() != n) throw DataError("normalize_predictor: price vector size mismatch");
  }
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(s.x(i))) throw DataError("normalize_predictor: non-finite raw value");
    y(i) = std::asinh(s.x(i));
  }
  NormalizedPredictor out;
  out.h = silverman_bandwidth(y);
  out.z = kernel_cdf(y, out.h).array() - 0.5;
  out.g = Vec::Zero(n);
  if (s.tax != Taxonomy::exogenous) {
    const Vec dens = kernel_pdf_at(y, y, out.h);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dz_dx = dens(i) / std::sqrt(s.x(i) * s.x(i) + 1.0);
      if (s.tax == Taxonomy::numerator)
        out.g(i) = dz_dx * (price(i) / s.xd(i));
      else
        out.g(i) = -dz_dx * (s.xn(i) / price(i));
    }
  }
  return out;
}

LinearizedPredictor linearize_predictor(const PredictorSlice& s, const Vec& z, const Vec& g,
                                        const Vec& P, const Vec& S) {
  const auto n = z.size();
  LinearizedPredictor out;
  if (s.tax == Taxonomy::exogenous) {
    out.a1 = z;
    out.a2 = 0.0;
    return out;
  }
  if (s.tax == Taxonomy::market)
    throw DataError("linearize_predictor: market column is handled separately");
  out.a2 = median_lower(g);

  // rebuild the raw predictor at the month's median market equity
  const double medP = median_lower(P);
  Vec zbar(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pbar = medP / S(i);  // price the asset would have at median size
    double xbar;
    if (s.tax == Taxonomy::denominator)
      xbar = s.xn(i) / pbar + s.xa(i);
    else
      xbar = pbar / s.xd(i) + s.xa(i);
    zbar(i) = std::asinh(xbar);
  }

  Vec lhs(n);
  for (Eigen::Index i = 0; i < n; ++i) lhs(i) = z(i) - out.a2 * std::log(P(i));

  const double zm = zbar.mean();
  const double denom = (zbar.array() - zm).square().sum();
  if (denom < 1e-12 * static_cast<double>(n)) {
    out.fallback = true;  // constant regressor; pin exactly
    out.a1 = lhs;
    return out;
  }
  const double lm = lhs.mean();
  const double slope = ((zbar.array() - zm) * (lhs.array() - lm)).sum() / denom;
  const double intercept = lm - slope * zm;
  out.a1 = intercept + slope * zbar.array();
  return out;
}

int NormalizedPanel::find(const std::string& name) const {
  for (int k = 0; k < n_cols(); ++k)
    if (cols[k] == name) return k;
  return -1;
}

NormalizedMonth normalize_month(const RawPredictorPanel& rp, const AssetPanel& panel, int t) {
  // restrict to assets present this month
  std::vector<int> idx;
  for (int i = 0; i < panel.n_assets(); ++i)
    if (panel.present(i, t)) idx.push_back(i);
  const int n = static_cast<int>(idx.size());
  const int K = rp.n_predictors();
  NormalizedMonth m;
  m.Z = Mat::Zero(panel.n_assets(), K + 1);
  m.G = Mat::Zero(panel.n_assets(), K + 1);
  m.h = Vec::Constant(K + 1, std::numeric_limits<double>::quiet_NaN());

  const double A = panel.market_total(t);
  const double scale = static_cast<double>(n) / 4.0;
  for (int r = 0; r < n; ++r) {
    const int i = idx[r];
    m.Z(i, 0) = scale * panel.P(i, t) / A;  // invbreve P / A
    m.G(i, 0) = m.Z(i, 0);                  // d/dlog p of (n/4) e^{log P}/A
  }

  Vec price(n);
  for (int r = 0; r < n; ++r) price(r) = panel.price(idx[r], t);
  for (int k = 0; k < K; ++k) {
    PredictorSlice s;
    s.tax = rp.tax[k];
    s.x = Vec(n);
    s.xn = Vec(n);
    s.xd = Vec(n);
    s.xa = Vec(n);
    for (int r = 0; r < n; ++r) {
      const int i = idx[r];
      s.x(r) = rp.x[k](i, t);
      s.xn(r) = rp.xn[k](i, t);
      s.xd(r) = rp.xd[k](i, t);
      s.xa(r) = rp.xa[k](i, t);
    }
    NormalizedPredictor np = normalize_predictor(s, price);
    m.h(k + 1) = np.h;
    for (int r = 0; r < n; ++r) {
      m.Z(idx[r], k + 1) = np.z(r);
      m.G(idx[r], k + 1) = np.g(r);
    }
  }
  return m;
}

NormalizedPanel normalize_panel(const RawPredictorPanel& rp, const AssetPanel& panel, int jobs) {
  NormalizedPanel np;
  np.cols.push_back("market");
  np.tax.push_back(Taxonomy::market);
  for (int k = 0; k < rp.n_predictors(); ++k) {
    np.cols.push_back(rp.names[k]);
    np.tax.push_back(rp.tax[k]);
  }
  np.months = panel.months;
  np.data.resize(panel.n_months());
  parallel_for(panel.n_months(), jobs,
               [&](int t) { np.data[t] = normalize_month(rp, panel, t); });
  return np;
}

void save_bandwidths(const NormalizedPanel& np, const std::filesystem::path& csv) {
  CsvWriter w(csv, {"month", "predictor", "h"});
  for (size_t t = 0; t < np.data.size(); ++t)
    for (int k = 1; k < np.n_cols(); ++k)
      w.row({std::to_string(np.months[t]), np.cols[k], fmt_double(np.data[t].h(k))});
  w.close();
}

}  // namespace dbap
