#pragma once

#include "dbap/panel.hpp"

namespace dbap {

/// Silverman rule-of-thumb bandwidth, h = 0.9 min(sigma, IQR/1.34) n^{-1/5}.
/// A zero IQR falls back to the sigma term alone; a fully degenerate sample
/// (sigma = 0 as well) raises DataError.
double silverman_bandwidth(const Vec& x);

/// Smoothed empirical cdf of x evaluated at its own points,
/// K(x)_i = (1/n) sum_j Phi((x_i - x_j)/h). The self term is kept.
Vec kernel_cdf(const Vec& x, double h);

/// K evaluated at arbitrary points against a frozen reference sample.
Vec kernel_cdf_at(const Vec& eval, const Vec& ref, double h);

/// Matching density, k(x)_i = (1/(n h)) sum_j phi((x_i - x_j)/h).
Vec kernel_pdf_at(const Vec& eval, const Vec& ref, double h);

/// scale maps used for predictor-weighted portfolios: breve x = 4x/N,
/// invbreve x = Nx/4
Vec breve(const Vec& z);
Vec invbreve(const Vec& z);

struct PredictorSlice {
  Taxonomy tax = Taxonomy::exogenous;
  Vec x;   // raw values
  Vec xn;  // denominator-type numerator component (per share)
  Vec xd;  // numerator-type denominator component
  Vec xa;  // additive exogenous component
};

struct NormalizedPredictor {
  Vec z;     // in [-0.5, 0.5]
  Vec g;     // dz / dlog p, exactly zero for exogenous predictors
  double h;  // bandwidth used
};

/// z = K(ArcSinh(x)) - 0.5 with the analytic own-price gradient:
/// numerator type   g =  k(ArcSinh x)/sqrt(x^2+1) * (p/x_d)
/// denominator type g = -k(ArcSinh x)/sqrt(x^2+1) * (x_n/p)
NormalizedPredictor normalize_predictor(const PredictorSlice& s, const Vec& price);

struct LinearizedPredictor {
  Vec a1;                // per-asset exogenous part
  double a2 = 0.0;       // common log-price slope (median gradient)
  bool fallback = false; // rank-deficient regression fallback used
};

/// Log-linear approximation zdot = a1 + a2 log(P). a2 is the lower median of
/// the gradient column; a1 comes from the cross-sectional regression of
/// z - a2 log(P) on the predictor rebuilt at the month's median market equity.
LinearizedPredictor linearize_predictor(const PredictorSlice& s, const Vec& z, const Vec& g,
                                        const Vec& P, const Vec& S);

/// One month of normalized predictors. Column 0 is the reserved market level
/// column z = (N/4) P / A whose gradient equals itself; raw predictors follow
/// in RawPredictorPanel order.
struct NormalizedMonth {
  Mat Z;  // N x (1 + K)
  Mat G;  // dZ / dlog p, same shape
  Vec h;  // bandwidth per column (NaN for the market column)
};

struct NormalizedPanel {
  std::vector<std::string> cols;  // "market", then raw predictor names
  std::vector<Taxonomy> tax;      // col 0 = Taxonomy::market
  std::vector<int> months;
  std::vector<NormalizedMonth> data;

  int n_cols() const { return static_cast<int>(cols.size()); }
  int find(const std::string& name) const;
};

NormalizedMonth normalize_month(const RawPredictorPanel& rp, const AssetPanel& panel, int t);
NormalizedPanel normalize_panel(const RawPredictorPanel& rp, const AssetPanel& panel,
                                int jobs = 1);

/// bandwidth audit export: month,predictor,h
void save_bandwidths(const NormalizedPanel& np, const std::filesystem::path& csv);

}  // namespace dbap
