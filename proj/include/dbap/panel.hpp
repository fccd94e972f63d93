#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dbap/common.hpp"

namespace dbap {

/// How a raw predictor depends on the share price.
///   exogenous   : no price term
///   numerator   : x = p / x_d + x_a
///   denominator : x = x_n / p + x_a
///   market      : the reserved level column, z = (N/4) P / A
enum class Taxonomy { exogenous, numerator, denominator, market };

std::string taxonomy_name(Taxonomy t);
Taxonomy taxonomy_from_name(const std::string& s);

/// Market data in long-format spirit: dense (asset, month) matrices with an
/// explicit presence mask; a missing asset-month is never a silent zero.
///
/// ret/retx are net CRSP-style period returns (0.05 = 5%), Rf is a gross rate.
struct AssetPanel {
  std::vector<std::string> assets;  // ordered, first-appearance order
  std::vector<int> months;          // ordered ascending

  Mat P;        // market equity
  Mat S;        // shares outstanding
  Mat D;        // total dividend paid over the month
  Mat ret;      // net return with dividends
  Mat retx;     // net return without dividends
  Mat cfacshr;  // cumulative share-adjustment factor
  BoolArr present;
  Vec rf;  // gross risk-free rate per month

  int n_assets() const { return static_cast<int>(assets.size()); }
  int n_months() const { return static_cast<int>(months.size()); }

  double price(int i, int t) const { return P(i, t) / S(i, t); }

  /// split-adjusted share growth S_{t+1}/S_t between consecutive months
  double share_adjustment(int i, int t_from, int t_to) const {
    return (S(i, t_to) * cfacshr(i, t_to)) / (S(i, t_from) * cfacshr(i, t_from));
  }

  /// A_t, total market equity of present assets
  double market_total(int t) const;

  /// excess return of asset i from month index t-1 to t (Eq-style definition,
  /// split adjusted); both months must be present
  double excess_return_at(int i, int t) const;

  void validate() const;  // enforces invariants, throws DataError
};

/// Raw characteristics and their exogenous components. The market-level
/// predictor is not stored here; it is derived from the panel by the
/// normalization step and always occupies column 0 of normalized matrices.
struct RawPredictorPanel {
  std::vector<std::string> names;  // one per raw predictor
  std::vector<Taxonomy> tax;       // never Taxonomy::market
  // per predictor: n_assets x n_months, aligned with the AssetPanel
  std::vector<Mat> x, xn, xd, xa;
  BoolArr present;  // shared presence mask (asset, month)

  int n_predictors() const { return static_cast<int>(names.size()); }
  int find(const std::string& name) const;
  void validate(const AssetPanel& panel) const;
};

/// Institutional holdings at quarter months (month id divisible by 3).
struct HoldingsPanel {
  std::vector<std::string> institutions;
  std::vector<char> is_household;
  std::vector<int> months;      // subset of panel months, ascending
  std::vector<Mat> weights;     // per month: J x N portfolio weights
  Mat aum;                      // J x n_months
  void validate(const AssetPanel& panel) const;
  int n_institutions() const { return static_cast<int>(institutions.size()); }
};

// ---- accounting primitives -------------------------------------------------

/// Total dividend implied by the with/without-dividend return pair:
/// D = P * ((1+ret)/(1+retx) - 1). Requires retx > -1.
double compute_dividends(double ret, double retx, double P);

/// Excess return r = (1/dS) * (P_t1 + D_t1) / P_t - Rf, with dS the
/// split-adjusted share growth and Rf the gross risk-free rate.
double excess_return(double P_t, double P_t1, double D_t1, double dS, double Rf);

// ---- csv i/o ----------------------------------------------------------------

// column layouts (header required, decimal text):
//   panel:      asset,month,P,S,D,ret,retx,cfacshr
//   risk-free:  month,Rf
//   predictors: asset,month,predictor,value,taxonomy,x_n,x_d,x_a
//   holdings:   institution,asset,month,weight,aum,is_household

AssetPanel load_panel(const std::filesystem::path& panel_csv,
                      const std::filesystem::path& riskfree_csv);
void save_panel(const AssetPanel& p, const std::filesystem::path& panel_csv,
                const std::filesystem::path& riskfree_csv);

RawPredictorPanel load_predictors(const std::filesystem::path& csv, const AssetPanel& panel);
void save_predictors(const RawPredictorPanel& rp, const AssetPanel& panel,
                     const std::filesystem::path& csv);

HoldingsPanel load_holdings(const std::filesystem::path& csv, const AssetPanel& panel);
void save_holdings(const HoldingsPanel& h, const AssetPanel& panel,
                   const std::filesystem::path& csv);

// ---- synthetic market -------------------------------------------------------

struct SynthConfig {
  int n_assets = 100;
  int n_months = 120;
  int n_predictors = 10;  // raw predictors, market column excluded
  int n_institutions = 8; // including the household
  uint64_t seed = 1;

  double annual_vol = 0.30;      // per-asset volatility of log prices
  double correlation = 0.30;     // pairwise return correlation
  double annual_drift = 0.06;    // expected log price drift
  double dividend_yield = 0.02;  // annualized
  double rf_monthly = 0.0025;    // net risk-free per month

  double aum_pareto_alpha = 1.2;     // institution size dispersion
  double household_share = 0.35;     // typical residual share
  double instrument_strength = 0.9;  // price loading on universe pressure
  double universe_density = 0.45;    // prob. an asset is in a fund's universe
  double index_tilt = 3.0;           // strength of value-weighting inside funds

  // taxonomy shares for predictors beyond the named catalogue
  double extra_exogenous_share = 0.6;
  double extra_denominator_share = 0.2;

  double delist_prob = 0.0;  // per-asset chance of a truncated series

  long long max_cells = 50'000'000;  // refusal cap on n_assets * n_months

  void validate() const;  // throws ConfigError
};

struct SynthOutput {
  AssetPanel panel;
  RawPredictorPanel predictors;
  HoldingsPanel holdings;
};

/// Deterministic synthetic market: prices follow correlated geometric
/// processes, predictor components are consistent with prices, holdings clear
/// the market exactly, and prices load on the holdings-based instrument.
SynthOutput synth_generate(const SynthConfig& cfg);

}  // namespace dbap
