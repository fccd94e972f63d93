#include <algorithm>
#include <cmath>

#include "dbap/panel.hpp"

namespace dbap {

void SynthConfig::validate() const {
  if (n_assets < 2) throw ConfigError("synth: n_assets must be >= 2");
  if (n_months < 24) throw ConfigError("synth: n_months must be >= 24");
  if (n_predictors < 2) throw ConfigError("synth: n_predictors must be >= 2");
  if (n_institutions < 1) throw ConfigError("synth: n_institutions must be >= 1");
  if (static_cast<long long>(n_assets) * n_months > max_cells)
    throw ConfigError("synth: n_assets * n_months exceeds the configured cap");
  if (correlation <= -1.0 / (n_assets - 1) || correlation >= 1.0)
    throw ConfigError("synth: correlation outside valid range");
  if (annual_vol <= 0) throw ConfigError("synth: annual_vol must be positive");
  if (household_share <= 0 || household_share >= 1)
    throw ConfigError("synth: household_share must be in (0,1)");
}

namespace {

struct CatalogueEntry {
  const char* name;
  Taxonomy tax;
};

// the first predictors carry the names the subset models look up
const CatalogueEntry kCatalogue[] = {
    {"beme", Taxonomy::denominator},       {"lme", Taxonomy::numerator},
    {"investment", Taxonomy::exogenous},   {"prof", Taxonomy::exogenous},
    {"roe", Taxonomy::exogenous},          {"cum_return_12_2", Taxonomy::exogenous},
    {"e2p", Taxonomy::denominator},        {"q", Taxonomy::numerator},
    {"s2p", Taxonomy::denominator},        {"rel_to_high_price", Taxonomy::numerator},
};
constexpr int kCatalogueSize = static_cast<int>(sizeof(kCatalogue) / sizeof(kCatalogue[0]));

}  // namespace

SynthOutput synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const int N = cfg.n_assets, T = cfg.n_months, K = cfg.n_predictors;
  const int J = std::max(1, cfg.n_institutions);
  Rng root(cfg.seed);

  SynthOutput out;
  AssetPanel& p = out.panel;
  p.months.resize(T);
  for (int t = 0; t < T; ++t) p.months[t] = t;
  p.assets.resize(N);
  for (int i = 0; i < N; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "A%04d", i);
    p.assets[i] = buf;
  }
  p.P = Mat::Zero(N, T);
  p.S = Mat::Zero(N, T);
  p.D = Mat::Zero(N, T);
  p.ret = Mat::Zero(N, T);
  p.retx = Mat::Zero(N, T);
  p.cfacshr = Mat::Ones(N, T);
  p.present = BoolArr::Constant(N, T, true);
  p.rf = Vec::Constant(T, 1.0 + cfg.rf_monthly);

  // ---- institutions, universes, instrument pressure ------------------------
  Rng inst_rng = root.fork(11);
  Vec size_wt = Vec::Zero(J);  // j = 0 is the household
  for (int j = 1; j < J; ++j)
    size_wt(j) = std::pow(1.0 - inst_rng.uniform(), -1.0 / cfg.aum_pareto_alpha);

  Rng univ_rng = root.fork(12);
  Vec asset_scale = Vec::Zero(N);  // latent fundamental size, drives universe inclusion
  for (int i = 0; i < N; ++i) asset_scale(i) = univ_rng.normal();
  BoolArr universe = BoolArr::Constant(J, N, false);
  universe.row(0).setConstant(true);  // household backstops every asset
  for (int j = 1; j < J; ++j) {
    int count = 0;
    for (int i = 0; i < N; ++i) {
      const double incl =
          cfg.universe_density * (0.6 + 0.8 * norm_cdf(asset_scale(i)));
      if (univ_rng.uniform() < incl) {
        universe(j, i) = true;
        ++count;
      }
    }
    if (count == 0) universe(j, univ_rng.uniform_int(N)) = true;
  }

  Vec pressure = Vec::Zero(N);
  for (int i = 0; i < N; ++i) {
    double s = 1e-12;
    for (int j = 1; j < J; ++j)
      if (universe(j, i)) s += size_wt(j) / std::max(1, static_cast<int>(universe.row(j).count()));
    pressure(i) = std::log(s);
  }
  const double pm = pressure.mean();
  const double ps = std::max(stdev(pressure), 1e-12);
  pressure = (pressure.array() - pm) / ps;

  // ---- prices --------------------------------------------------------------
  const double svol = cfg.annual_vol / std::sqrt(12.0);
  const double drift = cfg.annual_drift / 12.0;
  Rng price_rng = root.fork(13);
  Vec logp0 = Vec::Zero(N);
  for (int i = 0; i < N; ++i) {
    p.S(i, 0) = std::floor(std::exp(std::log(2e6) + 0.8 * price_rng.normal())) + 1.0;
    logp0(i) = std::log(30.0) + 0.9 * asset_scale(i) +
               cfg.instrument_strength * pressure(i) + 0.4 * price_rng.normal();
  }
  Mat logp(N, T);
  logp.col(0) = logp0;
  for (int t = 1; t < T; ++t) {
    const double f = price_rng.normal();
    for (int i = 0; i < N; ++i) {
      const double e = price_rng.normal();
      logp(i, t) = logp(i, t - 1) + drift - 0.5 * svol * svol +
                   svol * (std::sqrt(cfg.correlation) * f +
                           std::sqrt(1.0 - cfg.correlation) * e);
    }
  }

  Rng div_rng = root.fork(14);
  std::vector<char> pays(N);
  for (int i = 0; i < N; ++i) pays[i] = div_rng.uniform() < 0.7 ? 1 : 0;
  for (int i = 0; i < N; ++i) {
    for (int t = 0; t < T; ++t) p.S(i, t) = p.S(i, 0);
    for (int t = 0; t < T; ++t) {
      const double price = std::exp(logp(i, t));
      p.P(i, t) = price * p.S(i, t);
      if (t == 0) continue;
      double d = 0.0;
      if (pays[i])
        d = cfg.dividend_yield / 12.0 * std::exp(logp(i, t - 1)) *
            std::exp(0.2 * div_rng.normal());
      p.D(i, t) = d * p.S(i, t);
      const double prev = std::exp(logp(i, t - 1));
      p.retx(i, t) = price / prev - 1.0;
      p.ret(i, t) = (price + d) / prev - 1.0;
    }
  }

  if (cfg.delist_prob > 0) {
    Rng del_rng = root.fork(15);
    for (int i = 0; i < N; ++i)
      if (del_rng.uniform() < cfg.delist_prob) {
        const int cut = 24 + del_rng.uniform_int(std::max(1, T - 24));
        for (int t = cut; t < T; ++t) p.present(i, t) = false;
      }
  }

  // ---- raw predictors --------------------------------------------------------
  RawPredictorPanel& rp = out.predictors;
  rp.present = p.present;
  for (int k = 0; k < K; ++k) {
    if (k < kCatalogueSize) {
      rp.names.emplace_back(kCatalogue[k].name);
      rp.tax.push_back(kCatalogue[k].tax);
    } else {
      const double u = static_cast<double>(k - kCatalogueSize) /
                       std::max(1, K - kCatalogueSize);
      Taxonomy tax = Taxonomy::numerator;
      if (u < cfg.extra_exogenous_share) tax = Taxonomy::exogenous;
      else if (u < cfg.extra_exogenous_share + cfg.extra_denominator_share)
        tax = Taxonomy::denominator;
      rp.names.push_back((tax == Taxonomy::exogenous  ? "exog_"
                          : tax == Taxonomy::denominator ? "den_"
                                                         : "num_") +
                         std::to_string(k));
      rp.tax.push_back(tax);
    }
    rp.x.push_back(Mat::Zero(N, T));
    rp.xn.push_back(Mat::Zero(N, T));
    rp.xd.push_back(Mat::Zero(N, T));
    rp.xa.push_back(Mat::Zero(N, T));
  }

  Rng pred_rng = root.fork(16);
  for (int k = 0; k < K; ++k) {
    const std::string& name = rp.names[k];
    Rng rk = pred_rng.fork(100 + k);
    if (name == "lme") {
      for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
          rp.xd[k](i, t) = 1.0 / p.S(i, t);
          rp.x[k](i, t) = p.price(i, t) * p.S(i, t);
        }
    } else if (name == "rel_to_high_price") {
      for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
          double hi = std::exp(logp(i, 0)) * 1.05;
          for (int u = std::max(0, t - 12); u < t; ++u)
            hi = std::max(hi, std::exp(logp(i, u)));
          rp.xd[k](i, t) = hi;  // trailing high, predetermined
          rp.x[k](i, t) = p.price(i, t) / hi;
        }
    } else if (rp.tax[k] == Taxonomy::denominator) {
      const double ratio0 = (name == "beme") ? 0.6 : (name == "e2p") ? 0.08 : 0.9;
      for (int i = 0; i < N; ++i) {
        double lx = std::log(ratio0 * std::exp(logp(i, 0))) + 0.4 * rk.normal();
        for (int t = 0; t < T; ++t) {
          if (t > 0) lx += 0.02 * rk.normal() + drift;  // slow accounting drift
          rp.xn[k](i, t) = std::exp(lx);
          rp.x[k](i, t) = rp.xn[k](i, t) / p.price(i, t);
        }
      }
    } else if (rp.tax[k] == Taxonomy::numerator) {
      // q-style: price over an accounting denominator plus an additive part
      for (int i = 0; i < N; ++i) {
        double ld = logp(i, 0) + 0.3 * rk.normal();
        double a = 0.3 + 0.1 * rk.normal();
        for (int t = 0; t < T; ++t) {
          if (t > 0) {
            ld += 0.02 * rk.normal() + drift;
            a = 0.97 * a + 0.02 * rk.normal();
          }
          rp.xd[k](i, t) = std::exp(ld);
          rp.xa[k](i, t) = a;
          rp.x[k](i, t) = p.price(i, t) / rp.xd[k](i, t) + a;
        }
      }
    } else {
      for (int i = 0; i < N; ++i) {
        double v = rk.normal();
        for (int t = 0; t < T; ++t) {
          if (t > 0) v = 0.95 * v + 0.3 * rk.normal();
          rp.x[k](i, t) = v;
        }
      }
    }
  }

  // ---- holdings at quarter months --------------------------------------------
  HoldingsPanel& h = out.holdings;
  h.institutions.resize(J);
  h.is_household.assign(J, 0);
  h.is_household[0] = 1;
  h.institutions[0] = "household";
  for (int j = 1; j < J; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "I%03d", j);
    h.institutions[j] = buf;
  }
  for (int t = 0; t < T; ++t)
    if (p.months[t] % 3 == 0) h.months.push_back(p.months[t]);
  const int Q = static_cast<int>(h.months.size());
  h.weights.assign(Q, Mat::Zero(J, N));
  h.aum = Mat::Zero(J, Q);

  // per-institution predictor tilts: two random characteristics each
  Rng tilt_rng = root.fork(17);
  Mat tilts = Mat::Zero(J, K);
  for (int j = 1; j < J; ++j) {
    for (int r = 0; r < 2; ++r) tilts(j, tilt_rng.uniform_int(K)) = 0.4 * tilt_rng.normal();
  }

  Rng hold_rng = root.fork(18);
  BoolArr cur_universe = universe;
  for (int q = 0; q < Q; ++q) {
    const int t = h.months[q];  // month ids equal indices here
    if (q > 0) {
      for (int j = 1; j < J; ++j)
        for (int i = 0; i < N; ++i)
          if (hold_rng.uniform() < 0.01) cur_universe(j, i) = !cur_universe(j, i);
    }
    // standardized ArcSinh(x) per predictor for tilting
    Mat zx(N, K);
    for (int k = 0; k < K; ++k) {
      Vec col(N);
      for (int i = 0; i < N; ++i) col(i) = std::asinh(rp.x[k](i, t));
      const double cm = col.mean(), cs = std::max(stdev(col), 1e-12);
      for (int i = 0; i < N; ++i) zx(i, k) = (col(i) - cm) / cs;
    }
    Mat phi = Mat::Zero(J, N);
    for (int i = 0; i < N; ++i) {
      if (!p.present(i, t)) continue;
      double others = 0.0;
      for (int j = 1; j < J; ++j) {
        if (!cur_universe(j, i)) continue;
        double tilt = 0.0;
        for (int k = 0; k < K; ++k) tilt += tilts(j, k) * zx(i, k);
        phi(j, i) = size_wt(j) * std::exp(tilt + 0.3 * hold_rng.normal());
        others += phi(j, i);
      }
      const double hshare =
          cfg.household_share * std::exp(0.1 * hold_rng.normal());
      phi(0, i) = others > 0 ? others * hshare / (1.0 - hshare)
                             : 1.0;  // household takes the residual share
      const double tot = phi.col(i).sum();
      for (int j = 0; j < J; ++j) {
        const double dollars = phi(j, i) / tot * p.P(i, t);
        h.weights[q](j, i) = dollars;  // temporarily dollars; normalized below
      }
    }
    for (int j = 0; j < J; ++j) {
      const double a = h.weights[q].row(j).sum();
      h.aum(j, q) = a;
      if (a > 0) h.weights[q].row(j) /= a;
    }
  }

  p.validate();
  rp.validate(p);
  h.validate(p);
  return out;
}

}  // namespace dbap
