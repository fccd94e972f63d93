#include "dbap/panel.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dbap/csv.hpp"

namespace dbap {

std::string taxonomy_name(Taxonomy t) {
  switch (t) {
    case Taxonomy::exogenous: return "exogenous";
    case Taxonomy::numerator: return "numerator";
    case Taxonomy::denominator: return "denominator";
    case Taxonomy::market: return "market";
  }
  return "?";
}

Taxonomy taxonomy_from_name(const std::string& s) {
  if (s == "exogenous") return Taxonomy::exogenous;
  if (s == "numerator") return Taxonomy::numerator;
  if (s == "denominator") return Taxonomy::denominator;
  if (s == "market") return Taxonomy::market;
  throw DataError("unknown taxonomy '" + s + "'");
}

double AssetPanel::market_total(int t) const {
  double a = 0.0;
  for (int i = 0; i < n_assets(); ++i)
    if (present(i, t)) a += P(i, t);
  return a;
}

double AssetPanel::excess_return_at(int i, int t) const {
  if (t <= 0 || !present(i, t) || !present(i, t - 1))
    throw DataError("excess_return_at: missing observation for asset " + assets[i] + " month " +
                    std::to_string(months[t]));
  return excess_return(P(i, t - 1), P(i, t), D(i, t), share_adjustment(i, t - 1, t), rf(t - 1));
}

void AssetPanel::validate() const {
  const int N = n_assets(), T = n_months();
  if (static_cast<int>(rf.size()) != T) throw DataError("panel: rf length mismatch");
  for (int t = 1; t < T; ++t)
    if (months[t] <= months[t - 1]) throw DataError("panel: months not strictly increasing");
  for (int i = 0; i < N; ++i)
    for (int t = 0; t < T; ++t) {
      if (!present(i, t)) continue;
      const std::string where = "asset " + assets[i] + " month " + std::to_string(months[t]);
      if (!(P(i, t) > 0)) throw DataError("panel: nonpositive market equity at " + where);
      if (!(S(i, t) > 0)) throw DataError("panel: nonpositive shares at " + where);
      if (D(i, t) < 0) throw DataError("panel: negative dividend at " + where);
      if (!(cfacshr(i, t) > 0)) throw DataError("panel: nonpositive cfacshr at " + where);
      if (retx(i, t) <= -1) throw DataError("panel: retx <= -1 at " + where);
    }
}

int RawPredictorPanel::find(const std::string& name) const {
  for (int k = 0; k < n_predictors(); ++k)
    if (names[k] == name) return k;
  return -1;
}

void RawPredictorPanel::validate(const AssetPanel& panel) const {
  const int N = panel.n_assets(), T = panel.n_months();
  for (int k = 0; k < n_predictors(); ++k) {
    if (tax[k] == Taxonomy::market)
      throw DataError("predictor '" + names[k] + "': market taxonomy is reserved for column 0");
    for (int i = 0; i < N; ++i)
      for (int t = 0; t < T; ++t) {
        if (!present(i, t)) continue;
        const double p = panel.price(i, t);
        const std::string where =
            names[k] + " asset " + panel.assets[i] + " month " + std::to_string(panel.months[t]);
        if (tax[k] == Taxonomy::denominator) {
          const double recon = xn[k](i, t) / p + xa[k](i, t);
          if (std::abs(recon - x[k](i, t)) > 1e-8 * std::max(1.0, std::abs(x[k](i, t))))
            throw DataError("predictor component identity violated for " + where);
        } else if (tax[k] == Taxonomy::numerator) {
          if (xd[k](i, t) == 0) throw DataError("zero denominator component for " + where);
          const double recon = p / xd[k](i, t) + xa[k](i, t);
          if (std::abs(recon - x[k](i, t)) > 1e-8 * std::max(1.0, std::abs(x[k](i, t))))
            throw DataError("predictor component identity violated for " + where);
        }
      }
  }
}

void HoldingsPanel::validate(const AssetPanel& panel) const {
  const int J = n_institutions();
  if (static_cast<int>(is_household.size()) != J) throw DataError("holdings: household flags");
  int households = 0;
  for (char h : is_household) households += h ? 1 : 0;
  if (households != 1) throw DataError("holdings: exactly one household institution required");
  for (size_t q = 0; q < months.size(); ++q) {
    // market clearing: sum_j A^j w^j_i = P_i
    const auto it = std::find(panel.months.begin(), panel.months.end(), months[q]);
    if (it == panel.months.end()) throw DataError("holdings: month not in panel");
    const int t = static_cast<int>(it - panel.months.begin());
    for (int i = 0; i < panel.n_assets(); ++i) {
      if (!panel.present(i, t)) continue;
      double held = 0.0;
      for (int j = 0; j < J; ++j) held += aum(j, q) * weights[q](j, i);
      if (std::abs(held - panel.P(i, t)) > 1e-8 * panel.P(i, t))
        throw DataError("holdings: market clearing violated for asset " + panel.assets[i] +
                        " month " + std::to_string(months[q]));
    }
  }
}

double compute_dividends(double ret, double retx, double P) {
  if (retx <= -1) throw DataError("compute_dividends: retx <= -1");
  return P * ((ret + 1.0) / (retx + 1.0) - 1.0);
}

double excess_return(double P_t, double P_t1, double D_t1, double dS, double Rf) {
  if (!(P_t > 0)) throw DataError("excess_return: nonpositive starting market equity");
  if (!(dS > 0)) throw DataError("excess_return: nonpositive share adjustment");
  return (1.0 / dS) * (P_t1 + D_t1) / P_t - Rf;
}

// ---- csv i/o ---------------------------------------------------------------

namespace {

const std::vector<std::string> kPanelHeader = {"asset", "month", "P",    "S",
                                               "D",     "ret",   "retx", "cfacshr"};
const std::vector<std::string> kRfHeader = {"month", "Rf"};
const std::vector<std::string> kPredHeader = {"asset",    "month", "predictor", "value",
                                              "taxonomy", "x_n",   "x_d",       "x_a"};
const std::vector<std::string> kHoldHeader = {"institution", "asset", "month",
                                              "weight",      "aum",   "is_household"};

struct KeyIndex {
  std::vector<std::string> assets;
  std::map<std::string, int> asset_idx;
  std::vector<int> months;
  std::map<int, int> month_idx;

  int asset(const std::string& a) {
    auto it = asset_idx.find(a);
    if (it != asset_idx.end()) return it->second;
    const int id = static_cast<int>(assets.size());
    assets.push_back(a);
    asset_idx[a] = id;
    return id;
  }
};

}  // namespace

AssetPanel load_panel(const std::filesystem::path& panel_csv,
                      const std::filesystem::path& riskfree_csv) {
  CsvTable t = read_csv(panel_csv);
  require_header(t, kPanelHeader, panel_csv.string());
  KeyIndex key;
  std::set<int> month_set;
  for (auto& r : t.rows) month_set.insert(static_cast<int>(parse_long(r[1], panel_csv.string())));
  key.months.assign(month_set.begin(), month_set.end());
  for (size_t m = 0; m < key.months.size(); ++m) key.month_idx[key.months[m]] = static_cast<int>(m);

  // first pass fixes asset order by first appearance
  for (auto& r : t.rows) key.asset(r[0]);

  const int N = static_cast<int>(key.assets.size());
  const int T = static_cast<int>(key.months.size());
  AssetPanel p;
  p.assets = key.assets;
  p.months = key.months;
  p.P = Mat::Zero(N, T);
  p.S = Mat::Zero(N, T);
  p.D = Mat::Zero(N, T);
  p.ret = Mat::Zero(N, T);
  p.retx = Mat::Zero(N, T);
  p.cfacshr = Mat::Ones(N, T);
  p.present = BoolArr::Constant(N, T, false);

  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = panel_csv.string() + ": line " + std::to_string(t.line_numbers[r]);
    const int i = key.asset_idx.at(row[0]);
    const int m = key.month_idx.at(static_cast<int>(parse_long(row[1], ctx)));
    if (p.present(i, m)) throw DataError(ctx + ": duplicate (asset, month) observation");
    p.P(i, m) = parse_double(row[2], ctx);
    p.S(i, m) = parse_double(row[3], ctx);
    p.D(i, m) = parse_double(row[4], ctx);
    p.ret(i, m) = parse_double(row[5], ctx);
    p.retx(i, m) = parse_double(row[6], ctx);
    p.cfacshr(i, m) = parse_double(row[7], ctx);
    p.present(i, m) = true;
    if (!(p.P(i, m) > 0))
      throw DataError(ctx + ": nonpositive market equity for asset " + row[0] + " month " +
                      row[1]);
    if (!(p.S(i, m) > 0))
      throw DataError(ctx + ": nonpositive shares for asset " + row[0] + " month " + row[1]);
  }

  CsvTable rft = read_csv(riskfree_csv);
  require_header(rft, kRfHeader, riskfree_csv.string());
  p.rf = Vec::Zero(T);
  Eigen::Array<bool, Eigen::Dynamic, 1> have = Eigen::Array<bool, Eigen::Dynamic, 1>::Zero(T);
  for (size_t r = 0; r < rft.rows.size(); ++r) {
    const std::string ctx = riskfree_csv.string() + ": line " + std::to_string(rft.line_numbers[r]);
    const int month = static_cast<int>(parse_long(rft.rows[r][0], ctx));
    auto it = key.month_idx.find(month);
    if (it == key.month_idx.end()) continue;  // risk-free may cover extra months
    p.rf(it->second) = parse_double(rft.rows[r][1], ctx);
    have(it->second) = true;
  }
  for (int m = 0; m < T; ++m)
    if (!have(m))
      throw DataError(riskfree_csv.string() + ": missing Rf for month " +
                      std::to_string(p.months[m]));
  p.validate();
  return p;
}

void save_panel(const AssetPanel& p, const std::filesystem::path& panel_csv,
                const std::filesystem::path& riskfree_csv) {
  CsvWriter w(panel_csv, kPanelHeader);
  for (int i = 0; i < p.n_assets(); ++i)
    for (int t = 0; t < p.n_months(); ++t) {
      if (!p.present(i, t)) continue;
      w.row({p.assets[i], std::to_string(p.months[t]), fmt_double(p.P(i, t)),
             fmt_double(p.S(i, t)), fmt_double(p.D(i, t)), fmt_double(p.ret(i, t)),
             fmt_double(p.retx(i, t)), fmt_double(p.cfacshr(i, t))});
    }
  w.close();
  CsvWriter rw(riskfree_csv, kRfHeader);
  for (int t = 0; t < p.n_months(); ++t)
    rw.row({std::to_string(p.months[t]), fmt_double(p.rf(t))});
  rw.close();
}

RawPredictorPanel load_predictors(const std::filesystem::path& csv, const AssetPanel& panel) {
  CsvTable t = read_csv(csv);
  require_header(t, kPredHeader, csv.string());
  std::map<std::string, int> aidx;
  for (int i = 0; i < panel.n_assets(); ++i) aidx[panel.assets[i]] = i;
  std::map<int, int> midx;
  for (int m = 0; m < panel.n_months(); ++m) midx[panel.months[m]] = m;

  RawPredictorPanel rp;
  rp.present = panel.present;
  std::map<std::string, int> kidx;
  const int N = panel.n_assets(), T = panel.n_months();
  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = csv.string() + ": line " + std::to_string(t.line_numbers[r]);
    auto ai = aidx.find(row[0]);
    if (ai == aidx.end()) throw DataError(ctx + ": unknown asset '" + row[0] + "'");
    auto mi = midx.find(static_cast<int>(parse_long(row[1], ctx)));
    if (mi == midx.end()) throw DataError(ctx + ": month not in panel");
    int k;
    auto ki = kidx.find(row[2]);
    if (ki == kidx.end()) {
      k = rp.n_predictors();
      kidx[row[2]] = k;
      rp.names.push_back(row[2]);
      rp.tax.push_back(taxonomy_from_name(row[4]));
      rp.x.push_back(Mat::Zero(N, T));
      rp.xn.push_back(Mat::Zero(N, T));
      rp.xd.push_back(Mat::Zero(N, T));
      rp.xa.push_back(Mat::Zero(N, T));
    } else {
      k = ki->second;
      if (rp.tax[k] != taxonomy_from_name(row[4]))
        throw DataError(ctx + ": predictor '" + row[2] + "' has inconsistent taxonomy");
    }
    rp.x[k](ai->second, mi->second) = parse_double(row[3], ctx);
    rp.xn[k](ai->second, mi->second) = parse_double(row[5], ctx);
    rp.xd[k](ai->second, mi->second) = parse_double(row[6], ctx);
    rp.xa[k](ai->second, mi->second) = parse_double(row[7], ctx);
  }
  rp.validate(panel);
  return rp;
}

void save_predictors(const RawPredictorPanel& rp, const AssetPanel& panel,
                     const std::filesystem::path& csv) {
  CsvWriter w(csv, kPredHeader);
  for (int k = 0; k < rp.n_predictors(); ++k)
    for (int i = 0; i < panel.n_assets(); ++i)
      for (int t = 0; t < panel.n_months(); ++t) {
        if (!rp.present(i, t)) continue;
        w.row({panel.assets[i], std::to_string(panel.months[t]), rp.names[k],
               fmt_double(rp.x[k](i, t)), taxonomy_name(rp.tax[k]), fmt_double(rp.xn[k](i, t)),
               fmt_double(rp.xd[k](i, t)), fmt_double(rp.xa[k](i, t))});
      }
  w.close();
}

HoldingsPanel load_holdings(const std::filesystem::path& csv, const AssetPanel& panel) {
  CsvTable t = read_csv(csv);
  require_header(t, kHoldHeader, csv.string());
  std::map<std::string, int> aidx;
  for (int i = 0; i < panel.n_assets(); ++i) aidx[panel.assets[i]] = i;

  HoldingsPanel h;
  std::map<std::string, int> jidx;
  std::set<int> month_set;
  for (auto& r : t.rows) month_set.insert(static_cast<int>(parse_long(r[2], csv.string())));
  h.months.assign(month_set.begin(), month_set.end());
  std::map<int, int> qidx;
  for (size_t q = 0; q < h.months.size(); ++q) qidx[h.months[q]] = static_cast<int>(q);

  for (auto& r : t.rows)
    if (!jidx.count(r[0])) {
      jidx[r[0]] = static_cast<int>(h.institutions.size());
      h.institutions.push_back(r[0]);
      h.is_household.push_back(r[5] == "1" ? 1 : 0);
    }
  const int J = h.n_institutions();
  const int N = panel.n_assets();
  h.weights.assign(h.months.size(), Mat::Zero(J, N));
  h.aum = Mat::Zero(J, static_cast<int>(h.months.size()));

  for (size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string ctx = csv.string() + ": line " + std::to_string(t.line_numbers[r]);
    const int j = jidx.at(row[0]);
    auto ai = aidx.find(row[1]);
    if (ai == aidx.end()) throw DataError(ctx + ": unknown asset '" + row[1] + "'");
    const int q = qidx.at(static_cast<int>(parse_long(row[2], ctx)));
    h.weights[q](j, ai->second) = parse_double(row[3], ctx);
    h.aum(j, q) = parse_double(row[4], ctx);
    if ((row[5] == "1") != (h.is_household[j] == 1))
      throw DataError(ctx + ": inconsistent household flag for " + row[0]);
  }
  h.validate(panel);
  return h;
}

void save_holdings(const HoldingsPanel& h, const AssetPanel& panel,
                   const std::filesystem::path& csv) {
  CsvWriter w(csv, kHoldHeader);
  for (size_t q = 0; q < h.months.size(); ++q)
    for (int j = 0; j < h.n_institutions(); ++j)
      for (int i = 0; i < panel.n_assets(); ++i) {
        if (h.weights[q](j, i) == 0.0) continue;
        w.row({h.institutions[j], panel.assets[i], std::to_string(h.months[q]),
               fmt_double(h.weights[q](j, i)), fmt_double(h.aum(j, static_cast<int>(q))),
               h.is_household[j] ? "1" : "0"});
      }
  w.close();
}

}  // namespace dbap
