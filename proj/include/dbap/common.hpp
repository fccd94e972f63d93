#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dbap {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using BoolArr = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Bad configuration (unknown model tag, invalid parameter ranges, ...). CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure (singular matrix, divergent solve, ...). CLI exit code 4.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG with samplers that do not depend on libstdc++
/// distribution internals, so generated files are stable across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  /// uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

  /// deterministic sub-stream, independent of draws taken from this one
  Rng fork(uint64_t tag) const { return Rng(splitmix64(state_ ^ splitmix64(tag))); }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// index-parallel loop; results must be written to pre-allocated slots so the
/// outcome does not depend on scheduling
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(jobs, n);
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errs(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// ---- small stats helpers -------------------------------------------------

inline double mean(const Vec& x) { return x.mean(); }

/// sample standard deviation (n-1 divisor)
inline double stdev(const Vec& x) {
  const auto n = x.size();
  if (n < 2) return 0.0;
  const double m = x.mean();
  return std::sqrt((x.array() - m).square().sum() / static_cast<double>(n - 1));
}

/// linear-interpolation quantile of a sorted vector, p in [0,1]
inline double quantile_sorted(const std::vector<double>& s, double p) {
  if (s.empty()) throw DataError("quantile of empty vector");
  if (p <= 0) return s.front();
  if (p >= 1) return s.back();
  const double h = p * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= s.size()) return s.back();
  return s[lo] * (1.0 - frac) + s[lo + 1] * frac;
}

inline double quantile(Vec x, double p) {
  std::vector<double> s(x.data(), x.data() + x.size());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, p);
}

/// lower median: element at index (n-1)/2 of the sorted sample
inline double median_lower(Vec x) {
  if (x.size() == 0) throw DataError("median of empty vector");
  std::vector<double> s(x.data(), x.data() + x.size());
  auto mid = s.begin() + (s.size() - 1) / 2;
  std::nth_element(s.begin(), mid, s.end());
  return *mid;
}

/// standard normal cdf
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730951); }

/// standard normal pdf
inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / 2.5066282746310002;  // sqrt(2*pi)
}

}  // namespace dbap
