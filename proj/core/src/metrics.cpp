#include "dinozaur/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dinozaur/errors.hpp"

namespace dinozaur::metrics {

namespace {

void require_positive(const Field& s) {
  for (double v : s.values())
    if (!(v > 0.0)) throw DomainError("metrics: predictive std must be positive");
}

void require_same(const Field& a, const Field& b) {
  if (!a.same_shape(b)) throw ShapeError("metrics: truth and prediction differ in shape");
}

// Acklam's rational approximation for the lower half, p in (0, 0.5].
double acklam_lower(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inverse_normal_cdf: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -inverse_normal_cdf(1.0 - p);
  double x = acklam_lower(p);
  // One Halley refinement against erfc; the lower tail keeps e well conditioned.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

void PredictionSet::validate() const {
  if (truth.empty()) throw ShapeError("metrics: no elements");
  if (mean.size() != truth.size()) throw ShapeError("metrics: truth and mean counts differ");
  if (!stddev.empty() && stddev.size() != truth.size()) throw ShapeError("metrics: truth and std counts differ");
  for (std::size_t n = 0; n < truth.size(); ++n) {
    require_same(truth[n], mean[n]);
    if (!stddev.empty()) require_same(truth[n], stddev[n]);
  }
}

std::vector<double> coverage_levels(int K) {
  if (K < 1) throw ConfigError("coverage_levels: K must be >= 1");
  std::vector<double> out(K + 1);
  for (int k = 0; k <= K; ++k) out[k] = static_cast<double>(k) / K;
  return out;
}

std::vector<double> interval_levels() {
  std::vector<double> out(99);
  for (int k = 1; k <= 99; ++k) out[k - 1] = k / 100.0;
  return out;
}

double rl2_element(const Field& truth, const Field& mean) {
  require_same(truth, mean);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    num += (truth[i] - mean[i]) * (truth[i] - mean[i]);
    den += truth[i] * truth[i];
  }
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(num) / std::sqrt(den);
}

double rl2(const PredictionSet& set, std::size_t* excluded) {
  set.validate();
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t n = 0; n < set.truth.size(); ++n) {
    const double r = rl2_element(set.truth[n], set.mean[n]);
    if (std::isnan(r)) continue;
    sum += r;
    ++used;
  }
  if (excluded) *excluded = set.truth.size() - used;
  if (used == 0) throw DomainError("rl2: every ground-truth element has zero norm");
  return sum / static_cast<double>(used);
}

double nll_element(const Field& truth, const Field& mean, const Field& stddev) {
  require_same(truth, mean);
  require_same(truth, stddev);
  require_positive(stddev);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double r = truth[i] - mean[i];
    s += std::log(stddev[i]) + half_log_2pi + r * r / (2.0 * stddev[i] * stddev[i]);
  }
  return s / static_cast<double>(truth.size());
}

double nll(const PredictionSet& set) {
  set.validate();
  if (!set.probabilistic()) throw ConfigError("nll: predictions carry no std");
  double s = 0.0;
  for (std::size_t n = 0; n < set.truth.size(); ++n) s += nll_element(set.truth[n], set.mean[n], set.stddev[n]);
  return s / static_cast<double>(set.truth.size());
}

std::vector<double> observed_coverage(const Field& truth, const Field& mean, const Field& stddev,
                                      const std::vector<double>& levels) {
  require_same(truth, mean);
  require_same(truth, stddev);
  require_positive(stddev);
  std::vector<double> z(truth.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::abs(truth[i] - mean[i]) / stddev[i];
  std::vector<double> out;
  out.reserve(levels.size());
  for (double pi : levels) {
    if (!(pi >= 0.0 && pi <= 1.0)) throw DomainError("observed_coverage: levels must lie in [0, 1]");
    const double bound =
        pi >= 1.0 ? std::numeric_limits<double>::infinity() : inverse_normal_cdf(0.5 * (1.0 + pi));
    std::size_t inside = 0;
    for (double v : z) inside += v <= bound;
    out.push_back(static_cast<double>(inside) / static_cast<double>(z.size()));
  }
  return out;
}

double miscalibration_area_element(const Field& truth, const Field& mean, const Field& stddev,
                                   const std::vector<double>& levels) {
  const auto obs = observed_coverage(truth, mean, stddev, levels);
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < levels.size(); ++k)
    area += std::abs(0.5 * (levels[k + 1] - levels[k]) * (obs[k] - levels[k] + obs[k + 1] - levels[k + 1]));
  return area;
}

double miscalibration_area(const PredictionSet& set, const std::vector<double>& levels) {
  set.validate();
  if (!set.probabilistic()) throw ConfigError("miscalibration_area: predictions carry no std");
  double s = 0.0;
  for (std::size_t n = 0; n < set.truth.size(); ++n)
    s += miscalibration_area_element(set.truth[n], set.mean[n], set.stddev[n], levels);
  return s / static_cast<double>(set.truth.size());
}

double interval_score_element(const Field& truth, const Field& mean, const Field& stddev,
                              const std::vector<double>& levels) {
  require_same(truth, mean);
  require_same(truth, stddev);
  require_positive(stddev);
  if (levels.empty()) throw ConfigError("interval_score: no levels");
  double total = 0.0;
  for (double p : levels) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("interval_score: levels must lie in (0, 1)");
    const double zl = inverse_normal_cdf(0.5 * (1.0 - p));
    const double zu = inverse_normal_cdf(0.5 * (1.0 + p));
    const double penalty = 2.0 / (1.0 - p);
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double lo = mean[i] + stddev[i] * zl;
      const double hi = mean[i] + stddev[i] * zu;
      const double u = truth[i];
      s += hi - lo;
      if (u < lo) s += penalty * (lo - u);
      if (u > hi) s += penalty * (u - hi);
    }
    total += s / static_cast<double>(truth.size());
  }
  return total / static_cast<double>(levels.size());
}

double interval_score(const PredictionSet& set, const std::vector<double>& levels) {
  set.validate();
  if (!set.probabilistic()) throw ConfigError("interval_score: predictions carry no std");
  double s = 0.0;
  for (std::size_t n = 0; n < set.truth.size(); ++n)
    s += interval_score_element(set.truth[n], set.mean[n], set.stddev[n], levels);
  return s / static_cast<double>(set.truth.size());
}

MetricReport evaluate(const PredictionSet& set, int K) {
  set.validate();
  MetricReport r;
  r.probabilistic = set.probabilistic();
  r.rl2 = rl2(set, &r.excluded);
  for (std::size_t n = 0; n < set.truth.size(); ++n) r.rl2_per_element.push_back(rl2_element(set.truth[n], set.mean[n]));
  if (!r.probabilistic) return r;

  r.levels = coverage_levels(K);
  r.observed_coverage.assign(r.levels.size(), 0.0);
  const auto is_levels = interval_levels();
  const double count = static_cast<double>(set.truth.size());
  for (std::size_t n = 0; n < set.truth.size(); ++n) {
    const Field &u = set.truth[n], &m = set.mean[n], &s = set.stddev[n];
    r.nll_per_element.push_back(nll_element(u, m, s));
    r.ma_per_element.push_back(miscalibration_area_element(u, m, s, r.levels));
    r.is_per_element.push_back(interval_score_element(u, m, s, is_levels));
    const auto obs = observed_coverage(u, m, s, r.levels);
    for (std::size_t k = 0; k < obs.size(); ++k) r.observed_coverage[k] += obs[k] / count;
    r.nll += r.nll_per_element.back() / count;
    r.ma += r.ma_per_element.back() / count;
    r.is_score += r.is_per_element.back() / count;
  }
  return r;
}

std::string to_json(const MetricReport& r) {
  nlohmann::json per;
  // NaN is not representable in JSON; excluded elements become null.
  nlohmann::json rl2s = nlohmann::json::array();
  for (double v : r.rl2_per_element) rl2s.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  per["rl2"] = rl2s;
  nlohmann::json j = {{"probabilistic", r.probabilistic}, {"rl2", r.rl2}, {"excluded_elements", r.excluded}};
  if (r.probabilistic) {
    j["nll"] = r.nll;
    j["ma"] = r.ma;
    j["is"] = r.is_score;
    per["nll"] = r.nll_per_element;
    per["ma"] = r.ma_per_element;
    per["is"] = r.is_per_element;
    j["calibration"] = {{"expected", r.levels}, {"observed", r.observed_coverage}};
  }
  j["per_element"] = per;
  return j.dump(2) + "\n";
}

std::string calibration_csv(const MetricReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "expected,observed\n";
  for (std::size_t k = 0; k < r.levels.size(); ++k) os << r.levels[k] << ',' << r.observed_coverage[k] << '\n';
  return os.str();
}

std::string elements_csv(const MetricReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << (r.probabilistic ? "element,rl2,nll,ma,is\n" : "element,rl2\n");
  for (std::size_t n = 0; n < r.rl2_per_element.size(); ++n) {
    os << n << ',' << r.rl2_per_element[n];
    if (r.probabilistic) os << ',' << r.nll_per_element[n] << ',' << r.ma_per_element[n] << ',' << r.is_per_element[n];
    os << '\n';
  }
  return os.str();
}

}  // namespace dinozaur::metrics
