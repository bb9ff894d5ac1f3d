#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dinozaur/field.hpp"

namespace dinozaur::metrics {

/// Phi^-1(p) for 0 < p < 1; throws DomainError otherwise.
double inverse_normal_cdf(double p);
double normal_cdf(double z);

/// Ground truth, predictive mean and (optionally) predictive std per test element.
struct PredictionSet {
  std::vector<Field> truth;
  std::vector<Field> mean;
  std::vector<Field> stddev;  // empty for point predictions

  bool probabilistic() const { return !stddev.empty(); }
  /// Throws ShapeError unless every element agrees in shape.
  void validate() const;
};

/// Coverage levels k/K, k = 0..K.
std::vector<double> coverage_levels(int K = 99);
/// Interval levels 0.01, 0.02, ..., 0.99.
std::vector<double> interval_levels();

/// Mean relative L2 error. Elements whose truth has zero norm are skipped and
/// counted in `excluded`; throws DomainError when every element is skipped.
double rl2(const PredictionSet& set, std::size_t* excluded = nullptr);
double rl2_element(const Field& truth, const Field& mean);

double nll(const PredictionSet& set);
double nll_element(const Field& truth, const Field& mean, const Field& stddev);

/// Observed coverage per level: fraction of points with |u - u_hat| / sigma <= Phi^-1((1 + pi) / 2).
std::vector<double> observed_coverage(const Field& truth, const Field& mean, const Field& stddev,
                                      const std::vector<double>& levels);
double miscalibration_area_element(const Field& truth, const Field& mean, const Field& stddev,
                                   const std::vector<double>& levels);
double miscalibration_area(const PredictionSet& set, const std::vector<double>& levels = coverage_levels());

double interval_score_element(const Field& truth, const Field& mean, const Field& stddev,
                              const std::vector<double>& levels);
double interval_score(const PredictionSet& set, const std::vector<double>& levels = interval_levels());

struct MetricReport {
  bool probabilistic = false;
  double rl2 = 0.0;
  double nll = 0.0;
  double ma = 0.0;
  double is_score = 0.0;
  std::size_t excluded = 0;
  std::vector<double> rl2_per_element;  // NaN for excluded elements
  std::vector<double> nll_per_element;
  std::vector<double> ma_per_element;
  std::vector<double> is_per_element;
  std::vector<double> levels;             // expected coverage
  std::vector<double> observed_coverage;  // mean over elements
};

MetricReport evaluate(const PredictionSet& set, int K = 99);

std::string to_json(const MetricReport& report);
/// Columns: expected,observed.
std::string calibration_csv(const MetricReport& report);
/// Columns: element,rl2[,nll,ma,is].
std::string elements_csv(const MetricReport& report);

}  // namespace dinozaur::metrics
