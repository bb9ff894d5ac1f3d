#include "dinozaur/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dinozaur::nn {

namespace {

bool selected(const std::string& name, const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) return true;
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) { return name.rfind(p, 0) == 0; });
}

}  // namespace

GradcheckReport gradcheck(ParamStore& store, const LossFunction& loss, const GradcheckOptions& options) {
  store.zero_grad();
  const double base = loss(store, true);
  // Gradients carry loss units, so the absolute floor scales with the loss.
  const double floor = options.floor * std::max(1.0, std::abs(base));

  std::map<std::string, std::vector<double>> analytic;
  for (const auto& [name, p] : store) analytic[name] = p.grad;
  store.zero_grad();

  GradcheckReport report;
  report.max_relative_error = 0.0;
  for (auto& [name, p] : store) {
    if (!selected(name, options.prefixes)) continue;
    const auto& a = analytic[name];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double theta = p.value[i];
      const double step = options.h * std::max(1.0, std::abs(theta));
      p.value[i] = theta + step;
      const double up = loss(store, false);
      p.value[i] = theta - step;
      const double down = loss(store, false);
      p.value[i] = theta;

      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(a[i]), std::abs(numeric), floor});
      double err = std::abs(a[i] - numeric) / denom;
      if (std::isnan(err)) err = std::numeric_limits<double>::infinity();
      ++report.coordinates;
      if (report.coordinates == 1 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_parameter = name;
        report.worst_index = i;
        report.worst_analytic = a[i];
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.coordinates > 0 && report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace dinozaur::nn
