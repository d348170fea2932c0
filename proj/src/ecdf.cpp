#include "abstain/ecdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abstain/errors.hpp"

namespace abstain {

EmpiricalCdf EmpiricalCdf::from_samples(std::vector<double> samples) {
  if (samples.empty()) {
    throw input_error("empty sample");
  }
  for (double v : samples) {
    if (!std::isfinite(v)) {
      throw input_error("non-finite score");
    }
  }
  std::sort(samples.begin(), samples.end());
  return EmpiricalCdf(std::move(samples));
}

double EmpiricalCdf::evaluate(double s) const {
  if (!std::isfinite(s)) {
    throw input_error("non-finite score");
  }
  const auto it = std::upper_bound(values_.begin(), values_.end(), s);
  const auto count = static_cast<std::size_t>(it - values_.begin());
  return static_cast<double>(count) / static_cast<double>(values_.size());
}

double EmpiricalCdf::pseudo_inverse(double y) const {
  if (!std::isfinite(y) || y <= 0.0 || y > 1.0) {
    throw input_error("quantile level outside (0,1]");
  }
  const double n = static_cast<double>(values_.size());
  const double t = y * n;
  // Rank is ceil(t), except that t within 4 ulps of an integer counts as that
  // integer so levels like 0.75 stored in binary do not overshoot by one.
  double rank = std::ceil(t);
  const double nearest = std::round(t);
  if (nearest >= 1.0 &&
      std::abs(t - nearest) <= 4.0 * std::numeric_limits<double>::epsilon() * t) {
    rank = nearest;
  }
  auto index = static_cast<std::size_t>(rank) - 1;
  if (index >= values_.size()) {
    index = values_.size() - 1;
  }
  return values_[index];
}

}  // namespace abstain
