#pragma once

#include <cstddef>
#include <vector>

namespace abstain {

// Exact empirical cumulative distribution function over a 1-D score multiset.
// Duplicates are kept; ranks are computed over the full sorted sequence.
// Immutable after construction, so concurrent read queries are safe.
class EmpiricalCdf {
 public:
  // Sorts a copy of the samples. Throws input_error on an empty multiset or
  // any non-finite value.
  static EmpiricalCdf from_samples(std::vector<double> samples);

  // F_n(s) = #{x : x <= s} / n. Right-continuous step function with values
  // in {0, 1/n, ..., 1}. Binary search over the sorted values.
  double evaluate(double s) const;
  double operator()(double s) const { return evaluate(s); }

  // Pseudo-inverse F_n^+(y) = inf{x : F_n(x) >= y} for y in (0, 1], i.e. the
  // order statistic of rank ceil(y*n). Always returns a stored sample point.
  double pseudo_inverse(double y) const;

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

 private:
  explicit EmpiricalCdf(std::vector<double> sorted) : values_(std::move(sorted)) {}

  std::vector<double> values_;  // nondecreasing, size >= 1
};

}  // namespace abstain
