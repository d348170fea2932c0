#include "abstain/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "abstain/errors.hpp"
#include "abstain/format.hpp"

namespace abstain {

namespace {

// The sup/inf over eps in (0,1] is taken over [1e-12, 1]: both objectives are
// continuous and the open endpoint contributes no better value.
constexpr double kEpsLo = 1e-12;
constexpr int kGridPoints = 2049;  // spacing < 5e-4
constexpr double kGoldenTol = 1e-10;
constexpr double kInvPhi = 0.6180339887498949;
// Grid-local optima within this margin of the grid best are all refined;
// the objectives can have two competing basins (interior vs boundary).
constexpr double kBasinMargin = 1e-3;

template <typename F>
double golden_max(const F& f, double lo, double hi) {
  double a = lo;
  double b = hi;
  double h = b - a;
  double x1 = b - kInvPhi * h;
  double x2 = a + kInvPhi * h;
  double f1 = f(x1);
  double f2 = f(x2);
  double best = std::max(f1, f2);
  while (h > kGoldenTol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      h = b - a;
      x1 = b - kInvPhi * h;
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      h = b - a;
      x2 = a + kInvPhi * h;
      f2 = f(x2);
    }
    best = std::max(best, std::max(f1, f2));
  }
  return best;
}

// Coarse grid to locate every competitive basin, then golden-section
// refinement of each bracketing interval.
template <typename F>
double maximize_over_unit_interval(const F& f) {
  std::vector<double> xs(kGridPoints);
  std::vector<double> fs(kGridPoints);
  const double step = (1.0 - kEpsLo) / (kGridPoints - 1);
  for (int i = 0; i < kGridPoints; ++i) {
    xs[i] = kEpsLo + step * i;
    fs[i] = f(xs[i]);
  }
  const double grid_best = *std::max_element(fs.begin(), fs.end());
  double result = grid_best;
  for (int i = 0; i < kGridPoints; ++i) {
    if (fs[i] < grid_best - kBasinMargin) continue;
    const bool left_ok = i == 0 || fs[i] >= fs[i - 1];
    const bool right_ok = i == kGridPoints - 1 || fs[i] >= fs[i + 1];
    if (!left_ok || !right_ok) continue;
    const double lo = xs[i == 0 ? 0 : i - 1];
    const double hi = xs[i == kGridPoints - 1 ? kGridPoints - 1 : i + 1];
    result = std::max(result, golden_max(f, lo, hi));
  }
  return result;
}

}  // namespace

double dkw_failure(double epsilon, std::size_t n) {
  if (!std::isfinite(epsilon) || epsilon <= 0.0 || epsilon > 1.0) {
    throw input_error("dkw_failure: epsilon must be in (0,1]");
  }
  if (n == 0) {
    throw input_error("dkw_failure: n must be positive");
  }
  return std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(n) * epsilon * epsilon));
}

double rho(double a, std::size_t d) {
  if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
    throw input_error("rho: a must be in [0,1]");
  }
  if (d == 0) {
    throw input_error("rho: d must be positive");
  }
  if (a == 0.0) return 0.0;
  const double dd = static_cast<double>(d);
  const auto objective = [a, dd](double eps) {
    return std::max(a - eps, 0.0) * (1.0 - 2.0 * std::exp(-2.0 * dd * eps * eps));
  };
  const double sup = maximize_over_unit_interval(objective);
  return std::clamp(sup, 0.0, a);
}

double psi(double a, std::size_t d) {
  if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
    throw input_error("psi: a must be in [0,1]");
  }
  if (d == 0) {
    throw input_error("psi: d must be positive");
  }
  const double dd = static_cast<double>(d);
  const auto negated = [a, dd](double eps) {
    return -(2.0 * std::exp(-2.0 * dd * eps * eps) + std::min(1.0, a + eps));
  };
  return -maximize_over_unit_interval(negated);
}

EventBounds lemma_event_bounds(double f_at_theta, std::size_t n) {
  const double r = rho(f_at_theta, n);
  const double p = psi(f_at_theta, n);
  EventBounds out;
  out.e1.raw_lower = r;
  out.e1.raw_upper = p;
  out.e1.lower = r;
  out.e1.upper = std::min(1.0, p);
  out.e2.raw_lower = 1.0 - p;
  out.e2.raw_upper = 1.0 - r;
  out.e2.lower = std::max(0.0, 1.0 - p);
  out.e2.upper = 1.0 - r;
  return out;
}

CollapsedBounds collapse_bounds(const std::vector<double>& priors,
                                const std::vector<ClassBounds>& per_class) {
  if (priors.size() != per_class.size() || priors.empty()) {
    throw input_error("collapse_bounds: priors and per-class bounds must have equal, nonzero length");
  }
  double sum = 0.0;
  for (double p : priors) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw input_error("collapse_bounds: priors must lie in [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw input_error("collapse_bounds: priors must sum to 1");
  }
  CollapsedBounds out;
  for (std::size_t j = 0; j < priors.size(); ++j) {
    out.accept_lb += priors[j] * per_class[j].upsilon;
    out.reject_lb_raw += (1.0 - priors[j]) * per_class[j].gamma;
  }
  out.reject_lb = std::clamp(out.reject_lb_raw, 0.0, 1.0);
  return out;
}

std::vector<CurvePoint> bound_curve(double delta,
                                    const std::vector<std::size_t>& m_values) {
  if (!std::isfinite(delta) || delta <= 0.0 || delta >= 1.0) {
    throw input_error("bound_curve: delta must be in (0,1)");
  }
  if (m_values.empty()) {
    throw input_error("bound_curve: m_values must be nonempty");
  }
  std::vector<CurvePoint> curve;
  curve.reserve(m_values.size());
  for (std::size_t m : m_values) {
    curve.push_back({m, rho(delta, m)});
  }
  return curve;
}

void write_curve_csv(std::ostream& out, double delta,
                     const std::vector<CurvePoint>& curve) {
  out << "m,delta,rho\n";
  for (const auto& pt : curve) {
    out << pt.m << ',' << format_double(delta) << ',' << format_double(pt.gamma) << '\n';
  }
}

}  // namespace abstain
