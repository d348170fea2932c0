#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace abstain {

// Two-sided probability bound. `lower` and `upper` are clamped to [0,1];
// the raw fields keep the unclamped values (the upper bound of an event and
// the lower bound of its complement can leave [0,1] for small samples).
struct BoundPair {
  double lower = 0.0;
  double upper = 1.0;
  double raw_lower = 0.0;
  double raw_upper = 1.0;
};

// Bounds attached to one corrector class: gamma = rho(delta, m_minus) lower
// bounds the probability of rejecting an incorrect decision, upsilon lower
// bounds the probability of accepting a correct one. upsilon_raw may be
// negative; upsilon is clamped at 0 and flagged vacuous in that case.
struct ClassBounds {
  double upsilon = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  std::size_t m_plus = 1;
  std::size_t m_minus = 1;
  double upsilon_raw = 0.0;
  bool upsilon_vacuous = false;
};

struct EventBounds {
  BoundPair e1;  // P(z <= theta)
  BoundPair e2;  // P(z > theta)
};

struct CollapsedBounds {
  double accept_lb = 0.0;      // sum_j P(l = l_j) * upsilon_j
  double reject_lb = 0.0;      // clamped to [0,1]
  double reject_lb_raw = 0.0;  // sum_j (1 - P(l = l_j)) * gamma_j, may exceed 1
};

struct CurvePoint {
  std::size_t m = 1;
  double gamma = 0.0;
};

// min{1, 2*exp(-2*n*epsilon^2)}: probability that the empirical CDF of n
// i.i.d. samples deviates from the population CDF by more than epsilon
// anywhere, per the Dvoretzky-Kiefer-Wolfowitz inequality.
double dkw_failure(double epsilon, std::size_t n);

// rho(a, d) = sup over eps in (0,1] of max{a - eps, 0} * (1 - 2*exp(-2*d*eps^2)),
// clamped to [0, a]. Nondecreasing in both arguments.
double rho(double a, std::size_t d);

// psi(a, d) = inf over eps in (0,1] of 2*exp(-2*d*eps^2) + min{1, a + eps}.
// Always >= a; can exceed 1 (the derived accept bound 1 - psi is then vacuous).
double psi(double a, std::size_t d);

// Two-sided bounds on P(z <= theta) and P(z > theta) for a fresh sample,
// given the empirical CDF value f_at_theta over n samples:
//   E1 in [rho(f, n), psi(f, n)],  E2 in [1 - psi(f, n), 1 - rho(f, n)].
EventBounds lemma_event_bounds(double f_at_theta, std::size_t n);

// Prior-weighted overall bounds. priors must sum to 1 (tolerance 1e-9) and
// match per_class in length.
CollapsedBounds collapse_bounds(const std::vector<double>& priors,
                                const std::vector<ClassBounds>& per_class);

// gamma = rho(delta, m) sampled over m_values; nondecreasing in m.
std::vector<CurvePoint> bound_curve(double delta,
                                    const std::vector<std::size_t>& m_values);

// CSV rows "m,delta,rho" with header, one row per curve point.
void write_curve_csv(std::ostream& out, double delta,
                     const std::vector<CurvePoint>& curve);

}  // namespace abstain
