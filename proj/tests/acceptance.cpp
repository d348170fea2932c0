// Acceptance gate: seven end-to-end criteria, one line of output each.
// Exits nonzero when any criterion fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abstain/bounds.hpp"
#include "abstain/corrector.hpp"
#include "abstain/ecdf.hpp"
#include "abstain/metrics.hpp"
#include "abstain/rng.hpp"
#include "abstain/sim.hpp"

using namespace abstain;

namespace {

// --- shared helpers -------------------------------------------------------

LabeledSample make_sample(std::string id, Eigen::VectorXd feats, std::string predicted,
                          std::optional<std::string> truth) {
  LabeledSample s;
  s.id = std::move(id);
  s.features = std::move(feats);
  s.predicted = std::move(predicted);
  s.truth = std::move(truth);
  return s;
}

std::vector<LabeledSample> two_class_samples(Rng& rng, std::size_t pos_per_class,
                                             std::size_t neg_per_class) {
  std::vector<LabeledSample> out;
  const std::vector<std::string> labels{"a", "b"};
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const double axis = c == 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < pos_per_class; ++i) {
      Eigen::VectorXd z(3);
      z << axis * (2.0 + rng.next_normal()), rng.next_normal(), 0.3 * rng.next_normal();
      out.push_back(make_sample(labels[c] + "+" + std::to_string(i), z, labels[c],
                                labels[c]));
    }
    for (std::size_t i = 0; i < neg_per_class; ++i) {
      Eigen::VectorXd z(3);
      z << axis * (-2.0 + rng.next_normal()), rng.next_normal(), 0.3 * rng.next_normal();
      out.push_back(make_sample(labels[c] + "-" + std::to_string(i), z, labels[c],
                                labels[1 - c]));
    }
  }
  return out;
}

double oracle_rho(double a, std::size_t d) {
  if (a <= 0.0) return 0.0;
  const double dd = static_cast<double>(d);
  constexpr int kGrid = 1'000'000;
  const double step = (1.0 - 1e-12) / kGrid;
  // The objective is zero once eps reaches a; no need to scan beyond it.
  const int cap = std::min(kGrid, static_cast<int>(a / step) + 2);
  double best = 0.0;
  for (int i = 0; i <= cap; ++i) {
    const double eps = 1e-12 + step * i;
    const double v = std::max(a - eps, 0.0) * (1.0 - 2.0 * std::exp(-2.0 * dd * eps * eps));
    best = std::max(best, v);
  }
  return std::min(best, a);
}

double oracle_psi(double a, std::size_t d) {
  const double dd = static_cast<double>(d);
  constexpr int kGrid = 1'000'000;
  const double step = (1.0 - 1e-12) / kGrid;
  double best = 3.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double eps = 1e-12 + step * i;
    const double v = 2.0 * std::exp(-2.0 * dd * eps * eps) + std::min(1.0, a + eps);
    best = std::min(best, v);
  }
  return best;
}

// --- the seven criteria ---------------------------------------------------

bool criterion_published_bounds(std::string& detail) {
  const struct {
    double delta;
    std::size_t m;
    double reported;  // published 1 - gamma
  } rows[] = {
      {0.9167, 288, 0.19}, {0.7925, 53, 0.43}, {0.8125, 64, 0.39},
      {0.9622, 1562, 0.09}, {0.7778, 45, 0.46},
  };
  double worst = 0.0;
  for (const auto& row : rows) {
    const double got = 1.0 - rho(row.delta, row.m);
    worst = std::max(worst, std::abs(got - row.reported));
  }
  std::ostringstream os;
  os << "five published error-rejection bounds reproduced, worst deviation "
     << worst << " (limit 0.02)";
  detail = os.str();
  return worst <= 0.02;
}

bool criterion_curves(std::string& detail) {
  const std::vector<double> deltas{0.8, 0.85, 0.9, 0.95};
  std::vector<std::size_t> ms;
  for (double m = 10.0; m <= 100'000.0; m *= 1.35) {
    ms.push_back(static_cast<std::size_t>(m));
  }
  ms.push_back(100'000);
  std::vector<std::vector<CurvePoint>> curves;
  for (double d : deltas) curves.push_back(bound_curve(d, ms));
  bool ok = true;
  double worst_gap = 0.0;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (std::size_t i = 0; i < curves[c].size(); ++i) {
      if (i > 0 && curves[c][i].gamma < curves[c][i - 1].gamma - 1e-12) ok = false;
      if (c > 0 && curves[c][i].gamma < curves[c - 1][i].gamma - 1e-12) ok = false;
      if (curves[c][i].gamma < 0.0 || curves[c][i].gamma > deltas[c]) ok = false;
    }
    worst_gap = std::max(worst_gap, deltas[c] - curves[c].back().gamma);
  }
  std::ostringstream os;
  os << "four gamma curves over m in [10, 1e5] are monotone, ordered by delta, "
     << "and close the gap to " << worst_gap << " (limit 0.01)";
  detail = os.str();
  return ok && worst_gap < 0.01;
}

bool criterion_monte_carlo(std::string& detail) {
  const auto base = [] {
    SyntheticSpec spec;
    spec.d = 3;
    spec.noise_sigma = 1.0;
    spec.test_count = 200;
    spec.trials = 200;
    spec.pca = PcaTarget::fixed(2);
    ClassScoreModel a;
    a.label = "a";
    a.m_plus = 200;
    a.m_minus = 200;
    ClassScoreModel b = a;
    b.label = "b";
    spec.classes = {a, b};
    return spec;
  }();

  SyntheticSpec separated = base;
  separated.seed = 101;
  for (auto& c : separated.classes) {
    c.positive_mean = 5.0;
    c.negative_mean = -5.0;
    c.delta = 0.9;
  }
  SyntheticSpec overlapping = base;
  overlapping.seed = 102;
  for (auto& c : overlapping.classes) {
    c.positive_mean = 1.0;
    c.negative_mean = -1.0;
    c.delta = 0.8;
  }
  SyntheticSpec identical = base;
  identical.seed = 103;
  for (auto& c : identical.classes) {
    c.positive_mean = 0.0;
    c.negative_mean = 0.0;
    c.delta = 0.8;
  }

  bool all_pass = true;
  std::ostringstream os;
  os << "Monte-Carlo validation over 200 trials:";
  const char* names[] = {"separated", "overlapping", "identical"};
  const SyntheticSpec* specs[] = {&separated, &overlapping, &identical};
  for (int i = 0; i < 3; ++i) {
    const auto report = validate_bounds(*specs[i]);
    all_pass = all_pass && report.pass && report.failed_trials.empty();
    os << ' ' << names[i] << (report.pass ? " ok" : " VIOLATED");
  }
  detail = os.str();
  return all_pass;
}

bool criterion_optimizer(std::string& detail) {
  Rng rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.next_unit();
    const double d_real = std::exp(rng.next_unit() * std::log(1e6));
    const auto d = std::max<std::size_t>(1, static_cast<std::size_t>(d_real));
    worst = std::max(worst, std::abs(rho(a, d) - oracle_rho(a, d)));
    worst = std::max(worst, std::abs(psi(a, d) - oracle_psi(a, d)));
  }
  std::ostringstream os;
  os << "rho and psi agree with a 1e6-point reference grid on 200 random "
     << "inputs, worst gap " << worst << " (limit 1e-6)";
  detail = os.str();
  return worst <= 1e-6;
}

bool criterion_ecdf(std::string& detail) {
  Rng rng(2027);
  // Randomized agreement with counting oracles.
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng.next_below(50);
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng.next_below(8)) * 0.5 - 1.0;
    const auto cdf = EmpiricalCdf::from_samples(v);

    const double s = rng.next_unit() * 6.0 - 3.0;
    std::size_t count = 0;
    for (double x : v) count += x <= s ? 1 : 0;
    if (cdf.evaluate(s) != static_cast<double>(count) / static_cast<double>(n)) {
      detail = "evaluate disagrees with the counting oracle";
      return false;
    }

    const double y = std::max(rng.next_unit(), 1e-12);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double expected = sorted.back();
    for (double x : sorted) {
      std::size_t le = 0;
      for (double w : sorted) le += w <= x ? 1 : 0;
      if (static_cast<double>(le) / static_cast<double>(n) >= y) {
        expected = x;
        break;
      }
    }
    if (cdf.pseudo_inverse(y) != expected) {
      detail = "pseudo_inverse disagrees with the scan oracle";
      return false;
    }
  }
  // Exhaustive Galois check on all small multisets over a 4-value alphabet.
  const std::vector<double> alphabet{-1.0, 0.0, 0.5, 2.0};
  const std::vector<double> probes{-2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0, 3.0};
  std::size_t counts[4];
  std::size_t multisets = 0;
  for (counts[0] = 0; counts[0] <= 12; ++counts[0]) {
    for (counts[1] = 0; counts[0] + counts[1] <= 12; ++counts[1]) {
      for (counts[2] = 0; counts[0] + counts[1] + counts[2] <= 12; ++counts[2]) {
        for (counts[3] = 0; counts[0] + counts[1] + counts[2] + counts[3] <= 12;
             ++counts[3]) {
          std::vector<double> v;
          for (std::size_t k = 0; k < 4; ++k) v.insert(v.end(), counts[k], alphabet[k]);
          if (v.empty()) continue;
          ++multisets;
          const auto cdf = EmpiricalCdf::from_samples(v);
          const auto n = v.size();
          for (std::size_t i = 1; i <= 2 * n; ++i) {
            const double y = static_cast<double>(i) / static_cast<double>(2 * n);
            const double inv = cdf.pseudo_inverse(y);
            for (double s : probes) {
              if ((inv <= s) != (cdf.evaluate(s) >= y)) {
                detail = "Galois property violated";
                return false;
              }
            }
          }
        }
      }
    }
  }
  std::ostringstream os;
  os << "ECDF matches counting oracles on 1000 random multisets and the "
     << "quantile Galois property holds on " << multisets << " exhaustive cases";
  detail = os.str();
  return true;
}

bool criterion_corrector(std::string& detail) {
  Rng rng(2028);
  const auto samples = two_class_samples(rng, 120, 90);
  FitConfig low;
  low.deltas = {0.5, 0.5};
  low.pca = PcaTarget::fixed(2);
  FitConfig high = low;
  high.deltas = {0.8, 0.8};
  const auto m_low = fit_corrector(samples, {"a", "b"}, low);
  const auto m_high = fit_corrector(samples, {"a", "b"}, high);

  // Resubstitution floor at both levels.
  const auto parts = partition(samples, {"a", "b"});
  for (const auto* model : {&m_low, &m_high}) {
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& cls = model->per_class()[c];
      Eigen::MatrixXd X(parts[c].negatives.size(), 3);
      for (std::size_t i = 0; i < parts[c].negatives.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = samples[parts[c].negatives[i]].features;
      }
      const Eigen::VectorXd scores = cls.projector.project_rows(X);
      const auto below = std::count_if(scores.data(), scores.data() + scores.size(),
                                       [&](double s) { return s <= cls.threshold; });
      if (static_cast<double>(below) < cls.delta * static_cast<double>(cls.m_minus)) {
        detail = "resubstitution floor violated";
        return false;
      }
    }
  }

  // The delta-0.5 reject region is contained in the delta-0.8 one.
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd z(3);
    z << 4.0 * rng.next_normal(), 4.0 * rng.next_normal(), rng.next_normal();
    const auto label = i % 2 == 0 ? "a" : "b";
    if (m_low.decide(label, z).rejected && !m_high.decide(label, z).rejected) {
      detail = "reject regions do not nest in delta";
      return false;
    }
  }

  // Serialization round trip preserves 1000 decisions bit for bit.
  std::stringstream buffer;
  save_model(m_high, buffer);
  const auto loaded = load_model(buffer);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd z(3);
    z << 3.0 * rng.next_normal(), 3.0 * rng.next_normal(), rng.next_normal();
    const auto label = i % 2 == 0 ? "a" : "b";
    const auto d0 = m_high.decide(label, z);
    const auto d1 = loaded.decide(label, z);
    if (d0.rejected != d1.rejected || d0.score != d1.score ||
        d0.threshold != d1.threshold) {
      detail = "decisions changed across a save/load round trip";
      return false;
    }
  }
  detail =
      "threshold floor holds, reject regions nest in delta, and a save/load "
      "round trip preserves 1000 decisions exactly";
  return true;
}

bool criterion_metrics(std::string& detail) {
  Rng rng(2029);
  const auto train = two_class_samples(rng, 80, 60);
  FitConfig config;
  config.deltas = {0.8, 0.8};
  config.pca = PcaTarget::fixed(2);
  const auto model = fit_corrector(train, {"a", "b"}, config);

  // Craft an eval set with exactly 38 accepted correct and 9 accepted
  // incorrect decisions for class a: scores are placed one unit off the
  // threshold via the orthonormal PCA rows.
  const auto& cls = model.corrector_for("a");
  const auto& pca = model.pca();
  const Eigen::VectorXd& w = cls.projector.weights;
  const auto at_score = [&](double t) {
    return Eigen::VectorXd(pca.mean + pca.components.transpose() * (t * w / w.squaredNorm()));
  };
  std::vector<LabeledSample> eval;
  int serial = 0;
  const auto add = [&](int n, double score, const std::string& truth) {
    for (int i = 0; i < n; ++i) {
      eval.push_back(make_sample("e" + std::to_string(serial++), at_score(score), "a",
                                 truth));
    }
  };
  add(38, cls.threshold + 1.0, "a");
  add(9, cls.threshold + 1.0, "b");
  add(3, cls.threshold - 1.0, "a");
  add(5, cls.threshold - 1.0, "b");

  const auto report = evaluate_corrector(model, eval);
  const auto& r = report.per_class[0];
  if (r.accepted_correct != 38 || r.accepted_incorrect != 9 ||
      r.rejected_correct != 3 || r.rejected_incorrect != 5) {
    detail = "crafted confusion counts did not materialize";
    return false;
  }
  if (!r.conditional_recall || *r.conditional_recall != 38.0 / 47.0) {
    detail = "conditional recall is not the exact count ratio";
    return false;
  }
  std::ostringstream os;
  os << "a 38-of-47 accepted confusion yields conditional recall "
     << *r.conditional_recall << ", within 0.005 of 0.81";
  detail = os.str();
  return std::abs(*r.conditional_recall - 0.81) < 0.005;
}

}  // namespace

int main() {
  const struct {
    const char* name;
    bool (*run)(std::string&);
  } criteria[] = {
      {"published bounds", criterion_published_bounds},
      {"bound curves", criterion_curves},
      {"Monte-Carlo validation", criterion_monte_carlo},
      {"optimizer accuracy", criterion_optimizer},
      {"ECDF correctness", criterion_ecdf},
      {"corrector invariants", criterion_corrector},
      {"metrics fidelity", criterion_metrics},
  };

  int failures = 0;
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::printf("[%s] criterion %zu (%s): %s [%lld ms]\n", ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name, detail.c_str(), static_cast<long long>(ms));
    failures += ok ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, std::size(criteria));
  } else {
    std::printf("all %zu criteria passed\n", std::size(criteria));
  }
  return failures;
}
