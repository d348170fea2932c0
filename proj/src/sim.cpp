#include "abstain/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <unordered_set>

#include "abstain/errors.hpp"
#include "abstain/rng.hpp"

namespace abstain {

namespace {

using nlohmann::json;

// Stream tags: one independent generator per (class, stratum) so stratum
// sizes never shift one another's draws.
enum StreamRole : std::uint64_t { kFitPos = 0, kFitNeg = 1, kTestPos = 2, kTestNeg = 3 };

Eigen::VectorXd draw_features(Rng& rng, std::size_t d, double score,
                              double noise_sigma) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  z(0) = score;
  for (std::size_t i = 1; i < d; ++i) {
    z(static_cast<Eigen::Index>(i)) = noise_sigma * rng.next_normal();
  }
  return z;
}

void emit_stratum(std::vector<LabeledSample>& out, const SyntheticSpec& spec,
                  std::size_t class_index, StreamRole role, std::size_t count,
                  const char* id_prefix) {
  const auto& cls = spec.classes[class_index];
  const bool positive = role == kFitPos || role == kTestPos;
  const double mean = positive ? cls.positive_mean : cls.negative_mean;
  const double sigma = positive ? cls.positive_sigma : cls.negative_sigma;
  std::string truth;
  if (positive) {
    truth = cls.label;
  } else if (spec.classes.size() > 1) {
    truth = spec.classes[(class_index + 1) % spec.classes.size()].label;
  } else {
    truth = "~other";  // outside any sane label set, still a valid truth
  }

  Rng rng(derive_stream_seed(spec.seed, class_index * 4 + role));
  for (std::size_t i = 0; i < count; ++i) {
    LabeledSample s;
    s.id = std::string(id_prefix) + cls.label + "-" + std::to_string(i);
    s.features = draw_features(rng, spec.d, mean + sigma * rng.next_normal(),
                               spec.noise_sigma);
    s.predicted = cls.label;
    s.truth = truth;
    out.push_back(std::move(s));
  }
}

RateSummary summarize(const std::vector<double>& rates) {
  RateSummary s;
  s.min = *std::min_element(rates.begin(), rates.end());
  s.max = *std::max_element(rates.begin(), rates.end());
  double sum = 0.0;
  for (double r : rates) sum += r;
  s.mean = sum / static_cast<double>(rates.size());
  double sq = 0.0;
  for (double r : rates) sq += (r - s.mean) * (r - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(rates.size()));
  return s;
}

double mc_tolerance(double p, std::size_t trials, std::size_t per_trial) {
  return 3.0 * std::sqrt(std::max(0.0, p * (1.0 - p)) /
                         static_cast<double>(trials * per_trial));
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::vector<std::string> SyntheticSpec::label_set() const {
  std::vector<std::string> labels;
  labels.reserve(classes.size());
  for (const auto& c : classes) labels.push_back(c.label);
  return labels;
}

std::vector<double> SyntheticSpec::deltas() const {
  std::vector<double> out;
  out.reserve(classes.size());
  for (const auto& c : classes) out.push_back(c.delta);
  return out;
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.classes.empty()) {
    throw input_error("synthetic spec: no classes");
  }
  if (spec.d < 1) {
    throw input_error("synthetic spec: d must be at least 1");
  }
  if (!std::isfinite(spec.noise_sigma) || spec.noise_sigma < 0.0) {
    throw input_error("synthetic spec: noise sigma must be nonnegative");
  }
  if (spec.test_count < 1) {
    throw input_error("synthetic spec: test count must be positive");
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : spec.classes) {
    if (c.label.empty() || !seen.insert(c.label).second) {
      throw input_error("synthetic spec: class labels must be nonempty and unique");
    }
    if (!std::isfinite(c.positive_mean) || !std::isfinite(c.negative_mean)) {
      throw input_error("synthetic spec: class '" + c.label + "': non-finite mean");
    }
    if (!(c.positive_sigma > 0.0) || !(c.negative_sigma > 0.0)) {
      throw input_error("synthetic spec: class '" + c.label +
                        "': score sigma must be positive");
    }
    if (c.m_plus < 2 || c.m_minus < 2) {
      throw input_error("synthetic spec: class '" + c.label +
                        "': counts must be at least 2");
    }
    if (!(c.delta > 0.0 && c.delta < 1.0)) {
      throw input_error("synthetic spec: class '" + c.label +
                        "': delta outside (0,1)");
    }
  }
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> generate_synthetic(
    const SyntheticSpec& spec) {
  validate_spec(spec);
  std::vector<LabeledSample> fit, test;
  for (std::size_t j = 0; j < spec.classes.size(); ++j) {
    emit_stratum(fit, spec, j, kFitPos, spec.classes[j].m_plus, "fit+");
    emit_stratum(fit, spec, j, kFitNeg, spec.classes[j].m_minus, "fit-");
    emit_stratum(test, spec, j, kTestPos, spec.test_count, "test+");
    emit_stratum(test, spec, j, kTestNeg, spec.test_count, "test-");
  }
  return {std::move(fit), std::move(test)};
}

ValidationReport validate_bounds(const SyntheticSpec& spec) {
  validate_spec(spec);
  if (spec.trials < 100) {
    throw input_error("validation needs at least 100 trials");
  }

  const auto labels = spec.label_set();
  const std::size_t q = labels.size();

  FitConfig config;
  config.deltas = spec.deltas();
  config.pca = spec.pca;
  config.ridge = spec.ridge;
  config.split = spec.split;
  config.split_fraction = spec.split_fraction;

  std::vector<std::vector<double>> reject_rates(q), accept_rates(q);
  std::vector<double> upsilon_sum(q, 0.0);
  std::vector<std::size_t> vacuous(q, 0);
  ValidationReport report;
  report.trials_requested = spec.trials;
  report.test_count = spec.test_count;

  for (std::size_t trial = 0; trial < spec.trials; ++trial) {
    SyntheticSpec trial_spec = spec;
    trial_spec.seed = derive_stream_seed(spec.seed, trial + 1);
    config.seed = trial_spec.seed;
    auto [fit_set, test_set] = generate_synthetic(trial_spec);

    std::optional<CorrectorModel> model;
    try {
      model.emplace(fit_corrector(fit_set, labels, config));
    } catch (const numeric_error&) {
      // A singular Fisher system on one unlucky draw is the trial's failure,
      // not the harness's; it is listed and excluded from the averages.
      report.failed_trials.push_back(trial);
      continue;
    }
    // Count per class over the fresh test samples.
    std::vector<std::size_t> accepted_pos(q, 0), rejected_neg(q, 0);
    for (const auto& s : test_set) {
      const auto it = std::find(labels.begin(), labels.end(), s.predicted);
      const auto j = static_cast<std::size_t>(it - labels.begin());
      const Decision d = model->decide(s.predicted, s.features);
      if (*s.truth == s.predicted) {
        if (!d.rejected) accepted_pos[j] += 1;
      } else {
        if (d.rejected) rejected_neg[j] += 1;
      }
    }
    const double n = static_cast<double>(spec.test_count);
    for (std::size_t j = 0; j < q; ++j) {
      accept_rates[j].push_back(static_cast<double>(accepted_pos[j]) / n);
      reject_rates[j].push_back(static_cast<double>(rejected_neg[j]) / n);
      const auto& b = model->per_class()[j].bounds;
      upsilon_sum[j] += b.upsilon;
      if (b.upsilon_vacuous) vacuous[j] += 1;
    }
    report.trials_completed += 1;
  }

  if (report.trials_completed == 0) {
    throw numeric_error("every validation trial failed to fit");
  }

  report.pass = true;
  for (std::size_t j = 0; j < q; ++j) {
    ClassValidation cv;
    cv.label = labels[j];
    cv.gamma = rho(spec.classes[j].delta, spec.classes[j].m_minus);
    cv.mean_upsilon = upsilon_sum[j] / static_cast<double>(report.trials_completed);
    cv.upsilon_vacuous_trials = vacuous[j];
    cv.reject_given_incorrect = summarize(reject_rates[j]);
    cv.accept_given_correct = summarize(accept_rates[j]);
    cv.reject_tolerance = mc_tolerance(cv.reject_given_incorrect.mean,
                                       report.trials_completed, spec.test_count);
    cv.accept_tolerance = mc_tolerance(cv.accept_given_correct.mean,
                                       report.trials_completed, spec.test_count);
    cv.reject_pass =
        cv.reject_given_incorrect.mean >= cv.gamma - cv.reject_tolerance;
    cv.accept_pass =
        cv.accept_given_correct.mean >= cv.mean_upsilon - cv.accept_tolerance;
    report.pass = report.pass && cv.pass();
    report.per_class.push_back(std::move(cv));
  }
  return report;
}

namespace {

json summary_json(const RateSummary& s) {
  return {{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"stddev", s.stddev}};
}

}  // namespace

SyntheticSpec spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw input_error(std::string("malformed simulation spec: ") + e.what());
  }
  try {
    SyntheticSpec spec;
    spec.d = doc.value("d", spec.d);
    spec.noise_sigma = doc.value("noise_sigma", spec.noise_sigma);
    spec.test_count = doc.value("test_count", spec.test_count);
    spec.trials = doc.value("trials", spec.trials);
    spec.seed = doc.value("seed", spec.seed);
    spec.ridge = doc.value("ridge", spec.ridge);
    spec.split = doc.value("split", spec.split);
    spec.split_fraction = doc.value("split_fraction", spec.split_fraction);
    if (doc.contains("pca")) {
      const auto& jp = doc.at("pca");
      if (jp.contains("k")) {
        spec.pca = PcaTarget::fixed(jp.at("k").get<std::size_t>());
      } else {
        spec.pca = PcaTarget::variance(jp.at("variance").get<double>());
      }
    }
    for (const auto& jc : doc.at("classes")) {
      ClassScoreModel c;
      c.label = jc.at("label").get<std::string>();
      c.positive_mean = jc.value("positive_mean", c.positive_mean);
      c.positive_sigma = jc.value("positive_sigma", c.positive_sigma);
      c.negative_mean = jc.value("negative_mean", c.negative_mean);
      c.negative_sigma = jc.value("negative_sigma", c.negative_sigma);
      c.m_plus = jc.value("m_plus", c.m_plus);
      c.m_minus = jc.value("m_minus", c.m_minus);
      c.delta = jc.value("delta", c.delta);
      spec.classes.push_back(std::move(c));
    }
    validate_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw input_error(std::string("malformed simulation spec: ") + e.what());
  }
}

std::string validation_json(const ValidationReport& report) {
  json classes = json::array();
  for (const auto& cv : report.per_class) {
    classes.push_back({{"label", cv.label},
                       {"gamma", cv.gamma},
                       {"mean_upsilon", cv.mean_upsilon},
                       {"upsilon_vacuous_trials", cv.upsilon_vacuous_trials},
                       {"reject_given_incorrect", summary_json(cv.reject_given_incorrect)},
                       {"accept_given_correct", summary_json(cv.accept_given_correct)},
                       {"reject_tolerance", cv.reject_tolerance},
                       {"accept_tolerance", cv.accept_tolerance},
                       {"reject_pass", cv.reject_pass},
                       {"accept_pass", cv.accept_pass}});
  }
  json doc;
  doc["classes"] = std::move(classes);
  doc["trials_requested"] = report.trials_requested;
  doc["trials_completed"] = report.trials_completed;
  doc["test_count"] = report.test_count;
  doc["failed_trials"] = report.failed_trials;
  doc["pass"] = report.pass;
  return doc.dump(2);
}

void write_validation_table(std::ostream& out, const ValidationReport& report) {
  out << "trials: " << report.trials_completed << "/" << report.trials_requested
      << "  test samples per class per condition: " << report.test_count << '\n';
  for (const auto& cv : report.per_class) {
    out << "class " << cv.label << ": reject|incorrect "
        << fixed4(cv.reject_given_incorrect.mean) << " >= gamma "
        << fixed4(cv.gamma) << " - " << fixed4(cv.reject_tolerance)
        << (cv.reject_pass ? "  ok" : "  VIOLATED") << '\n';
    out << "class " << cv.label << ": accept|correct  "
        << fixed4(cv.accept_given_correct.mean) << " >= upsilon "
        << fixed4(cv.mean_upsilon) << " - " << fixed4(cv.accept_tolerance);
    if (cv.upsilon_vacuous_trials > 0) {
      out << " (vacuous in " << cv.upsilon_vacuous_trials << " trials)";
    }
    out << (cv.accept_pass ? "  ok" : "  VIOLATED") << '\n';
  }
  out << (report.pass ? "bounds hold" : "BOUNDS VIOLATED") << '\n';
}

}  // namespace abstain
