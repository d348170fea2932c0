#include "abstain/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <ostream>

#include "abstain/errors.hpp"
#include "abstain/format.hpp"

namespace abstain {

namespace {

using nlohmann::json;

std::string rate_cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void write_grid(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return;
  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out << row[c] << std::string(widths[c] - row[c].size(), ' ');
      } else {
        out << "  " << std::string(widths[c] - row[c].size(), ' ') << row[c];
      }
    }
    out << '\n';
  }
}

json optional_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json class_report_json(const ClassReport& r) {
  return {{"label", r.class_label},
          {"accepted_correct", r.accepted_correct},
          {"accepted_incorrect", r.accepted_incorrect},
          {"rejected_correct", r.rejected_correct},
          {"rejected_incorrect", r.rejected_incorrect},
          {"conditional_recall", optional_to_json(r.conditional_recall)},
          {"accepted_error_proportion", optional_to_json(r.accepted_error_proportion)},
          {"theoretical_accepted_error_ub", r.theoretical_accepted_error_ub},
          {"theoretical_reject_lb", r.theoretical_reject_lb},
          {"bound_violated", r.bound_violated}};
}

}  // namespace

EvaluationReport evaluate_corrector(const CorrectorModel& model,
                                    const std::vector<LabeledSample>& samples) {
  if (samples.empty()) {
    throw input_error("empty sample");
  }
  const auto& labels = model.label_set();

  EvaluationReport report;
  report.sample_count = samples.size();
  report.per_class.resize(labels.size());
  report.truth_priors.assign(labels.size(), 0.0);
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto& c = model.per_class()[j];
    auto& r = report.per_class[j];
    r.class_label = labels[j];
    r.theoretical_reject_lb = c.bounds.gamma;
    r.theoretical_accepted_error_ub = 1.0 - c.bounds.gamma;
  }

  std::vector<std::size_t> truth_counts(labels.size(), 0);
  for (const auto& sample : samples) {
    if (!sample.truth) {
      throw input_error("unlabeled sample in correction set ('" + sample.id + "')");
    }
    const auto it = std::find(labels.begin(), labels.end(), sample.predicted);
    if (it == labels.end()) {
      throw input_error("sample '" + sample.id + "': predicted label '" +
                        sample.predicted + "' is not in the label set");
    }
    const auto j = static_cast<std::size_t>(it - labels.begin());
    const Decision d = model.decide(sample.predicted, sample.features);
    const bool correct = *sample.truth == sample.predicted;
    auto& r = report.per_class[j];
    if (d.rejected) {
      (correct ? r.rejected_correct : r.rejected_incorrect) += 1;
    } else {
      (correct ? r.accepted_correct : r.accepted_incorrect) += 1;
    }
    const auto tt = std::find(labels.begin(), labels.end(), *sample.truth);
    if (tt != labels.end()) {
      truth_counts[static_cast<std::size_t>(tt - labels.begin())] += 1;
    }
  }

  std::size_t correct_total = 0, accepted_correct_total = 0;
  std::size_t incorrect_total = 0, rejected_incorrect_total = 0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    auto& r = report.per_class[j];
    if (const auto acc = r.accepted_correct + r.accepted_incorrect; acc > 0) {
      r.conditional_recall = static_cast<double>(r.accepted_correct) /
                             static_cast<double>(acc);
    }
    if (const auto err = r.accepted_incorrect + r.rejected_incorrect; err > 0) {
      r.accepted_error_proportion = static_cast<double>(r.accepted_incorrect) /
                                    static_cast<double>(err);
    }
    r.bound_violated = r.accepted_error_proportion &&
                       *r.accepted_error_proportion > r.theoretical_accepted_error_ub;

    correct_total += r.accepted_correct + r.rejected_correct;
    accepted_correct_total += r.accepted_correct;
    incorrect_total += r.accepted_incorrect + r.rejected_incorrect;
    rejected_incorrect_total += r.rejected_incorrect;
  }
  if (correct_total > 0) {
    report.overall_accept_given_correct =
        static_cast<double>(accepted_correct_total) / static_cast<double>(correct_total);
  }
  if (incorrect_total > 0) {
    report.overall_reject_given_incorrect =
        static_cast<double>(rejected_incorrect_total) /
        static_cast<double>(incorrect_total);
  }

  double prior_sum = 0.0;
  double accept_lb = 0.0;
  double reject_raw = 0.0;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const double p = static_cast<double>(truth_counts[j]) /
                     static_cast<double>(samples.size());
    report.truth_priors[j] = p;
    prior_sum += p;
    accept_lb += p * model.per_class()[j].bounds.upsilon;
    reject_raw += (1.0 - p) * model.per_class()[j].bounds.gamma;
  }
  report.out_of_set_truth_mass = std::max(0.0, 1.0 - prior_sum);
  report.collapsed_accept_lb = accept_lb;
  report.collapsed_reject_lb_raw = reject_raw;
  report.collapsed_reject_lb = std::clamp(reject_raw, 0.0, 1.0);
  return report;
}

BaselineComparison compare_with_baseline(const CorrectorModel& model,
                                         const std::vector<LabeledSample>& samples) {
  BaselineComparison cmp;
  cmp.corrected = evaluate_corrector(model, samples);
  for (const auto& r : cmp.corrected.per_class) {
    BaselineComparison::Row row;
    row.class_label = r.class_label;
    row.corrector_recall = r.conditional_recall;
    if (const auto total = r.predicted_count(); total > 0) {
      row.baseline_recall =
          static_cast<double>(r.accepted_correct + r.rejected_correct) /
          static_cast<double>(total);
    }
    if (row.corrector_recall && row.baseline_recall) {
      row.recall_delta = *row.corrector_recall - *row.baseline_recall;
    }
    cmp.per_class.push_back(std::move(row));
  }
  return cmp;
}

void write_report_table(std::ostream& out, const EvaluationReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"class"});
  rows.push_back({"accepted correct"});
  rows.push_back({"accepted incorrect"});
  rows.push_back({"rejected"});
  rows.push_back({"accepted error proportion"});
  rows.push_back({"theoretical upper bound"});
  rows.push_back({"conditional recall"});

  bool any_violation = false;
  for (const auto& r : report.per_class) {
    rows[0].push_back(r.class_label);
    rows[1].push_back(std::to_string(r.accepted_correct));
    rows[2].push_back(std::to_string(r.accepted_incorrect));
    rows[3].push_back(std::to_string(r.rejected_total()));
    std::string prop = rate_cell(r.accepted_error_proportion);
    if (r.bound_violated) {
      prop += '*';
      any_violation = true;
    }
    rows[4].push_back(std::move(prop));
    rows[5].push_back(fixed4(r.theoretical_accepted_error_ub));
    rows[6].push_back(rate_cell(r.conditional_recall));
  }
  write_grid(out, rows);

  out << "samples: " << report.sample_count;
  if (report.overall_accept_given_correct) {
    out << "  accept|correct: " << fixed4(*report.overall_accept_given_correct)
        << " (bound " << fixed4(report.collapsed_accept_lb) << ")";
  }
  if (report.overall_reject_given_incorrect) {
    out << "  reject|incorrect: " << fixed4(*report.overall_reject_given_incorrect)
        << " (bound " << fixed4(report.collapsed_reject_lb) << ")";
  }
  out << '\n';
  if (any_violation) {
    out << "* accepted error proportion exceeds its theoretical upper bound\n";
  }
}

void write_model_summary(std::ostream& out, const CorrectorModel& model) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"class", "delta", "theta", "m+", "m-", "gamma", "upsilon", ""});
  for (const auto& c : model.per_class()) {
    rows.push_back({c.class_label, format_double(c.delta), format_double(c.threshold),
                    std::to_string(c.m_plus), std::to_string(c.m_minus),
                    format_double(c.bounds.gamma), format_double(c.bounds.upsilon),
                    c.bounds.upsilon_vacuous ? "(upsilon vacuous)" : ""});
  }
  write_grid(out, rows);
}

std::string report_json(const EvaluationReport& report) {
  json doc;
  doc["sample_count"] = report.sample_count;
  json classes = json::array();
  for (const auto& r : report.per_class) classes.push_back(class_report_json(r));
  doc["classes"] = std::move(classes);
  doc["overall"] = {
      {"accept_given_correct", optional_to_json(report.overall_accept_given_correct)},
      {"reject_given_incorrect", optional_to_json(report.overall_reject_given_incorrect)},
      {"truth_priors", report.truth_priors},
      {"out_of_set_truth_mass", report.out_of_set_truth_mass},
      {"collapsed_accept_lb", report.collapsed_accept_lb},
      {"collapsed_reject_lb", report.collapsed_reject_lb},
      {"collapsed_reject_lb_raw", report.collapsed_reject_lb_raw}};
  return doc.dump(2);
}

std::string comparison_json(const BaselineComparison& comparison) {
  json rows = json::array();
  for (const auto& row : comparison.per_class) {
    rows.push_back({{"label", row.class_label},
                    {"corrector_recall", optional_to_json(row.corrector_recall)},
                    {"baseline_recall", optional_to_json(row.baseline_recall)},
                    {"recall_delta", optional_to_json(row.recall_delta)}});
  }
  json doc;
  doc["per_class"] = std::move(rows);
  doc["corrected"] = json::parse(report_json(comparison.corrected));
  return doc.dump(2);
}

}  // namespace abstain
