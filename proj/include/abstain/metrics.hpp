#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abstain/corrector.hpp"

namespace abstain {

// Accept/reject confusion for one predicted class, with the derived rates and
// the theoretical bound they are judged against. Undefined rates (zero
// denominators) stay empty; they are never reported as 0 or 1.
struct ClassReport {
  std::string class_label;
  std::size_t accepted_correct = 0;
  std::size_t accepted_incorrect = 0;
  std::size_t rejected_correct = 0;
  std::size_t rejected_incorrect = 0;

  // accepted_correct / (accepted_correct + accepted_incorrect)
  std::optional<double> conditional_recall;
  // accepted_incorrect / (accepted_incorrect + rejected_incorrect): the share
  // of this class's errors that slipped through the gate.
  std::optional<double> accepted_error_proportion;

  double theoretical_accepted_error_ub = 1.0;  // 1 - gamma_j
  double theoretical_reject_lb = 0.0;          // gamma_j
  bool bound_violated = false;  // accepted_error_proportion exceeded the ub

  std::size_t predicted_count() const {
    return accepted_correct + accepted_incorrect + rejected_correct +
           rejected_incorrect;
  }
  std::size_t rejected_total() const {
    return rejected_correct + rejected_incorrect;
  }
};

struct EvaluationReport {
  std::vector<ClassReport> per_class;  // ordered as the model's label set
  std::size_t sample_count = 0;

  // Pooled empirical counterparts of the two collapsed bounds.
  std::optional<double> overall_accept_given_correct;
  std::optional<double> overall_reject_given_incorrect;

  // Empirical P(l = l_j) over the model's label set. Truths outside the label
  // set carry the residual mass and weight no class's bound.
  std::vector<double> truth_priors;
  double out_of_set_truth_mass = 0.0;

  double collapsed_accept_lb = 0.0;
  double collapsed_reject_lb = 0.0;
  double collapsed_reject_lb_raw = 0.0;  // may exceed 1 before clamping
};

// Runs decide() per sample and tallies the four-way outcome per predicted
// class. Every sample must carry a truth label and a predicted label known to
// the model.
EvaluationReport evaluate_corrector(const CorrectorModel& model,
                                    const std::vector<LabeledSample>& samples);

// The corrector's conditional recall against an accept-everything baseline
// (whose "conditional" recall is plain per-class precision).
struct BaselineComparison {
  struct Row {
    std::string class_label;
    std::optional<double> corrector_recall;
    std::optional<double> baseline_recall;
    std::optional<double> recall_delta;  // corrector - baseline
  };
  std::vector<Row> per_class;
  EvaluationReport corrected;
};

BaselineComparison compare_with_baseline(const CorrectorModel& model,
                                         const std::vector<LabeledSample>& samples);

// Classes-as-columns table: accepted correct / accepted incorrect / rejected /
// accepted error proportion / theoretical upper bound / conditional recall.
void write_report_table(std::ostream& out, const EvaluationReport& report);

// Per-class fit summary (delta, theta, M+, M-, gamma, upsilon), full
// precision so printed bounds compare exactly across commands.
void write_model_summary(std::ostream& out, const CorrectorModel& model);

// Machine-readable form of the report (JSON text).
std::string report_json(const EvaluationReport& report);
std::string comparison_json(const BaselineComparison& comparison);

}  // namespace abstain
