#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abstain/bounds.hpp"
#include "abstain/corrector.hpp"
#include "abstain/errors.hpp"
#include "abstain/metrics.hpp"
#include "abstain/rng.hpp"

using namespace abstain;

namespace {

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

CorrectorModel fitted_model(Rng& rng) {
  FitConfig config;
  config.deltas = {0.8, 0.8};
  config.pca = PcaTarget::fixed(2);
  return fit_corrector(two_class_samples(rng, 80, 60), {"a", "b"}, config);
}

// Feature vector whose class score lands on `target` up to float noise: the
// PCA rows are orthonormal, so mean + T^t (t w / |w|^2) projects back to t.
Eigen::VectorXd feature_for_score(const CorrectorModel& model,
                                  const std::string& label, double target) {
  const auto& cls = model.corrector_for(label);
  const auto& pca = model.pca();
  const Eigen::VectorXd& w = cls.projector.weights;
  const Eigen::VectorXd reduced = target * w / w.squaredNorm();
  return pca.mean + pca.components.transpose() * reduced;
}

// Eval set with exact per-class confusion counts, scores placed one unit off
// the threshold so rounding cannot flip a side.
std::vector<LabeledSample> crafted_samples(const CorrectorModel& model,
                                           const std::string& label,
                                           const std::string& wrong_truth,
                                           std::size_t accepted_correct,
                                           std::size_t accepted_incorrect,
                                           std::size_t rejected_correct,
                                           std::size_t rejected_incorrect) {
  const double theta = model.corrector_for(label).threshold;
  std::vector<LabeledSample> out;
  std::size_t serial = 0;
  const auto add = [&](std::size_t n, double score, const std::string& truth) {
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(make_sample(label + "#" + std::to_string(serial++),
                                feature_for_score(model, label, score), label, truth));
    }
  };
  add(accepted_correct, theta + 1.0, label);
  add(accepted_incorrect, theta + 1.0, wrong_truth);
  add(rejected_correct, theta - 1.0, label);
  add(rejected_incorrect, theta - 1.0, wrong_truth);
  return out;
}

}  // namespace

TEST_CASE("counts are conserved and rates recompute from counts") {
  Rng rng(211);
  const auto model = fitted_model(rng);
  const auto eval = two_class_samples(rng, 50, 35);
  const auto report = evaluate_corrector(model, eval);

  CHECK(report.sample_count == eval.size());
  std::size_t total = 0;
  for (const auto& r : report.per_class) {
    total += r.predicted_count();
    CHECK(r.predicted_count() == 85);  // 50 correct + 35 errors per class
    if (r.conditional_recall) {
      CHECK(*r.conditional_recall ==
            static_cast<double>(r.accepted_correct) /
                static_cast<double>(r.accepted_correct + r.accepted_incorrect));
    }
    if (r.accepted_error_proportion) {
      CHECK(*r.accepted_error_proportion ==
            static_cast<double>(r.accepted_incorrect) /
                static_cast<double>(r.accepted_incorrect + r.rejected_incorrect));
    }
    const auto& cls = model.corrector_for(r.class_label);
    CHECK(r.theoretical_reject_lb == cls.bounds.gamma);
    CHECK(r.theoretical_accepted_error_ub == 1.0 - cls.bounds.gamma);
  }
  CHECK(total == eval.size());

  // Overall rates are the pooled ratios of the same counts.
  std::size_t ac = 0, c_all = 0, ri = 0, i_all = 0;
  for (const auto& r : report.per_class) {
    ac += r.accepted_correct;
    c_all += r.accepted_correct + r.rejected_correct;
    ri += r.rejected_incorrect;
    i_all += r.accepted_incorrect + r.rejected_incorrect;
  }
  REQUIRE(report.overall_accept_given_correct.has_value());
  REQUIRE(report.overall_reject_given_incorrect.has_value());
  CHECK(*report.overall_accept_given_correct ==
        static_cast<double>(ac) / static_cast<double>(c_all));
  CHECK(*report.overall_reject_given_incorrect ==
        static_cast<double>(ri) / static_cast<double>(i_all));
}

TEST_CASE("crafted confusion reproduces a known conditional recall") {
  Rng rng(223);
  const auto model = fitted_model(rng);
  // 38 accepted correct, 9 accepted incorrect: recall 38/47 ~ 0.81.
  const auto eval = crafted_samples(model, "a", "b", 38, 9, 3, 5);
  const auto report = evaluate_corrector(model, eval);
  const auto& r = report.per_class[0];
  CHECK(r.accepted_correct == 38);
  CHECK(r.accepted_incorrect == 9);
  CHECK(r.rejected_correct == 3);
  CHECK(r.rejected_incorrect == 5);
  REQUIRE(r.conditional_recall.has_value());
  CHECK(*r.conditional_recall == 38.0 / 47.0);
  CHECK(std::abs(*r.conditional_recall - 0.81) < 0.005);
  REQUIRE(r.accepted_error_proportion.has_value());
  CHECK(*r.accepted_error_proportion == 9.0 / 14.0);

  // Nothing was predicted as "b": its rates are undefined, not zero.
  const auto& rb = report.per_class[1];
  CHECK(rb.predicted_count() == 0);
  CHECK_FALSE(rb.conditional_recall.has_value());
  CHECK_FALSE(rb.accepted_error_proportion.has_value());
}

TEST_CASE("an error slipping through one of three gives proportion one third") {
  Rng rng(227);
  const auto model = fitted_model(rng);
  const auto eval = crafted_samples(model, "a", "b", 4, 1, 0, 2);
  const auto report = evaluate_corrector(model, eval);
  CHECK(*report.per_class[0].accepted_error_proportion == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("all-rejected class has no conditional recall") {
  Rng rng(229);
  const auto model = fitted_model(rng);
  const auto eval = crafted_samples(model, "a", "b", 0, 0, 6, 4);
  const auto report = evaluate_corrector(model, eval);
  const auto& r = report.per_class[0];
  CHECK_FALSE(r.conditional_recall.has_value());
  CHECK(*r.accepted_error_proportion == 0.0);
  CHECK_FALSE(r.bound_violated);
}

TEST_CASE("bound violation flag") {
  Rng rng(233);
  const auto model = fitted_model(rng);
  // Every error accepted: proportion 1 exceeds any nontrivial upper bound.
  const auto bad = crafted_samples(model, "a", "b", 5, 7, 0, 0);
  const auto bad_report = evaluate_corrector(model, bad);
  CHECK(*bad_report.per_class[0].accepted_error_proportion == 1.0);
  CHECK(bad_report.per_class[0].theoretical_accepted_error_ub < 1.0);
  CHECK(bad_report.per_class[0].bound_violated);
  // Every error rejected: no violation.
  const auto good = crafted_samples(model, "a", "b", 5, 0, 0, 7);
  CHECK_FALSE(evaluate_corrector(model, good).per_class[0].bound_violated);
}

TEST_CASE("truth priors split the mass between the label set and outside") {
  Rng rng(239);
  const auto model = fitted_model(rng);
  auto eval = crafted_samples(model, "a", "b", 6, 2, 1, 1);
  // Two samples whose truth is a label the model never saw.
  auto strays = crafted_samples(model, "a", "zz", 0, 1, 0, 1);
  eval.insert(eval.end(), strays.begin(), strays.end());
  const auto report = evaluate_corrector(model, eval);
  REQUIRE(report.truth_priors.size() == 2);
  CHECK(report.truth_priors[0] == doctest::Approx(7.0 / 12.0));
  CHECK(report.truth_priors[1] == doctest::Approx(3.0 / 12.0));
  CHECK(report.out_of_set_truth_mass == doctest::Approx(2.0 / 12.0));
  const double mass = report.truth_priors[0] + report.truth_priors[1] +
                      report.out_of_set_truth_mass;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  // The out-of-set mass weights no class in the collapsed accept bound.
  const double expected_accept =
      report.truth_priors[0] * model.per_class()[0].bounds.upsilon +
      report.truth_priors[1] * model.per_class()[1].bounds.upsilon;
  CHECK(report.collapsed_accept_lb == doctest::Approx(expected_accept).epsilon(1e-12));
}

TEST_CASE("collapsed bounds match collapse_bounds when all truths are in set") {
  Rng rng(241);
  const auto model = fitted_model(rng);
  const auto eval = two_class_samples(rng, 40, 25);
  const auto report = evaluate_corrector(model, eval);
  CHECK(report.out_of_set_truth_mass == 0.0);
  std::vector<ClassBounds> cbs;
  for (const auto& c : model.per_class()) cbs.push_back(c.bounds);
  const auto collapsed = collapse_bounds(report.truth_priors, cbs);
  CHECK(report.collapsed_accept_lb == doctest::Approx(collapsed.accept_lb).epsilon(1e-12));
  CHECK(report.collapsed_reject_lb == doctest::Approx(collapsed.reject_lb).epsilon(1e-12));
  CHECK(report.collapsed_reject_lb_raw ==
        doctest::Approx(collapsed.reject_lb_raw).epsilon(1e-12));
  CHECK(report.collapsed_reject_lb <= 1.0);
  CHECK(report.collapsed_reject_lb_raw >= report.collapsed_reject_lb - 1e-15);
}

TEST_CASE("evaluate validation") {
  Rng rng(251);
  const auto model = fitted_model(rng);
  CHECK_THROWS_WITH_AS(evaluate_corrector(model, {}), "empty sample", input_error);
  std::vector<LabeledSample> eval{
      make_sample("q1", feature_for_score(model, "a", 0.0), "a", std::nullopt)};
  CHECK_THROWS_WITH_AS(evaluate_corrector(model, eval),
                       "unlabeled sample in correction set ('q1')", input_error);
  eval[0].truth = "a";
  eval[0].predicted = "zz";
  CHECK_THROWS_WITH_AS(evaluate_corrector(model, eval),
                       "sample 'q1': predicted label 'zz' is not in the label set",
                       input_error);
}

TEST_CASE("baseline comparison on a gate that removes errors only") {
  Rng rng(257);
  const auto model = fitted_model(rng);
  const auto eval = crafted_samples(model, "a", "b", 10, 0, 0, 4);
  const auto cmp = compare_with_baseline(model, eval);
  REQUIRE(cmp.per_class.size() == 2);
  const auto& row = cmp.per_class[0];
  CHECK(row.class_label == "a");
  CHECK(*row.corrector_recall == 1.0);
  CHECK(*row.baseline_recall == 10.0 / 14.0);
  CHECK(*row.recall_delta == doctest::Approx(4.0 / 14.0).epsilon(1e-12));
  CHECK_FALSE(cmp.per_class[1].baseline_recall.has_value());
  CHECK_FALSE(cmp.per_class[1].recall_delta.has_value());
  // The corrector can only look better than the baseline when the rejected
  // pool holds more errors than correct decisions, which is the case here.
  CHECK(*row.recall_delta >= 0.0);
}

TEST_CASE("report table marks undefined cells and violations") {
  Rng rng(263);
  const auto model = fitted_model(rng);
  const auto eval = crafted_samples(model, "a", "b", 3, 4, 0, 0);
  const auto report = evaluate_corrector(model, eval);
  std::ostringstream table;
  write_report_table(table, report);
  const auto text = table.str();
  CHECK(text.find("n/a") != std::string::npos);       // class b is empty
  CHECK(text.find('*') != std::string::npos);         // class a violates its bound
  CHECK(text.find("accepted error proportion") != std::string::npos);
  CHECK(text.find("conditional recall") != std::string::npos);
  std::ostringstream summary;
  write_model_summary(summary, model);
  CHECK(summary.str().find("gamma") != std::string::npos);
}

TEST_CASE("report JSON is deterministic and keeps nulls") {
  Rng rng(269);
  const auto model = fitted_model(rng);
  const auto eval = crafted_samples(model, "a", "b", 5, 1, 2, 3);
  const auto report = evaluate_corrector(model, eval);
  const auto text = report_json(report);
  CHECK(text == report_json(report));
  const auto doc = nlohmann::json::parse(text);
  CHECK(doc["sample_count"] == 11);
  CHECK(doc["classes"].size() == 2);
  CHECK(doc["classes"][0]["accepted_correct"] == 5);
  CHECK(doc["classes"][1]["conditional_recall"].is_null());
  CHECK(doc["classes"][0]["conditional_recall"].get<double>() ==
        doctest::Approx(5.0 / 6.0));
  CHECK(doc["overall"]["out_of_set_truth_mass"] == 0.0);
  const auto cmp = compare_with_baseline(model, eval);
  const auto cmp_doc = nlohmann::json::parse(comparison_json(cmp));
  CHECK(cmp_doc["per_class"][1]["recall_delta"].is_null());
  CHECK(cmp_doc["corrected"]["sample_count"] == 11);
}
