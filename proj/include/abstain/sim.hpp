#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "abstain/corrector.hpp"

namespace abstain {

// Class-conditional score model: correct and incorrect decisions draw their
// score from separate 1-D Gaussians along a designated axis; the remaining
// feature dimensions carry isotropic noise. Ground-truth conditional
// probabilities are therefore available in closed form.
struct ClassScoreModel {
  std::string label;
  double positive_mean = 1.0;
  double positive_sigma = 1.0;
  double negative_mean = -1.0;
  double negative_sigma = 1.0;
  std::size_t m_plus = 2;   // fit-set counts
  std::size_t m_minus = 2;
  double delta = 0.9;
};

struct SyntheticSpec {
  std::size_t d = 1;         // feature dimension; axis 0 carries the score
  double noise_sigma = 1.0;  // sigma of the d-1 noise dimensions (may be 0)
  std::vector<ClassScoreModel> classes;
  std::size_t test_count = 500;  // fresh samples per class per condition
  std::size_t trials = 200;
  std::uint64_t seed = 1;

  PcaTarget pca = PcaTarget::variance(0.9987);
  double ridge = kDefaultRidge;
  bool split = false;
  double split_fraction = 0.5;

  std::vector<std::string> label_set() const;
  std::vector<double> deltas() const;
};

void validate_spec(const SyntheticSpec& spec);  // throws input_error

// One deterministic draw: (fit set, test set). Every stratum owns a seed
// stream derived from spec.seed, so counts in one stratum do not shift the
// draws of another. Incorrect decisions for class j carry the next class's
// label as truth (a fixed out-of-set marker when q = 1).
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> generate_synthetic(
    const SyntheticSpec& spec);

struct RateSummary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double stddev = 0.0;
};

struct ClassValidation {
  std::string label;
  double gamma = 0.0;         // rho(delta, m_minus); identical across trials
  double mean_upsilon = 0.0;  // clamped 1 - psi, averaged over trials
  std::size_t upsilon_vacuous_trials = 0;
  RateSummary reject_given_incorrect;
  RateSummary accept_given_correct;
  double reject_tolerance = 0.0;
  double accept_tolerance = 0.0;
  bool reject_pass = false;
  bool accept_pass = false;
  bool pass() const { return reject_pass && accept_pass; }
};

struct ValidationReport {
  std::vector<ClassValidation> per_class;
  std::size_t trials_requested = 0;
  std::size_t trials_completed = 0;
  std::size_t test_count = 0;
  std::vector<std::size_t> failed_trials;  // trial indices whose fit threw
  bool pass = false;
};

// Monte-Carlo check of the two guarantees: per trial, draw a fresh fit set,
// fit a corrector, measure conditional accept/reject rates on fresh test
// samples; compare trial averages against the bounds with tolerance
// 3*sqrt(p*(1-p)/(trials*test_count)). The guarantee is a joint probability
// over the fit draw and the new sample, so averaging over trials is the
// claim under test; single trials may dip below the bound.
ValidationReport validate_bounds(const SyntheticSpec& spec);

SyntheticSpec spec_from_json(const std::string& text);
std::string validation_json(const ValidationReport& report);
void write_validation_table(std::ostream& out, const ValidationReport& report);

}  // namespace abstain
