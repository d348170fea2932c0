#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abstain/bounds.hpp"
#include "abstain/projector.hpp"

namespace abstain {

// One correction-set record: a feature vector with the base model's predicted
// label and, when known, the true label. The truth string need not belong to
// the declared label set; any mismatch with the prediction counts as an error.
struct LabeledSample {
  std::string id;
  Eigen::VectorXd features;
  std::string predicted;
  std::optional<std::string> truth;
};

// Indices into the sample list, per class: positives were predicted as the
// class and correct, negatives predicted as the class and wrong. Disjoint and
// jointly exhaustive over the input.
struct ClassPartition {
  std::string label;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

std::vector<ClassPartition> partition(const std::vector<LabeledSample>& samples,
                                      const std::vector<std::string>& label_set);

struct FitConfig {
  std::vector<double> deltas;  // one per label, each in (0,1)
  PcaTarget pca = PcaTarget::variance(0.9987);
  double ridge = kDefaultRidge;
  // When set, a seeded stratified split routes `split_fraction` of each
  // per-class subset to projector fitting and the rest to threshold/bound
  // fitting, so the projectors are independent of the threshold data.
  bool split = false;
  double split_fraction = 0.5;
  std::uint64_t seed = 1;
};

struct ClassCorrector {
  std::string class_label;
  FisherProjector projector;
  double threshold = 0.0;  // F-minus pseudo-inverse at delta; a stored score
  double delta = 0.0;
  std::size_t m_plus = 0;
  std::size_t m_minus = 0;
  double f_plus_at_theta = 0.0;
  ClassBounds bounds;
};

struct Provenance {
  std::vector<double> deltas;
  std::string pca_target;
  double ridge = kDefaultRidge;
  bool split = false;
  double split_fraction = 0.5;
  std::uint64_t seed = 1;
  std::size_t sample_count = 0;
  std::string fitted_at;  // ISO-8601 UTC
};

struct Decision {
  bool rejected = false;
  std::string label;  // the deciding class; the accepted label when !rejected
  double score = 0.0;
  double threshold = 0.0;
  ClassBounds class_bounds;
};

class CorrectorModel {
 public:
  CorrectorModel(std::vector<std::string> label_set,
                 std::shared_ptr<const PcaBasis> pca,
                 std::vector<ClassCorrector> per_class, Provenance provenance);

  const std::vector<std::string>& label_set() const { return labels_; }
  const PcaBasis& pca() const { return *pca_; }
  std::shared_ptr<const PcaBasis> pca_ptr() const { return pca_; }
  const std::vector<ClassCorrector>& per_class() const { return classes_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t feature_dim() const { return pca_->dim(); }

  const ClassCorrector& corrector_for(const std::string& label) const;

  // Reject iff the class score is <= the class threshold (boundary rejects);
  // the truth label is never consulted.
  Decision decide(const std::string& predicted,
                  const Eigen::Ref<const Eigen::VectorXd>& features) const;

 private:
  std::vector<std::string> labels_;
  std::shared_ptr<const PcaBasis> pca_;
  std::vector<ClassCorrector> classes_;
  Provenance provenance_;
};

// Fits PCA on the pooled positives, one Fisher projector per class, empirical
// CDFs of the per-class scores, thresholds at the delta-quantile of the error
// scores, and the bounds gamma = rho(delta, m_minus),
// upsilon = max{0, 1 - psi(F_plus(theta), m_plus)}.
CorrectorModel fit_corrector(const std::vector<LabeledSample>& samples,
                             const std::vector<std::string>& label_set,
                             const FitConfig& config);

// Smallest delta whose guaranteed rejection bound reaches gamma_target, found
// by bisection (rho is nondecreasing in delta). Throws input_error when the
// target is unreachable for this m_minus.
double invert_gamma_target(double gamma_target, std::size_t m_minus);

// Size of the projector-fitting part when an n-sample stratum is split:
// round(fraction*n) clamped so both parts keep at least 2 samples. Depends
// only on counts, so threshold-part sizes are known before any fit.
std::size_t split_fit_count(std::size_t n, double fraction);

// Versioned JSON model document; numbers round-trip at full double precision.
void save_model(const CorrectorModel& model, std::ostream& out);
void save_model(const CorrectorModel& model, const std::string& path);
CorrectorModel load_model(std::istream& in);
CorrectorModel load_model_file(const std::string& path);

constexpr int kModelSchemaVersion = 1;

}  // namespace abstain
