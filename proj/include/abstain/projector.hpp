#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <string>

namespace abstain {

// Requested PCA truncation: either a fixed component count or the smallest k
// whose cumulative explained-variance ratio reaches a fraction in (0,1).
class PcaTarget {
 public:
  static PcaTarget fixed(std::size_t k);
  static PcaTarget variance(double fraction);

  bool is_fixed() const { return fixed_k_ > 0; }
  std::size_t fixed_k() const { return fixed_k_; }
  double variance_fraction() const { return fraction_; }

  std::string describe() const;

 private:
  PcaTarget() = default;
  std::size_t fixed_k_ = 0;
  double fraction_ = 0.0;
};

// Centered principal-component basis. `components` is k x d with orthonormal
// rows ordered by decreasing eigenvalue.
struct PcaBasis {
  Eigen::MatrixXd components;
  Eigen::VectorXd mean;
  Eigen::VectorXd explained_variance_ratio;  // nonincreasing, sums to <= 1

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(components.cols()); }

  // T * (z - mean) for one feature vector.
  Eigen::VectorXd reduce(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  // Row-wise reduction of a whole feature matrix (rows = samples).
  Eigen::MatrixXd reduce_rows(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

// Per-class 1-D scoring map: Fisher discriminant weights applied in the PCA
// coordinates, oriented so correct decisions score higher.
struct FisherProjector {
  std::string class_label;
  Eigen::VectorXd weights;  // length k, finite, not all zero
  std::shared_ptr<const PcaBasis> pca;

  // weights . (T (z - mean))
  double project(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  Eigen::VectorXd project_rows(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

// PCA of the sample covariance (divisor n-1) of X's rows, centered by the
// column mean. Throws input_error on fewer than 2 rows, a fixed k outside
// [1, min(rows-1, dim)], or all-identical rows ("zero variance").
std::shared_ptr<const PcaBasis> fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        const PcaTarget& target);

// Fisher weights in the reduced space: solves
//   (Cov(T pos) + Cov(T neg)) w = mean(T pos) - mean(T neg).
// If the summed covariance has condition number above 1e8, ridge*trace/k is
// added to the diagonal and the system re-solved. Throws numeric_error
// "degenerate Fisher system" when the mean difference vanishes or the system
// stays singular; input_error when either set has fewer than 2 rows.
FisherProjector fit_fisher(std::shared_ptr<const PcaBasis> pca,
                           const Eigen::Ref<const Eigen::MatrixXd>& positives,
                           const Eigen::Ref<const Eigen::MatrixXd>& negatives,
                           double ridge, std::string class_label);

constexpr double kDefaultRidge = 1e-6;
constexpr double kFisherConditionLimit = 1e8;

}  // namespace abstain
