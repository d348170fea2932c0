#include "abstain/projector.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "abstain/errors.hpp"

namespace abstain {

PcaTarget PcaTarget::fixed(std::size_t k) {
  if (k == 0) {
    throw input_error("pca target: fixed k must be positive");
  }
  PcaTarget t;
  t.fixed_k_ = k;
  return t;
}

PcaTarget PcaTarget::variance(double fraction) {
  if (!std::isfinite(fraction) || fraction <= 0.0 || fraction >= 1.0) {
    throw input_error("pca target: variance fraction must be in (0,1)");
  }
  PcaTarget t;
  t.fraction_ = fraction;
  return t;
}

std::string PcaTarget::describe() const {
  std::ostringstream os;
  if (is_fixed()) {
    os << "k=" << fixed_k_;
  } else {
    os << "variance=" << fraction_;
  }
  return os.str();
}

Eigen::VectorXd PcaBasis::reduce(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != mean.size()) {
    throw input_error("feature vector length does not match model dimension");
  }
  return components * (z - mean);
}

Eigen::MatrixXd PcaBasis::reduce_rows(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (X.cols() != mean.size()) {
    throw input_error("feature matrix width does not match model dimension");
  }
  return (X.rowwise() - mean.transpose()) * components.transpose();
}

double FisherProjector::project(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return weights.dot(pca->reduce(z));
}

Eigen::VectorXd FisherProjector::project_rows(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  return pca->reduce_rows(X) * weights;
}

std::shared_ptr<const PcaBasis> fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                        const PcaTarget& target) {
  const auto rows = X.rows();
  const auto dim = X.cols();
  if (rows < 2 || dim < 1) {
    throw input_error("fit_pca: need at least 2 samples and 1 feature");
  }
  if (!X.allFinite()) {
    throw input_error("fit_pca: non-finite feature value");
  }

  const Eigen::VectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd singular = svd.singularValues();
  const double denom = static_cast<double>(rows - 1);
  Eigen::VectorXd variances = singular.array().square() / denom;
  const double total_variance = variances.sum();

  const double scale = centered.cwiseAbs().maxCoeff();
  if (total_variance <= std::numeric_limits<double>::epsilon() * scale * scale) {
    throw input_error("zero variance");
  }

  const auto available = static_cast<std::size_t>(singular.size());
  std::size_t k = 0;
  if (target.is_fixed()) {
    const std::size_t limit =
        std::min(static_cast<std::size_t>(rows - 1), static_cast<std::size_t>(dim));
    if (target.fixed_k() > limit) {
      throw input_error("fit_pca: fixed k exceeds min(rows-1, dim)");
    }
    k = std::min(target.fixed_k(), available);
  } else {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < available; ++i) {
      cumulative += variances(static_cast<Eigen::Index>(i)) / total_variance;
      if (cumulative >= target.variance_fraction()) {
        k = i + 1;
        break;
      }
    }
    if (k == 0) k = available;  // fp shortfall at a fraction near 1
  }

  auto basis = std::make_shared<PcaBasis>();
  basis->mean = mean;
  basis->components =
      svd.matrixV().leftCols(static_cast<Eigen::Index>(k)).transpose();
  basis->explained_variance_ratio =
      variances.head(static_cast<Eigen::Index>(k)) / total_variance;
  return basis;
}

namespace {

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
  const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

}  // namespace

FisherProjector fit_fisher(std::shared_ptr<const PcaBasis> pca,
                           const Eigen::Ref<const Eigen::MatrixXd>& positives,
                           const Eigen::Ref<const Eigen::MatrixXd>& negatives,
                           double ridge, std::string class_label) {
  if (!pca) {
    throw input_error("fit_fisher: missing PCA basis");
  }
  if (positives.rows() < 2 || negatives.rows() < 2) {
    throw input_error("fit_fisher: covariance estimation needs at least 2 samples per side");
  }
  if (!std::isfinite(ridge) || ridge < 0.0) {
    throw input_error("fit_fisher: ridge must be nonnegative");
  }

  const Eigen::MatrixXd pos = pca->reduce_rows(positives);
  const Eigen::MatrixXd neg = pca->reduce_rows(negatives);
  const auto k = static_cast<Eigen::Index>(pca->k());

  Eigen::MatrixXd scatter = sample_covariance(pos) + sample_covariance(neg);
  const Eigen::VectorXd mean_gap = pos.colwise().mean() - neg.colwise().mean();

  const double mean_scale =
      1.0 + pos.colwise().mean().norm() + neg.colwise().mean().norm();
  if (mean_gap.norm() <= 1e-12 * mean_scale) {
    throw numeric_error("degenerate Fisher system");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
  if (eig.info() != Eigen::Success) {
    throw numeric_error("degenerate Fisher system");
  }
  const double lambda_min = eig.eigenvalues().minCoeff();
  const double lambda_max = eig.eigenvalues().maxCoeff();
  const bool ill_conditioned =
      lambda_min <= 0.0 || lambda_max > kFisherConditionLimit * lambda_min;
  if (ill_conditioned) {
    scatter += ridge * (scatter.trace() / static_cast<double>(k)) *
               Eigen::MatrixXd::Identity(k, k);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(scatter);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw numeric_error("degenerate Fisher system");
  }
  Eigen::VectorXd weights = ldlt.solve(mean_gap);
  if (!weights.allFinite() || weights.norm() == 0.0) {
    throw numeric_error("degenerate Fisher system");
  }

  // Positive-definite scatter already puts the positives' mean on the high
  // side; the flip only fires if ridging disturbed that.
  if (weights.dot(mean_gap) < 0.0) {
    weights = -weights;
  }

  FisherProjector h;
  h.class_label = std::move(class_label);
  h.weights = std::move(weights);
  h.pca = std::move(pca);
  return h;
}

}  // namespace abstain
