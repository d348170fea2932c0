#include "abstain/corrector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "abstain/ecdf.hpp"
#include "abstain/errors.hpp"
#include "abstain/rng.hpp"

namespace abstain {

namespace {

using nlohmann::json;

std::string iso_utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Eigen::MatrixXd gather_rows(const std::vector<LabeledSample>& samples,
                            const std::vector<std::size_t>& indices,
                            Eigen::Index dim) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = samples[indices[r]].features.transpose();
  }
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Seeded stratified split: `fraction` of the stratum (at least 2, leaving at
// least 2) goes to projector fitting, the rest to thresholds and bounds.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_stratum(
    std::vector<std::size_t> indices, double fraction, std::uint64_t stream_seed,
    const std::string& label, const char* side) {
  const std::size_t n = indices.size();
  if (n < 4) {
    throw input_error("class '" + label + "': " + side +
                      " needs at least 4 samples to split");
  }
  Rng rng(stream_seed);
  rng.shuffle(indices);
  const std::size_t take = split_fit_count(n, fraction);
  std::vector<std::size_t> fit(indices.begin(),
                               indices.begin() + static_cast<std::ptrdiff_t>(take));
  std::vector<std::size_t> thr(indices.begin() + static_cast<std::ptrdiff_t>(take),
                               indices.end());
  std::sort(fit.begin(), fit.end());
  std::sort(thr.begin(), thr.end());
  return {std::move(fit), std::move(thr)};
}

ClassBounds make_class_bounds(double delta, double f_plus_at_theta,
                              std::size_t m_plus, std::size_t m_minus) {
  ClassBounds b;
  b.delta = delta;
  b.m_plus = m_plus;
  b.m_minus = m_minus;
  b.gamma = rho(delta, m_minus);
  b.upsilon_raw = 1.0 - psi(f_plus_at_theta, m_plus);
  b.upsilon_vacuous = b.upsilon_raw <= 0.0;
  b.upsilon = std::max(0.0, b.upsilon_raw);
  return b;
}

}  // namespace

std::vector<ClassPartition> partition(const std::vector<LabeledSample>& samples,
                                      const std::vector<std::string>& label_set) {
  if (label_set.empty()) {
    throw input_error("empty label set");
  }
  std::unordered_set<std::string> seen;
  for (const auto& label : label_set) {
    if (!seen.insert(label).second) {
      throw input_error("duplicate label '" + label + "' in label set");
    }
  }

  std::vector<ClassPartition> parts(label_set.size());
  for (std::size_t i = 0; i < label_set.size(); ++i) {
    parts[i].label = label_set[i];
  }

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& sample = samples[s];
    if (!sample.truth) {
      throw input_error("unlabeled sample in correction set ('" + sample.id + "')");
    }
    const auto it = std::find(label_set.begin(), label_set.end(), sample.predicted);
    if (it == label_set.end()) {
      throw input_error("sample '" + sample.id + "': predicted label '" +
                        sample.predicted + "' is not in the label set");
    }
    auto& part = parts[static_cast<std::size_t>(it - label_set.begin())];
    if (*sample.truth == sample.predicted) {
      part.positives.push_back(s);
    } else {
      part.negatives.push_back(s);
    }
  }
  return parts;
}

CorrectorModel fit_corrector(const std::vector<LabeledSample>& samples,
                             const std::vector<std::string>& label_set,
                             const FitConfig& config) {
  if (config.deltas.size() != label_set.size()) {
    throw input_error("need one delta per class (" +
                      std::to_string(label_set.size()) + " classes, " +
                      std::to_string(config.deltas.size()) + " deltas)");
  }
  for (std::size_t i = 0; i < config.deltas.size(); ++i) {
    const double d = config.deltas[i];
    if (!std::isfinite(d) || d <= 0.0 || d >= 1.0) {
      throw input_error("delta for class '" + label_set[i] + "' outside (0,1)");
    }
  }
  if (!std::isfinite(config.ridge) || config.ridge < 0.0) {
    throw input_error("ridge must be nonnegative");
  }
  if (config.split &&
      (!std::isfinite(config.split_fraction) || config.split_fraction <= 0.0 ||
       config.split_fraction >= 1.0)) {
    throw input_error("split fraction outside (0,1)");
  }
  if (samples.empty()) {
    throw input_error("empty sample");
  }

  const Eigen::Index dim = samples.front().features.size();
  if (dim < 1) {
    throw input_error("sample '" + samples.front().id + "' has no features");
  }
  for (const auto& sample : samples) {
    if (sample.features.size() != dim) {
      throw input_error("sample '" + sample.id + "': inconsistent feature length");
    }
  }

  const auto parts = partition(samples, label_set);

  struct StratumSplit {
    std::vector<std::size_t> pos_fit, pos_thr, neg_fit, neg_thr;
  };
  std::vector<StratumSplit> splits(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& part = parts[i];
    if (part.positives.empty()) {
      throw input_error("class '" + part.label +
                        "': no correct decisions in the correction set");
    }
    if (part.negatives.empty()) {
      throw input_error("class '" + part.label +
                        "': no errors in the correction set");
    }
    auto& sp = splits[i];
    if (config.split) {
      std::tie(sp.pos_fit, sp.pos_thr) = split_stratum(
          part.positives, config.split_fraction,
          derive_stream_seed(config.seed, 2 * i), part.label, "S+");
      std::tie(sp.neg_fit, sp.neg_thr) = split_stratum(
          part.negatives, config.split_fraction,
          derive_stream_seed(config.seed, 2 * i + 1), part.label, "S-");
    } else {
      sp.pos_fit = sp.pos_thr = part.positives;
      sp.neg_fit = sp.neg_thr = part.negatives;
    }
    if (sp.pos_fit.size() < 2 || sp.pos_thr.size() < 2) {
      throw input_error("class '" + part.label +
                        "': fewer than 2 correct decisions available");
    }
    if (sp.neg_fit.size() < 2 || sp.neg_thr.size() < 2) {
      throw input_error("class '" + part.label +
                        "': fewer than 2 errors available");
    }
  }

  std::vector<std::size_t> pooled;
  for (const auto& sp : splits) {
    pooled.insert(pooled.end(), sp.pos_fit.begin(), sp.pos_fit.end());
  }
  const auto pca = fit_pca(gather_rows(samples, pooled, dim), config.pca);

  std::vector<ClassCorrector> classes;
  classes.reserve(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& sp = splits[i];
    FisherProjector projector =
        fit_fisher(pca, gather_rows(samples, sp.pos_fit, dim),
                   gather_rows(samples, sp.neg_fit, dim), config.ridge,
                   parts[i].label);

    const auto neg_cdf = EmpiricalCdf::from_samples(
        to_std(projector.project_rows(gather_rows(samples, sp.neg_thr, dim))));
    const auto pos_cdf = EmpiricalCdf::from_samples(
        to_std(projector.project_rows(gather_rows(samples, sp.pos_thr, dim))));

    ClassCorrector c;
    c.class_label = parts[i].label;
    c.delta = config.deltas[i];
    c.threshold = neg_cdf.pseudo_inverse(c.delta);
    c.m_plus = sp.pos_thr.size();
    c.m_minus = sp.neg_thr.size();
    c.f_plus_at_theta = pos_cdf.evaluate(c.threshold);
    c.bounds = make_class_bounds(c.delta, c.f_plus_at_theta, c.m_plus, c.m_minus);
    c.projector = std::move(projector);
    classes.push_back(std::move(c));
  }

  Provenance prov;
  prov.deltas = config.deltas;
  prov.pca_target = config.pca.describe();
  prov.ridge = config.ridge;
  prov.split = config.split;
  prov.split_fraction = config.split_fraction;
  prov.seed = config.seed;
  prov.sample_count = samples.size();
  prov.fitted_at = iso_utc_now();

  return CorrectorModel(label_set, pca, std::move(classes), std::move(prov));
}

CorrectorModel::CorrectorModel(std::vector<std::string> label_set,
                               std::shared_ptr<const PcaBasis> pca,
                               std::vector<ClassCorrector> per_class,
                               Provenance provenance)
    : labels_(std::move(label_set)),
      pca_(std::move(pca)),
      classes_(std::move(per_class)),
      provenance_(std::move(provenance)) {
  const auto bad = [](const std::string& why) {
    return input_error("model document is inconsistent: " + why);
  };
  if (labels_.empty()) throw bad("empty label set");
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (!seen.insert(label).second) throw bad("duplicate label '" + label + "'");
  }
  if (!pca_) throw bad("missing PCA basis");
  const auto k = static_cast<Eigen::Index>(pca_->k());
  if (k < 1 || pca_->components.cols() != pca_->mean.size() ||
      pca_->explained_variance_ratio.size() != k ||
      !pca_->components.allFinite() || !pca_->mean.allFinite()) {
    throw bad("malformed PCA basis");
  }
  if (classes_.size() != labels_.size()) {
    throw bad("class count does not match label set");
  }
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    auto& c = classes_[i];
    if (c.class_label != labels_[i]) throw bad("class order does not match labels");
    if (c.projector.weights.size() != k || !c.projector.weights.allFinite() ||
        c.projector.weights.norm() == 0.0) {
      throw bad("class '" + c.class_label + "': malformed projector weights");
    }
    if (!std::isfinite(c.threshold)) {
      throw bad("class '" + c.class_label + "': non-finite threshold");
    }
    if (!(c.delta > 0.0 && c.delta < 1.0)) {
      throw bad("class '" + c.class_label + "': delta outside (0,1)");
    }
    if (c.m_plus < 1 || c.m_minus < 1) {
      throw bad("class '" + c.class_label + "': empty score sample");
    }
    if (!(c.f_plus_at_theta >= 0.0 && c.f_plus_at_theta <= 1.0)) {
      throw bad("class '" + c.class_label + "': F+ outside [0,1]");
    }
    c.projector.pca = pca_;  // one shared basis, whatever the inputs carried
    c.projector.class_label = c.class_label;
  }
}

const ClassCorrector& CorrectorModel::corrector_for(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) {
    throw input_error("label '" + label + "' is not in the label set");
  }
  return classes_[static_cast<std::size_t>(it - labels_.begin())];
}

Decision CorrectorModel::decide(const std::string& predicted,
                                const Eigen::Ref<const Eigen::VectorXd>& features) const {
  const auto& c = corrector_for(predicted);
  Decision d;
  d.label = predicted;
  d.score = c.projector.project(features);
  d.threshold = c.threshold;
  d.rejected = d.score <= c.threshold;
  d.class_bounds = c.bounds;
  return d;
}

std::size_t split_fit_count(std::size_t n, double fraction) {
  if (n < 4) {
    throw input_error("a stratum needs at least 4 samples to split");
  }
  const auto take =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(take, 2, n - 2);
}

double invert_gamma_target(double gamma_target, std::size_t m_minus) {
  if (!std::isfinite(gamma_target) || gamma_target < 0.0 || gamma_target >= 1.0) {
    throw input_error("gamma target outside [0,1)");
  }
  if (m_minus < 1) {
    throw input_error("m_minus must be positive");
  }
  constexpr double kHi = 1.0 - 1e-12;
  const auto reaches = [&](double delta) { return rho(delta, m_minus) >= gamma_target; };
  if (!reaches(kHi)) {
    throw input_error("gamma target " + std::to_string(gamma_target) +
                      " is unreachable with " + std::to_string(m_minus) +
                      " error samples");
  }
  // rho is nondecreasing in delta, so the feasible set is an upper interval.
  double lo = 0.0;
  double hi = kHi;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (reaches(mid) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(vector_to_json(m.row(r).transpose()));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  if (rows.empty()) throw input_error("model document is inconsistent: empty matrix");
  const auto nc = rows.at(0).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(nc));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows.at(r).size() != nc) {
      throw input_error("model document is inconsistent: ragged matrix");
    }
    m.row(static_cast<Eigen::Index>(r)) = vector_from_json(rows.at(r)).transpose();
  }
  return m;
}

}  // namespace

void save_model(const CorrectorModel& model, std::ostream& out) {
  json doc;
  doc["format"] = "abstain-corrector";
  doc["schema_version"] = kModelSchemaVersion;
  doc["labels"] = model.label_set();
  doc["feature_dim"] = model.feature_dim();

  const auto& pca = model.pca();
  doc["pca"] = {{"k", pca.k()},
                {"mean", vector_to_json(pca.mean)},
                {"components", matrix_to_json(pca.components)},
                {"explained_variance_ratio", vector_to_json(pca.explained_variance_ratio)}};

  json classes = json::array();
  for (const auto& c : model.per_class()) {
    classes.push_back(
        {{"label", c.class_label},
         {"weights", vector_to_json(c.projector.weights)},
         {"threshold", c.threshold},
         {"delta", c.delta},
         {"m_plus", c.m_plus},
         {"m_minus", c.m_minus},
         {"f_plus_at_theta", c.f_plus_at_theta},
         {"bounds",
          {{"gamma", c.bounds.gamma},
           {"upsilon", c.bounds.upsilon},
           {"upsilon_raw", c.bounds.upsilon_raw},
           {"upsilon_vacuous", c.bounds.upsilon_vacuous}}}});
  }
  doc["classes"] = std::move(classes);

  const auto& prov = model.provenance();
  doc["provenance"] = {{"deltas", prov.deltas},
                       {"pca_target", prov.pca_target},
                       {"ridge", prov.ridge},
                       {"split", prov.split},
                       {"split_fraction", prov.split_fraction},
                       {"seed", prov.seed},
                       {"sample_count", prov.sample_count},
                       {"fitted_at", prov.fitted_at}};

  out << doc.dump(2) << '\n';
  if (!out) {
    throw input_error("failed to write model document");
  }
}

void save_model(const CorrectorModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw input_error("cannot write model file '" + path + "'");
  }
  save_model(model, out);
}

CorrectorModel load_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw input_error(std::string("malformed model document: ") + e.what());
  }

  try {
    if (!doc.is_object() || doc.value("format", "") != "abstain-corrector") {
      throw input_error("malformed model document: not a corrector model");
    }
    if (doc.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw input_error("unsupported model schema version");
    }

    const auto labels = doc.at("labels").get<std::vector<std::string>>();
    const auto feature_dim = doc.at("feature_dim").get<std::size_t>();

    const auto& jp = doc.at("pca");
    auto pca = std::make_shared<PcaBasis>();
    pca->mean = vector_from_json(jp.at("mean"));
    pca->components = matrix_from_json(jp.at("components"));
    pca->explained_variance_ratio = vector_from_json(jp.at("explained_variance_ratio"));
    if (pca->k() != jp.at("k").get<std::size_t>() ||
        pca->dim() != feature_dim) {
      throw input_error("model document is inconsistent: PCA shape mismatch");
    }

    std::vector<ClassCorrector> classes;
    for (const auto& jc : doc.at("classes")) {
      ClassCorrector c;
      c.class_label = jc.at("label").get<std::string>();
      c.projector.class_label = c.class_label;
      c.projector.weights = vector_from_json(jc.at("weights"));
      c.projector.pca = pca;
      c.threshold = jc.at("threshold").get<double>();
      c.delta = jc.at("delta").get<double>();
      c.m_plus = jc.at("m_plus").get<std::size_t>();
      c.m_minus = jc.at("m_minus").get<std::size_t>();
      c.f_plus_at_theta = jc.at("f_plus_at_theta").get<double>();
      const auto& jb = jc.at("bounds");
      c.bounds = make_class_bounds(c.delta, c.f_plus_at_theta, c.m_plus, c.m_minus);
      // Stored bounds must agree with what the stored inputs reproduce.
      if (std::abs(c.bounds.gamma - jb.at("gamma").get<double>()) > 1e-9 ||
          std::abs(c.bounds.upsilon - jb.at("upsilon").get<double>()) > 1e-9) {
        throw input_error("model document is inconsistent: stored bounds for class '" +
                          c.class_label + "' do not match their inputs");
      }
      classes.push_back(std::move(c));
    }

    Provenance prov;
    const auto& jprov = doc.at("provenance");
    prov.deltas = jprov.at("deltas").get<std::vector<double>>();
    prov.pca_target = jprov.at("pca_target").get<std::string>();
    prov.ridge = jprov.at("ridge").get<double>();
    prov.split = jprov.at("split").get<bool>();
    prov.split_fraction = jprov.at("split_fraction").get<double>();
    prov.seed = jprov.at("seed").get<std::uint64_t>();
    prov.sample_count = jprov.at("sample_count").get<std::size_t>();
    prov.fitted_at = jprov.at("fitted_at").get<std::string>();

    return CorrectorModel(labels, std::move(pca), std::move(classes), std::move(prov));
  } catch (const json::exception& e) {
    throw input_error(std::string("malformed model document: ") + e.what());
  }
}

CorrectorModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw input_error("cannot open model file '" + path + "'");
  }
  return load_model(in);
}

}  // namespace abstain
