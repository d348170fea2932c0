#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abstain/bounds.hpp"
#include "abstain/corrector.hpp"
#include "abstain/dataset.hpp"
#include "abstain/ecdf.hpp"
#include "abstain/errors.hpp"
#include "abstain/metrics.hpp"
#include "abstain/sim.hpp"

namespace py = pybind11;
using namespace abstain;

namespace {

// Samples cross the boundary as dicts: id, predicted, features, optional truth.
LabeledSample sample_from_dict(const py::dict& d) {
  LabeledSample s;
  s.id = d["id"].cast<std::string>();
  s.predicted = d["predicted"].cast<std::string>();
  const auto feats = d["features"].cast<std::vector<double>>();
  s.features = Eigen::Map<const Eigen::VectorXd>(feats.data(),
                                                 static_cast<Eigen::Index>(feats.size()));
  if (d.contains("truth") && !d["truth"].is_none()) {
    s.truth = d["truth"].cast<std::string>();
  }
  return s;
}

py::dict sample_to_dict(const LabeledSample& s) {
  py::dict d;
  d["id"] = s.id;
  d["predicted"] = s.predicted;
  d["truth"] = s.truth ? py::object(py::str(*s.truth)) : py::object(py::none());
  d["features"] = std::vector<double>(s.features.data(),
                                      s.features.data() + s.features.size());
  return d;
}

std::vector<LabeledSample> samples_from_list(const py::iterable& it) {
  std::vector<LabeledSample> out;
  for (const auto& item : it) {
    out.push_back(sample_from_dict(item.cast<py::dict>()));
  }
  return out;
}

FitConfig config_from_kwargs(const std::vector<double>& deltas,
                             std::optional<std::size_t> pca_k,
                             std::optional<double> pca_variance, double ridge,
                             bool split, double split_fraction, std::uint64_t seed) {
  FitConfig config;
  config.deltas = deltas;
  if (pca_k && pca_variance) {
    throw input_error("pass either pca_k or pca_variance, not both");
  }
  if (pca_k) config.pca = PcaTarget::fixed(*pca_k);
  if (pca_variance) config.pca = PcaTarget::variance(*pca_variance);
  config.ridge = ridge;
  config.split = split;
  config.split_fraction = split_fraction;
  config.seed = seed;
  return config;
}

}  // namespace

PYBIND11_MODULE(_abstain, m) {
  m.doc() = "weakly supervised accept/reject gates with distribution-free bounds";

  py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
  py::register_exception<numeric_error>(m, "NumericError", PyExc_ArithmeticError);

  m.def("rho", &rho, py::arg("a"), py::arg("d"),
        "lower bound on P(score <= theta) from an empirical CDF level a over d samples");
  m.def("psi", &psi, py::arg("a"), py::arg("d"),
        "upper bound counterpart of rho; may exceed 1");
  m.def("dkw_failure", &dkw_failure, py::arg("epsilon"), py::arg("n"),
        "two-sided DKW band failure probability");
  m.def("invert_gamma_target", &invert_gamma_target, py::arg("gamma_target"),
        py::arg("m_minus"),
        "smallest delta whose rejection bound reaches gamma_target");
  m.def(
      "bound_curve",
      [](double delta, const std::vector<std::size_t>& ms) {
        py::list out;
        for (const auto& pt : bound_curve(delta, ms)) {
          out.append(py::make_tuple(pt.m, pt.gamma));
        }
        return out;
      },
      py::arg("delta"), py::arg("m_values"), "list of (m, gamma) pairs");

  py::class_<EmpiricalCdf>(m, "EmpiricalCdf")
      .def(py::init([](const std::vector<double>& samples) {
             return EmpiricalCdf::from_samples(samples);
           }),
           py::arg("samples"))
      .def("evaluate", &EmpiricalCdf::evaluate, py::arg("s"))
      .def("pseudo_inverse", &EmpiricalCdf::pseudo_inverse, py::arg("y"))
      .def("__call__", &EmpiricalCdf::evaluate, py::arg("s"))
      .def("__len__", &EmpiricalCdf::size)
      .def_property_readonly("values", &EmpiricalCdf::values);

  py::class_<Decision>(m, "Decision")
      .def_readonly("rejected", &Decision::rejected)
      .def_readonly("label", &Decision::label)
      .def_readonly("score", &Decision::score)
      .def_readonly("threshold", &Decision::threshold)
      .def_property_readonly("gamma",
                             [](const Decision& d) { return d.class_bounds.gamma; })
      .def_property_readonly("upsilon",
                             [](const Decision& d) { return d.class_bounds.upsilon; })
      .def("__repr__", [](const Decision& d) {
        std::ostringstream os;
        os << "Decision(" << (d.rejected ? "REJECT" : d.label) << ", score=" << d.score
           << ", threshold=" << d.threshold << ")";
        return os.str();
      });

  py::class_<CorrectorModel>(m, "CorrectorModel")
      .def_property_readonly("labels", &CorrectorModel::label_set)
      .def_property_readonly("feature_dim", &CorrectorModel::feature_dim)
      .def_property_readonly("classes",
                             [](const CorrectorModel& model) {
                               py::list out;
                               for (const auto& c : model.per_class()) {
                                 py::dict d;
                                 d["label"] = c.class_label;
                                 d["delta"] = c.delta;
                                 d["threshold"] = c.threshold;
                                 d["m_plus"] = c.m_plus;
                                 d["m_minus"] = c.m_minus;
                                 d["gamma"] = c.bounds.gamma;
                                 d["upsilon"] = c.bounds.upsilon;
                                 d["upsilon_vacuous"] = c.bounds.upsilon_vacuous;
                                 out.append(d);
                               }
                               return out;
                             })
      .def(
          "decide",
          [](const CorrectorModel& model, const std::string& predicted,
             const std::vector<double>& features) {
            const Eigen::Map<const Eigen::VectorXd> z(
                features.data(), static_cast<Eigen::Index>(features.size()));
            return model.decide(predicted, z);
          },
          py::arg("predicted"), py::arg("features"))
      .def("save",
           [](const CorrectorModel& model, const std::string& path) {
             save_model(model, path);
           },
           py::arg("path"))
      .def("to_json", [](const CorrectorModel& model) {
        std::ostringstream out;
        save_model(model, out);
        return out.str();
      });

  m.def(
      "fit",
      [](const py::iterable& samples, const std::vector<std::string>& labels,
         const std::vector<double>& deltas, std::optional<std::size_t> pca_k,
         std::optional<double> pca_variance, double ridge, bool split,
         double split_fraction, std::uint64_t seed) {
        return fit_corrector(samples_from_list(samples), labels,
                             config_from_kwargs(deltas, pca_k, pca_variance, ridge,
                                                split, split_fraction, seed));
      },
      py::arg("samples"), py::arg("labels"), py::arg("deltas"),
      py::arg("pca_k") = py::none(), py::arg("pca_variance") = py::none(),
      py::arg("ridge") = kDefaultRidge, py::arg("split") = false,
      py::arg("split_fraction") = 0.5, py::arg("seed") = 1);

  m.def("load", &load_model_file, py::arg("path"));
  m.def("load_json", [](const std::string& text) {
    std::istringstream in(text);
    return load_model(in);
  });

  m.def(
      "evaluate_json",
      [](const CorrectorModel& model, const py::iterable& samples) {
        return report_json(evaluate_corrector(model, samples_from_list(samples)));
      },
      py::arg("model"), py::arg("samples"));
  m.def(
      "compare_json",
      [](const CorrectorModel& model, const py::iterable& samples) {
        return comparison_json(compare_with_baseline(model, samples_from_list(samples)));
      },
      py::arg("model"), py::arg("samples"));

  m.def(
      "generate",
      [](const std::string& spec_json) {
        const auto spec = spec_from_json(spec_json);
        const auto [fit_set, test_set] = generate_synthetic(spec);
        py::list fit_out, test_out;
        for (const auto& s : fit_set) fit_out.append(sample_to_dict(s));
        for (const auto& s : test_set) test_out.append(sample_to_dict(s));
        return py::make_tuple(fit_out, test_out);
      },
      py::arg("spec_json"), "draw one (fit, test) pair from a synthetic spec");
  m.def(
      "validate_json",
      [](const std::string& spec_json, std::optional<std::size_t> trials,
         std::optional<std::uint64_t> seed) {
        auto spec = spec_from_json(spec_json);
        if (trials) spec.trials = *trials;
        if (seed) spec.seed = *seed;
        return validation_json(validate_bounds(spec));
      },
      py::arg("spec_json"), py::arg("trials") = py::none(),
      py::arg("seed") = py::none());

  m.def("read_dataset", [](const std::string& path) {
    const auto ds = read_dataset_file(path);
    py::list samples;
    for (const auto& s : ds.samples) samples.append(sample_to_dict(s));
    return py::make_tuple(samples, ds.label_set);
  });
  m.def(
      "write_dataset",
      [](const std::string& path, const py::iterable& samples,
         const std::vector<std::string>& labels) {
        write_dataset_file(path, samples_from_list(samples), labels);
      },
      py::arg("path"), py::arg("samples"), py::arg("labels"));

  m.attr("MODEL_SCHEMA_VERSION") = kModelSchemaVersion;
}
