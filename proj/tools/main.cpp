#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "abstain/bounds.hpp"
#include "abstain/corrector.hpp"
#include "abstain/dataset.hpp"
#include "abstain/errors.hpp"
#include "abstain/format.hpp"
#include "abstain/metrics.hpp"
#include "abstain/sim.hpp"

namespace {

using namespace abstain;
using nlohmann::json;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    std::string item = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw input_error(std::string("cannot parse ") + what + " '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_label_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split_list(text)) {
    if (item.empty()) {
      throw input_error("empty label in label list");
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::string read_text_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) {
    throw input_error(std::string("cannot open ") + what + " '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw input_error("cannot write file '" + path + "'");
  }
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::vector<std::size_t> log_spaced(std::size_t lo, std::size_t hi, std::size_t points) {
  std::vector<std::size_t> out;
  const double llo = std::log(static_cast<double>(lo));
  const double lhi = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0
                                 : static_cast<double>(i) / static_cast<double>(points - 1);
    const auto m = static_cast<std::size_t>(std::llround(std::exp(llo + t * (lhi - llo))));
    if (out.empty() || m > out.back()) out.push_back(m);
  }
  return out;
}

struct FitOptions {
  std::string data, out, config_path;
  std::string deltas_text, gamma_targets_text, labels_text;
  double pca_variance = 0.9987;
  std::size_t pca_k = 0;
  bool pca_variance_given = false, pca_k_given = false;
  bool split_given = false, seed_given = false, ridge_given = false;
  bool fraction_given = false;
  bool split = false;
  double split_fraction = 0.5;
  std::uint64_t seed = 1;
  double ridge = kDefaultRidge;
};

// Flags override config-file values override defaults.
void run_fit(const FitOptions& o) {
  json cfg = json::object();
  if (!o.config_path.empty()) {
    try {
      cfg = json::parse(read_text_file(o.config_path, "config file"));
    } catch (const json::parse_error& e) {
      throw input_error(std::string("malformed config file: ") + e.what());
    }
  }

  const Dataset ds = read_dataset_file(o.data);

  std::vector<std::string> labels;
  if (!o.labels_text.empty()) {
    labels = parse_label_list(o.labels_text);
  } else if (cfg.contains("labels")) {
    labels = cfg.at("labels").get<std::vector<std::string>>();
  } else {
    labels = ds.label_set;
  }
  if (labels.empty()) {
    throw input_error(
        "no label set declared (use --labels, a config file, or a '# labels:' "
        "directive in the data file)");
  }

  FitConfig fit;
  fit.split = o.split_given ? o.split : cfg.value("split", false);
  fit.split_fraction =
      o.fraction_given ? o.split_fraction : cfg.value("split_fraction", 0.5);
  fit.seed = o.seed_given ? o.seed : cfg.value("seed", std::uint64_t{1});
  fit.ridge = o.ridge_given ? o.ridge : cfg.value("ridge", kDefaultRidge);

  if (o.pca_k_given) {
    fit.pca = PcaTarget::fixed(o.pca_k);
  } else if (o.pca_variance_given) {
    fit.pca = PcaTarget::variance(o.pca_variance);
  } else if (cfg.contains("pca_k")) {
    fit.pca = PcaTarget::fixed(cfg.at("pca_k").get<std::size_t>());
  } else if (cfg.contains("pca_variance")) {
    fit.pca = PcaTarget::variance(cfg.at("pca_variance").get<double>());
  }

  std::string deltas_text = o.deltas_text;
  std::string gamma_text = o.gamma_targets_text;
  if (deltas_text.empty() && gamma_text.empty()) {
    if (cfg.contains("deltas") && cfg.contains("gamma_targets")) {
      throw input_error("config file sets both deltas and gamma_targets");
    }
    if (cfg.contains("deltas")) {
      fit.deltas = cfg.at("deltas").get<std::vector<double>>();
    } else if (cfg.contains("gamma_targets")) {
      json arr = cfg.at("gamma_targets");
      std::ostringstream os;
      for (std::size_t i = 0; i < arr.size(); ++i) {
        os << (i ? "," : "") << format_double(arr.at(i).get<double>());
      }
      gamma_text = os.str();
    }
  } else if (!deltas_text.empty()) {
    fit.deltas = parse_double_list(deltas_text, "delta");
  }

  if (!gamma_text.empty()) {
    const auto targets = parse_double_list(gamma_text, "gamma target");
    if (targets.size() != labels.size()) {
      throw input_error("need one gamma target per class (" +
                        std::to_string(labels.size()) + " classes, " +
                        std::to_string(targets.size()) + " targets)");
    }
    // The threshold-part sizes are pure count arithmetic, so the deltas are
    // known before anything is fitted.
    const auto parts = partition(ds.samples, labels);
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const std::size_t n = parts[j].negatives.size();
      if (n == 0) {
        throw input_error("class '" + parts[j].label +
                          "': no errors in the correction set");
      }
      std::size_t m_minus = n;
      if (fit.split) {
        if (n < 4) {
          throw input_error("class '" + parts[j].label +
                            "': S- needs at least 4 samples to split");
        }
        m_minus = n - split_fit_count(n, fit.split_fraction);
      }
      fit.deltas.push_back(invert_gamma_target(targets[j], m_minus));
    }
  }
  if (fit.deltas.empty()) {
    throw input_error("need --deltas or --gamma-targets (flag or config file)");
  }

  const CorrectorModel model = fit_corrector(ds.samples, labels, fit);
  save_model(model, o.out);
  write_model_summary(std::cout, model);
  const auto& prov = model.provenance();
  std::cout << "pca: " << prov.pca_target << "  ridge: " << format_double(prov.ridge)
            << "  split: "
            << (prov.split ? "fraction " + format_double(prov.split_fraction) : "off")
            << "  seed: " << prov.seed << "  samples: " << prov.sample_count << '\n';
  std::cout << "model written to " << o.out << '\n';
}

void run_apply(const std::string& model_path, const std::string& data_path,
               const std::string& out_path) {
  const CorrectorModel model = load_model_file(model_path);
  const Dataset ds = read_dataset_file(data_path);

  std::ofstream out(out_path);
  if (!out) {
    throw input_error("cannot write file '" + out_path + "'");
  }
  out << "id,predicted,decision,score,threshold,gamma\n";
  for (const auto& s : ds.samples) {
    Decision d;
    try {
      d = model.decide(s.predicted, s.features);
    } catch (const input_error& e) {
      throw input_error("row '" + s.id + "': " + e.what());
    }
    out << s.id << ',' << s.predicted << ','
        << (d.rejected ? std::string("REJECT") : d.label) << ','
        << format_double(d.score) << ',' << format_double(d.threshold) << ','
        << format_double(d.class_bounds.gamma) << '\n';
  }
  if (!out) {
    throw input_error("failed while writing '" + out_path + "'");
  }
  std::cout << "wrote " << ds.samples.size() << " decisions to " << out_path << '\n';
}

void run_evaluate(const std::string& model_path, const std::string& data_path,
                  const std::string& out_path, bool with_baseline) {
  const CorrectorModel model = load_model_file(model_path);
  const Dataset ds = read_dataset_file(data_path);
  if (with_baseline) {
    const BaselineComparison cmp = compare_with_baseline(model, ds.samples);
    write_report_table(std::cout, cmp.corrected);
    for (const auto& row : cmp.per_class) {
      std::cout << "class " << row.class_label << ": recall delta vs accept-all ";
      if (row.recall_delta) {
        std::cout << (*row.recall_delta >= 0 ? "+" : "") << *row.recall_delta;
      } else {
        std::cout << "n/a";
      }
      std::cout << '\n';
    }
    if (!out_path.empty()) write_text_file(out_path, comparison_json(cmp));
  } else {
    const EvaluationReport report = evaluate_corrector(model, ds.samples);
    write_report_table(std::cout, report);
    if (!out_path.empty()) write_text_file(out_path, report_json(report));
  }
}

void run_bounds(double delta, std::size_t m_minus, std::optional<double> f_plus,
                std::size_t m_plus, bool as_json) {
  const double gamma = rho(delta, m_minus);
  json doc{{"delta", delta}, {"m_minus", m_minus}, {"gamma", gamma},
           {"one_minus_gamma", 1.0 - gamma}};
  std::ostringstream text;
  text << "gamma " << format_double(gamma) << '\n'
       << "1-gamma " << format_double(1.0 - gamma) << '\n';
  if (f_plus) {
    if (m_plus == 0) {
      throw input_error("--f-plus needs --m-plus");
    }
    const double p = psi(*f_plus, m_plus);
    const double raw = 1.0 - p;
    const double upsilon = std::max(0.0, raw);
    doc["f_plus"] = *f_plus;
    doc["m_plus"] = m_plus;
    doc["psi"] = p;
    doc["upsilon"] = upsilon;
    doc["upsilon_raw"] = raw;
    doc["upsilon_vacuous"] = raw <= 0.0;
    text << "psi " << format_double(p) << '\n'
         << "upsilon " << format_double(upsilon)
         << (raw <= 0.0 ? " (vacuous)" : "") << '\n'
         << "upsilon_raw " << format_double(raw) << '\n';
  }
  if (as_json) {
    std::cout << doc.dump(2) << '\n';
  } else {
    std::cout << text.str();
  }
}

void run_curve(const std::string& deltas_text, std::size_t m_min, std::size_t m_max,
               std::size_t points, const std::string& out_path) {
  const auto deltas = parse_double_list(deltas_text, "delta");
  if (deltas.empty()) {
    throw input_error("need at least one delta");
  }
  if (m_min < 1 || m_max < m_min) {
    throw input_error("need 1 <= m-min <= m-max");
  }
  if (points < 1) {
    throw input_error("points must be positive");
  }
  const auto ms = log_spaced(m_min, m_max, points);

  std::ostringstream csv;
  csv << "delta,m,gamma\n";
  for (const double delta : deltas) {
    for (const auto& pt : bound_curve(delta, ms)) {
      csv << format_double(delta) << ',' << pt.m << ',' << format_double(pt.gamma)
          << '\n';
    }
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_text_file(out_path, csv.str());
    std::cout << "wrote " << deltas.size() * ms.size() << " curve points to "
              << out_path << '\n';
  }
}

void run_simulate(const std::string& spec_path, const std::string& out_path,
                  std::optional<std::size_t> trials, std::optional<std::uint64_t> seed) {
  SyntheticSpec spec = spec_from_json(read_text_file(spec_path, "simulation spec"));
  if (trials) spec.trials = *trials;
  if (seed) spec.seed = *seed;
  const ValidationReport report = validate_bounds(spec);
  write_validation_table(std::cout, report);
  if (!out_path.empty()) write_text_file(out_path, validation_json(report));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weakly supervised accept/reject gates for a fixed classifier, "
               "with distribution-free guarantees"};
  app.require_subcommand(1);

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "fit per-class correctors and save a model");
  fit->add_option("--data", fo.data, "correction-set CSV (labeled)")->required();
  fit->add_option("--out", fo.out, "model file to write")->required();
  fit->add_option("--deltas", fo.deltas_text, "per-class quantile levels, comma separated");
  fit->add_option("--gamma-targets", fo.gamma_targets_text,
                  "per-class reject-bound targets; smallest deltas reaching them");
  fit->add_option("--labels", fo.labels_text, "label set, comma separated");
  fit->add_option("--config", fo.config_path, "JSON config (flags take precedence)");
  auto* pv = fit->add_option("--pca-variance", fo.pca_variance,
                             "smallest k explaining this variance fraction");
  auto* pk = fit->add_option("--pca-k", fo.pca_k, "fixed PCA component count");
  auto* sp = fit->add_flag("--split", fo.split,
                           "fit projectors and thresholds on disjoint halves");
  auto* sf = fit->add_option("--split-fraction", fo.split_fraction,
                             "fraction routed to projector fitting");
  auto* sd = fit->add_option("--seed", fo.seed, "split shuffle seed");
  auto* rg = fit->add_option("--ridge", fo.ridge, "Fisher ridge scale");
  pv->excludes(pk);
  fit->get_option("--deltas")->excludes(fit->get_option("--gamma-targets"));
  fit->callback([&] {
    fo.pca_variance_given = pv->count() > 0;
    fo.pca_k_given = pk->count() > 0;
    fo.split_given = sp->count() > 0;
    fo.fraction_given = sf->count() > 0;
    fo.seed_given = sd->count() > 0;
    fo.ridge_given = rg->count() > 0;
    run_fit(fo);
  });

  std::string apply_model, apply_data, apply_out;
  auto* ap = app.add_subcommand("apply", "gate a dataset through a fitted model");
  ap->add_option("--model", apply_model, "model file")->required();
  ap->add_option("--data", apply_data, "CSV to gate (truth ignored)")->required();
  ap->add_option("--out", apply_out, "decision CSV to write")->required();
  ap->callback([&] { run_apply(apply_model, apply_data, apply_out); });

  std::string eval_model, eval_data, eval_out;
  bool eval_baseline = false;
  auto* ev = app.add_subcommand("evaluate", "score a labeled dataset against the bounds");
  ev->add_option("--model", eval_model, "model file")->required();
  ev->add_option("--data", eval_data, "labeled CSV")->required();
  ev->add_option("--out", eval_out, "JSON report to write");
  ev->add_flag("--baseline", eval_baseline, "compare against accept-everything");
  ev->callback([&] { run_evaluate(eval_model, eval_data, eval_out, eval_baseline); });

  double b_delta = 0.0;
  std::size_t b_m_minus = 0, b_m_plus = 0;
  double b_f_plus = -1.0;
  bool b_json = false;
  auto* bd = app.add_subcommand("bounds", "print gamma (and upsilon) for given inputs");
  bd->add_option("--delta", b_delta, "quantile level")->required();
  bd->add_option("--m-minus", b_m_minus, "error-sample count")->required();
  auto* fp = bd->add_option("--f-plus", b_f_plus, "F+(theta), enables upsilon");
  bd->add_option("--m-plus", b_m_plus, "correct-sample count");
  bd->add_flag("--json", b_json, "emit JSON");
  bd->callback([&] {
    run_bounds(b_delta, b_m_minus,
               fp->count() ? std::optional<double>(b_f_plus) : std::nullopt,
               b_m_plus, b_json);
  });

  std::string c_deltas, c_out;
  std::size_t c_m_min = 10, c_m_max = 100000, c_points = 32;
  auto* cv = app.add_subcommand("curve", "emit gamma-vs-m CSV curves");
  cv->add_option("--deltas", c_deltas, "comma-separated quantile levels")->required();
  cv->add_option("--m-min", c_m_min, "smallest m");
  cv->add_option("--m-max", c_m_max, "largest m");
  cv->add_option("--points", c_points, "log-spaced point count");
  cv->add_option("--out", c_out, "CSV to write (stdout when absent)");
  cv->callback([&] { run_curve(c_deltas, c_m_min, c_m_max, c_points, c_out); });

  std::string s_spec, s_out;
  std::size_t s_trials = 0;
  std::uint64_t s_seed = 0;
  auto* sm = app.add_subcommand("simulate", "Monte-Carlo validation of the bounds");
  sm->add_option("--spec", s_spec, "synthetic spec JSON")->required();
  sm->add_option("--out", s_out, "JSON report to write");
  auto* st = sm->add_option("--trials", s_trials, "override spec trial count");
  auto* ss = sm->add_option("--seed", s_seed, "override spec seed");
  sm->callback([&] {
    run_simulate(s_spec, s_out,
                 st->count() ? std::optional<std::size_t>(s_trials) : std::nullopt,
                 ss->count() ? std::optional<std::uint64_t>(s_seed) : std::nullopt);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
