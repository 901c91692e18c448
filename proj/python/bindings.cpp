#include "ntkcv/cli.hpp"
#include "ntkcv/config.hpp"
#include "ntkcv/error.hpp"
#include "ntkcv/experiments.hpp"
#include "ntkcv/hashing.hpp"
#include "ntkcv/ntk.hpp"
#include "ntkcv/rnd.hpp"
#include "ntkcv/seeding.hpp"
#include "ntkcv/spectrum.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ntkcv;

namespace {

NetworkSpec make_spec(std::vector<int> widths, const std::string& activation,
                      const std::string& parametrization, bool bias) {
  NetworkSpec spec{std::move(widths), parse_activation(activation), parse_parametrization(parametrization), bias};
  spec.validate();
  return spec;
}

Config make_config(const std::string& preset, const std::map<std::string, std::string>& overrides) {
  Config cfg = preset.empty() ? Config() : Config::from_preset(preset);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return cfg;
}

py::dict spectrum_dict(const SpectrumReport& r) {
  py::dict d;
  d["eigenvalues"] = r.eigenvalues;
  d["trace"] = r.trace;
  d["entropy"] = r.entropy;
  d["max_eig_ratio"] = r.max_eig_ratio;
  return d;
}

py::dict selection_dict(const SelectionResult& r) {
  py::dict d;
  d["method"] = std::string(to_string(r.method));
  d["indices"] = r.chosen_indices;
  d["distances"] = r.step_distances;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Empirical NTK spectra, RND data selection and the experiment drivers";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<UndefinedResult>(m, "UndefinedResult", base.ptr());

  m.def("param_count",
        [](std::vector<int> widths, bool bias) { return make_spec(std::move(widths), "relu", "lecun", bias).param_count(); },
        py::arg("widths"), py::arg("bias") = true);

  m.def(
      "compute_ntk",
      [](std::vector<int> widths, const Eigen::MatrixXd& inputs, std::uint64_t seed, const std::string& activation,
         const std::string& parametrization, bool bias, const std::string& method) {
        NtkOptions opts;
        if (method == "jacobian") opts.method = NtkMethod::jacobian_gram;
        else if (method == "factorized") opts.method = NtkMethod::layer_factorized;
        else if (method != "auto") throw ValidationError("unknown ntk method '" + method + "'");
        const NetworkState state = init_network(make_spec(std::move(widths), activation, parametrization, bias), seed);
        py::gil_scoped_release release;
        return Eigen::MatrixXd(compute_ntk(state, inputs, opts).entries);
      },
      py::arg("widths"), py::arg("inputs"), py::arg("seed") = 0, py::arg("activation") = "relu",
      py::arg("parametrization") = "lecun", py::arg("bias") = true, py::arg("method") = "auto");

  m.def(
      "spectrum",
      [](const Eigen::MatrixXd& ntk) { return spectrum_dict(spectrum_report(NtkMatrix{ntk})); }, py::arg("ntk"));
  m.def(
      "symmetric_eigenvalues", [](const Eigen::MatrixXd& a) { return symmetric_eigenvalues(a); }, py::arg("matrix"));
  m.def(
      "von_neumann_entropy", [](const std::vector<double>& ev) { return von_neumann_entropy(ev); },
      py::arg("eigenvalues"));

  m.def(
      "select_rnd",
      [](const Eigen::MatrixXd& pool, std::vector<int> embedding_widths, std::size_t size, std::uint64_t seed,
         int retrain_epochs, double retrain_lr, const std::string& activation, const std::string& parametrization) {
        RndConfig cfg;
        cfg.embedding_spec = make_spec(std::move(embedding_widths), activation, parametrization, true);
        cfg.target_size = size;
        cfg.seed = seed;
        cfg.retrain_epochs = retrain_epochs;
        cfg.retrain_lr = retrain_lr;
        SelectionResult r;
        {
          py::gil_scoped_release release;
          r = select_rnd(pool, cfg);
        }
        return selection_dict(r);
      },
      py::arg("pool"), py::arg("embedding_widths"), py::arg("size"), py::arg("seed") = 0,
      py::arg("retrain_epochs") = 50, py::arg("retrain_lr") = 1e-3, py::arg("activation") = "relu",
      py::arg("parametrization") = "lecun");

  m.def(
      "select_random",
      [](std::size_t pool_size, std::size_t size, std::uint64_t seed) {
        return selection_dict(select_random(pool_size, size, seed));
      },
      py::arg("pool_size"), py::arg("size"), py::arg("seed") = 0);

  m.def(
      "run_correlation",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides) {
        const Config cfg = make_config(preset, overrides);
        py::gil_scoped_release release;
        const PreparedData data = prepare_data(cfg);
        const auto result = run_correlation_experiment(data, CorrelationSettings::from(cfg, data));
        return std::make_pair(records_csv(result.records), result.correlation_json().dump());
      },
      py::arg("preset") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Returns (records_csv, correlation_json).");

  m.def(
      "run_comparison",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides) {
        const Config cfg = make_config(preset, overrides);
        py::gil_scoped_release release;
        const PreparedData data = prepare_data(cfg);
        const auto result = run_rnd_comparison(data, ComparisonSettings::from(cfg, data));
        return std::make_pair(records_csv(result.records), comparison_csv(result.points));
      },
      py::arg("preset") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Returns (records_csv, comparison_csv).");

  m.def("presets", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : Config::presets()) out.emplace_back(p.name, p.description);
    return out;
  });
  m.def(
      "config",
      [](const std::string& preset, const std::map<std::string, std::string>& overrides) {
        return make_config(preset, overrides).values();
      },
      py::arg("preset") = "", py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "ntkcv");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line tool in-process. Returns (exit_code, stdout, stderr).");

  m.def(
      "derive_seed", [](std::uint64_t master, std::uint64_t index) { return derive_seed(master, index); },
      py::arg("master"), py::arg("index"));
  m.def(
      "git_blob_hash", [](const py::bytes& data) { return git_blob_hash(std::string(data)); }, py::arg("data"));
}
