#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "emprobe/attrib.hpp"
#include "emprobe/crossval.hpp"
#include "emprobe/error.hpp"
#include "emprobe/json_writer.hpp"
#include "emprobe/linmod.hpp"
#include "emprobe/pipeline.hpp"
#include "emprobe/probe.hpp"
#include "emprobe/synth.hpp"

namespace py = pybind11;
using namespace emprobe;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linear probing of speech embeddings against acoustic features";
  m.attr("__version__") = version();

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InputError& e) {
      PyErr_SetString(input_error.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical_error.ptr(), e.what());
    }
  });

  py::class_<UtteranceRecord>(m, "UtteranceRecord")
      .def_readonly("utterance_id", &UtteranceRecord::utterance_id)
      .def_readonly("speaker_id", &UtteranceRecord::speaker_id)
      .def_readonly("dataset_id", &UtteranceRecord::dataset_id)
      .def_readonly("emotion_label", &UtteranceRecord::emotion_label);

  py::class_<FeatureTable>(m, "FeatureTable")
      .def_readonly("representation_id", &FeatureTable::representation_id)
      .def_readonly("feature_names", &FeatureTable::feature_names)
      .def_readonly("rows", &FeatureTable::rows)
      .def_readonly("values", &FeatureTable::values)
      .def("__len__", &FeatureTable::size);

  m.def("load_feature_table", &load_feature_table, py::arg("path"), py::arg("representation_id"));
  m.def("write_feature_table", &write_feature_table, py::arg("table"), py::arg("path"));
  m.def("speaker_normalize", &speaker_normalize, py::arg("table"));

  py::class_<LogisticModel>(m, "LogisticModel")
      .def_readonly("weights", &LogisticModel::weights)
      .def_readonly("intercept", &LogisticModel::intercept)
      .def_readonly("C", &LogisticModel::C)
      .def_readonly("iterations", &LogisticModel::iterations)
      .def_readonly("gradient_norm", &LogisticModel::gradient_norm);

  m.def(
      "fit_logistic",
      [](const Matrix& X, const std::vector<int>& y, double C) { return fit_logistic(X, y, C); },
      py::arg("X"), py::arg("y"), py::arg("C"));
  m.def(
      "predict_proba", [](const LogisticModel& model, const Matrix& X) { return predict_proba(model, X); },
      py::arg("model"), py::arg("X"));

  py::class_<RidgeModel>(m, "RidgeModel")
      .def_readonly("weights", &RidgeModel::weights)
      .def_readonly("intercept", &RidgeModel::intercept)
      .def_readonly("alpha", &RidgeModel::alpha);

  m.def(
      "fit_ridge", [](const Matrix& X, const Vector& y, double alpha) { return fit_ridge(X, y, alpha); },
      py::arg("X"), py::arg("y"), py::arg("alpha"));
  m.def(
      "predict_ridge", [](const RidgeModel& model, const Matrix& X) { return predict_ridge(model, X); },
      py::arg("model"), py::arg("X"));

  m.def(
      "grouped_kfold",
      [](const std::vector<std::string>& groups, int k, std::uint64_t seed) {
        return grouped_kfold(groups, k, seed).assignment;
      },
      py::arg("groups"), py::arg("k"), py::arg("seed"), "Speaker -> fold index.");

  m.def(
      "linear_shap",
      [](const LogisticModel& model, const Matrix& X, const Vector& background_mean) {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back(std::to_string(j));
        return linear_shap(model, X, background_mean, names).phi;
      },
      py::arg("model"), py::arg("X"), py::arg("background_mean"), "Per-sample SHAP values (n x d).");

  m.def("information_increase", &information_increase, py::arg("rmse_all"), py::arg("rmse_top"));

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("n_speakers", &SynthSpec::n_speakers)
      .def_readwrite("utterances_per_speaker", &SynthSpec::utterances_per_speaker)
      .def_readwrite("embed_dim", &SynthSpec::embed_dim)
      .def_readwrite("planted_dims", &SynthSpec::planted_dims)
      .def_readwrite("noise_sigma", &SynthSpec::noise_sigma)
      .def_readwrite("label_latent", &SynthSpec::label_latent)
      .def_readwrite("seed", &SynthSpec::seed);

  m.def(
      "synth",
      [](const SynthSpec& spec, const std::filesystem::path& output_dir) {
        const auto data = generate(spec);
        std::filesystem::create_directories(output_dir);
        write_feature_table(data.embeddings, output_dir / "embeddings.csv");
        write_feature_table(data.acoustic, output_dir / "acoustic.csv");
        data.categories.save(output_dir / "categories.csv");
      },
      py::arg("spec"), py::arg("output_dir"), "Writes embeddings.csv, acoustic.csv and categories.csv.");

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("embeddings_path", &RunConfig::embeddings_path)
      .def_readwrite("acoustic_path", &RunConfig::acoustic_path)
      .def_readwrite("category_map_path", &RunConfig::category_map_path)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("emotions", &RunConfig::emotions)
      .def_readwrite("neutral_label", &RunConfig::neutral_label)
      .def_readwrite("c_grid", &RunConfig::c_grid)
      .def_readwrite("alpha_grid", &RunConfig::alpha_grid)
      .def_readwrite("k_outer", &RunConfig::k_outer)
      .def_readwrite("k_inner", &RunConfig::k_inner)
      .def_readwrite("subset_step", &RunConfig::subset_step)
      .def_readwrite("subset_cap", &RunConfig::subset_cap)
      .def_readwrite("seed", &RunConfig::seed);

  m.def(
      "validate", [](const RunConfig& config) { return validate_inputs(config); }, py::arg("config"),
      "List of problems found in the configured inputs (empty when valid).");

  m.def(
      "run",
      [](const RunConfig& config) {
        config.validate();
        PipelineInputs inputs;
        const auto issues = validate_inputs(config, &inputs);
        if (!issues.empty()) throw InputError(issues.front());
        RunReport report;
        {
          py::gil_scoped_release release;
          report = run_pipeline(config, inputs);
        }
        if (!config.output_dir.empty()) write_reports(report, config.output_dir);
        return dump_json(to_json(report));
      },
      py::arg("config"), "Runs the analysis; returns report.json content and writes outputs when output_dir is set.");
}
