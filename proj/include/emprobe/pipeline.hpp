#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "emprobe/attrib.hpp"
#include "emprobe/dataio.hpp"
#include "emprobe/probe.hpp"

namespace emprobe {

std::string version();

struct RunConfig {
  std::filesystem::path embeddings_path;
  std::filesystem::path acoustic_path;
  std::filesystem::path category_map_path;
  std::filesystem::path output_dir;
  std::vector<std::string> emotions{"anger", "fear", "joy", "sadness", "disgust"};
  std::string neutral_label{kDefaultNeutralLabel};
  std::vector<double> c_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> alpha_grid{0.001, 0.01, 0.1, 1.0, 10.0, 100.0};
  int k_outer = 5;
  int k_inner = 5;
  int subset_step = 10;
  std::optional<int> subset_cap;
  std::uint64_t seed = 0;

  // Throws InputError on empty or non-positive grids, empty emotion list, etc.
  void validate() const;
  nlohmann::json to_json() const;
};

// Per-emotion seed: every CV split inside one emotion derives from it, so
// adding or removing an emotion leaves the others untouched.
std::uint64_t emotion_seed(std::uint64_t seed, std::string_view emotion);

struct EmotionReport {
  std::string emotion;
  std::uint64_t seed = 0;
  double f1_acoustic = 0.0;
  double f1_embedding_all = 0.0;
  double f1_embedding_top = 0.0;
  int k_star = 0;
  std::vector<std::string> top_features;
  std::vector<int> subset_k_grid;
  std::vector<double> subset_f1_curve;
  double embedding_shap_c = 0.0;
  double acoustic_shap_c = 0.0;
  std::vector<double> chosen_c_acoustic;
  std::vector<double> chosen_c_embedding_all;
  std::vector<double> chosen_c_embedding_top;
  std::vector<ProbeResult> probe_results;
  std::vector<std::string> excluded_features;
  std::vector<CategoryAggregate> category_aggregates;
  std::vector<CategoryShare> category_shap_profile;
  std::string fold_plan_digest;
  std::size_t n_rows = 0;
  std::size_t n_positive = 0;
  std::vector<std::string> warnings;
};

struct StageFailure {
  std::string emotion;
  std::string stage;
  std::string message;
  int exit_code = 2;
};

struct RunReport {
  RunConfig config;
  std::vector<EmotionReport> emotions;
  std::vector<StageFailure> failures;

  int exit_code() const;
};

struct PipelineInputs {
  FeatureTable embeddings;
  FeatureTable acoustic;
  CategoryMap categories;
};

// Loads both tables and the category map and cross-checks them: shared
// utterance ids and speakers, label presence, category coverage. Returns
// one message per problem found.
std::vector<std::string> validate_inputs(const RunConfig& config, PipelineInputs* loaded = nullptr);

// Full analysis of one emotion on speaker-normalised tables.
// `stage` tracks the step in progress for failure reports.
EmotionReport analyze_emotion(const PipelineInputs& normalized, const RunConfig& config,
                              const std::string& emotion, std::string& stage);

// Normalises, then analyses every configured emotion (in parallel when
// EMPROBE_THREADS allows). Per-emotion failures are collected, not thrown.
RunReport run_pipeline(const RunConfig& config, const PipelineInputs& inputs);

nlohmann::json to_json(const EmotionReport& report);
nlohmann::json to_json(const RunReport& report);

// report.json plus the CSV projections: f1_summary.csv, probe_results.csv,
// category_aggregates.csv, category_shap_profile.csv, subset_curves.csv.
void write_reports(const RunReport& report, const std::filesystem::path& dir);

}  // namespace emprobe
