#include "emprobe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <unordered_map>

#include "emprobe/crossval.hpp"
#include "emprobe/csv.hpp"
#include "emprobe/error.hpp"
#include "emprobe/json_writer.hpp"
#include "emprobe/parallel.hpp"
#include "emprobe/rng.hpp"

#ifndef EMPROBE_VERSION
#define EMPROBE_VERSION "0.0.0"
#endif

namespace emprobe {

using nlohmann::json;

std::string version() { return EMPROBE_VERSION; }

void RunConfig::validate() const {
  if (emotions.empty()) throw InputError("no emotions configured");
  std::set<std::string> seen;
  for (const auto& e : emotions) {
    if (e.empty()) throw InputError("empty emotion label");
    if (e == neutral_label) throw InputError(fmt::format("emotion '{}' equals the neutral label", e));
    if (!seen.insert(e).second) throw InputError(fmt::format("emotion '{}' listed twice", e));
  }
  if (neutral_label.empty()) throw InputError("empty neutral label");
  auto positive = [](const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw InputError(fmt::format("{} is empty", name));
    for (double v : grid)
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError(fmt::format("{} value {} is not positive", name, v));
  };
  positive(c_grid, "c-grid");
  positive(alpha_grid, "alpha-grid");
  if (k_outer < 2) throw InputError(fmt::format("k-outer must be >= 2, got {}", k_outer));
  if (k_inner < 2) throw InputError(fmt::format("k-inner must be >= 2, got {}", k_inner));
  if (subset_step < 1) throw InputError(fmt::format("subset-step must be >= 1, got {}", subset_step));
  if (subset_cap && *subset_cap < 1) throw InputError(fmt::format("subset-cap must be >= 1, got {}", *subset_cap));
}

json RunConfig::to_json() const {
  json j;
  j["embeddings_path"] = embeddings_path.generic_string();
  j["acoustic_path"] = acoustic_path.generic_string();
  j["category_map_path"] = category_map_path.generic_string();
  j["output_dir"] = output_dir.generic_string();
  j["emotions"] = emotions;
  j["neutral_label"] = neutral_label;
  j["c_grid"] = c_grid;
  j["alpha_grid"] = alpha_grid;
  j["k_outer"] = k_outer;
  j["k_inner"] = k_inner;
  j["subset_step"] = subset_step;
  j["subset_cap"] = subset_cap ? json(*subset_cap) : json(nullptr);
  j["seed"] = seed;
  return j;
}

std::uint64_t emotion_seed(std::uint64_t seed, std::string_view emotion) { return derive_seed(seed, emotion); }

int RunReport::exit_code() const {
  int code = 0;
  for (const auto& f : failures) code = std::max(code, f.exit_code);
  return code;
}

std::vector<std::string> validate_inputs(const RunConfig& config, PipelineInputs* loaded) {
  std::vector<std::string> issues;
  PipelineInputs in;
  bool have_emb = false, have_ac = false, have_map = false;
  auto attempt = [&](auto&& fn, bool& ok) {
    try {
      fn();
      ok = true;
    } catch (const InputError& e) {
      issues.emplace_back(e.what());
    }
  };
  attempt([&] { in.embeddings = load_feature_table(config.embeddings_path, "embedding"); }, have_emb);
  attempt([&] { in.acoustic = load_feature_table(config.acoustic_path, "acoustic"); }, have_ac);
  attempt([&] { in.categories = CategoryMap::load(config.category_map_path); }, have_map);

  auto label_check = [&](const FeatureTable& t) {
    std::set<std::string> labels;
    for (const auto& r : t.rows) labels.insert(r.emotion_label);
    if (!labels.contains(config.neutral_label))
      issues.push_back(fmt::format("{} table: neutral label '{}' not present", t.representation_id, config.neutral_label));
    for (const auto& e : config.emotions)
      if (!labels.contains(e)) issues.push_back(fmt::format("{} table: emotion '{}' not present", t.representation_id, e));
  };
  if (have_emb) label_check(in.embeddings);
  if (have_ac) label_check(in.acoustic);

  if (have_emb && have_ac) {
    std::unordered_map<std::string_view, const UtteranceRecord*> acoustic_rows;
    for (const auto& r : in.acoustic.rows) acoustic_rows.emplace(r.utterance_id, &r);
    std::set<std::string_view> emb_ids;
    for (const auto& r : in.embeddings.rows) {
      emb_ids.insert(r.utterance_id);
      auto it = acoustic_rows.find(r.utterance_id);
      if (it == acoustic_rows.end()) {
        issues.push_back(fmt::format("utterance '{}' is in the embedding table only", r.utterance_id));
        continue;
      }
      const auto& a = *it->second;
      if (a.speaker_id != r.speaker_id || a.emotion_label != r.emotion_label)
        issues.push_back(fmt::format("utterance '{}': speaker/emotion metadata differ between tables", r.utterance_id));
    }
    for (const auto& r : in.acoustic.rows)
      if (!emb_ids.contains(r.utterance_id))
        issues.push_back(fmt::format("utterance '{}' is in the acoustic table only", r.utterance_id));
  }
  if (have_ac && have_map) {
    for (const auto& name : in.acoustic.feature_names)
      if (!in.categories.contains(name))
        issues.push_back(fmt::format("acoustic column '{}' is missing from the category map", name));
  }
  if (loaded && have_emb && have_ac && have_map) *loaded = std::move(in);
  return issues;
}

EmotionReport analyze_emotion(const PipelineInputs& normalized, const RunConfig& config, const std::string& emotion,
                              std::string& stage) {
  EmotionReport report;
  report.emotion = emotion;
  report.seed = emotion_seed(config.seed, emotion);
  const NestedCvOptions cv{config.k_outer, config.k_inner, report.seed};
  auto absorb = [&](const std::vector<std::string>& warnings, std::string_view where) {
    for (const auto& w : warnings) {
      auto msg = fmt::format("{}: {}", where, w);
      if (std::find(report.warnings.begin(), report.warnings.end(), msg) == report.warnings.end())
        report.warnings.push_back(std::move(msg));
    }
  };

  stage = "task";
  const BinaryTask embedding_task = make_binary_task(normalized.embeddings, emotion, config.neutral_label);
  const BinaryTask acoustic_task = make_binary_task(normalized.acoustic, emotion, config.neutral_label);
  report.n_rows = embedding_task.size();
  report.n_positive = embedding_task.positives();

  stage = "classify-acoustic";
  const CVReport acoustic_cv = nested_cv_classify(acoustic_task, config.c_grid, cv);
  report.f1_acoustic = acoustic_cv.pooled_score;
  report.chosen_c_acoustic = acoustic_cv.chosen_hyperparams;
  absorb(acoustic_cv.warnings, stage);

  stage = "classify-embedding-all";
  const CVReport embedding_cv = nested_cv_classify(embedding_task, config.c_grid, cv);
  report.f1_embedding_all = embedding_cv.pooled_score;
  report.chosen_c_embedding_all = embedding_cv.chosen_hyperparams;
  report.fold_plan_digest = embedding_cv.plan_digest;
  absorb(embedding_cv.warnings, stage);

  stage = "attribute-embedding";
  const Attribution embedding_attr = fit_full_and_attribute(embedding_task, config.c_grid, config.k_outer, report.seed);
  report.embedding_shap_c = embedding_attr.chosen_c;
  absorb(embedding_attr.warnings, stage);
  const auto ranking = rank_features(embedding_attr);

  stage = "subset-search";
  SubsetSearchOptions subset_options;
  subset_options.step = config.subset_step;
  subset_options.cap = config.subset_cap;
  subset_options.c_grid = config.c_grid;
  subset_options.cv = cv;
  const SubsetResult subset = minimal_subset_search(embedding_task, ranking, subset_options);
  report.k_star = subset.k_star;
  report.top_features = subset.top_features;
  report.subset_k_grid = subset.k_grid;
  report.subset_f1_curve = subset.f1_curve;
  const auto star = static_cast<std::size_t>(
      std::find(subset.k_grid.begin(), subset.k_grid.end(), subset.k_star) - subset.k_grid.begin());
  report.f1_embedding_top = subset.f1_curve[star];
  report.chosen_c_embedding_top = subset.reports[star].chosen_hyperparams;

  stage = "attribute-acoustic";
  const Attribution acoustic_attr = fit_full_and_attribute(acoustic_task, config.c_grid, config.k_outer, report.seed);
  report.acoustic_shap_c = acoustic_attr.chosen_c;
  report.category_shap_profile = category_shap_profile(acoustic_attr, normalized.categories);

  stage = "probe";
  ProbeOptions probe_options;
  probe_options.alpha_grid = config.alpha_grid;
  probe_options.cv = cv;
  auto suite = run_probe_suite(normalized.embeddings, normalized.acoustic, embedding_task.utterance_ids,
                               subset.top_features, normalized.categories, probe_options);
  absorb(suite.warnings, stage);
  report.excluded_features = std::move(suite.excluded);
  report.probe_results = std::move(suite.results);

  stage = "aggregate";
  if (!report.probe_results.empty())
    report.category_aggregates = aggregate_by_category(report.probe_results, normalized.categories);
  stage = "done";
  return report;
}

RunReport run_pipeline(const RunConfig& config, const PipelineInputs& inputs) {
  config.validate();
  PipelineInputs normalized{speaker_normalize(inputs.embeddings), speaker_normalize(inputs.acoustic),
                            inputs.categories};

  RunReport run;
  run.config = config;
  const std::size_t E = config.emotions.size();
  std::vector<std::optional<EmotionReport>> reports(E);
  std::vector<std::optional<StageFailure>> failures(E);
  parallel_for(E, [&](std::size_t i) {
    const auto& emotion = config.emotions[i];
    std::string stage = "start";
    try {
      reports[i] = analyze_emotion(normalized, config, emotion, stage);
    } catch (const InputError& e) {
      failures[i] = StageFailure{emotion, stage, e.what(), 1};
    } catch (const std::exception& e) {
      failures[i] = StageFailure{emotion, stage, e.what(), 2};
    }
  });
  for (std::size_t i = 0; i < E; ++i) {
    if (reports[i]) run.emotions.push_back(std::move(*reports[i]));
    if (failures[i]) run.failures.push_back(std::move(*failures[i]));
  }
  return run;
}

json to_json(const EmotionReport& r) {
  json j;
  j["emotion"] = r.emotion;
  j["f1_acoustic"] = r.f1_acoustic;
  j["f1_embedding_all"] = r.f1_embedding_all;
  j["f1_embedding_top"] = r.f1_embedding_top;
  j["k_star"] = r.k_star;
  j["top_features"] = r.top_features;
  j["subset_search"] = {{"k_grid", r.subset_k_grid}, {"f1_curve", r.subset_f1_curve}};
  j["chosen_c"] = {{"acoustic", r.chosen_c_acoustic},
                   {"embedding_all", r.chosen_c_embedding_all},
                   {"embedding_top", r.chosen_c_embedding_top},
                   {"embedding_shap", r.embedding_shap_c},
                   {"acoustic_shap", r.acoustic_shap_c}};
  json probes = json::array();
  for (const auto& p : r.probe_results) {
    probes.push_back({{"feature_name", p.feature_name},
                      {"category", p.category},
                      {"rmse_all", p.rmse_all},
                      {"rmse_top", p.rmse_top},
                      {"info_increase", p.info_increase},
                      {"floored", p.floored},
                      {"plan_digest_all", p.plan_digest_all},
                      {"plan_digest_top", p.plan_digest_top},
                      {"alpha_all", p.alpha_all},
                      {"alpha_top", p.alpha_top}});
  }
  j["probe_results"] = std::move(probes);
  j["excluded_features"] = r.excluded_features;
  json aggregates = json::array();
  for (const auto& a : r.category_aggregates) {
    aggregates.push_back({{"category", a.category},
                          {"mean_ii", a.mean_ii},
                          {"median_ii", a.median_ii},
                          {"count", a.count},
                          {"values", a.values}});
  }
  j["category_aggregates"] = std::move(aggregates);
  json profile = json::array();
  for (const auto& s : r.category_shap_profile) profile.push_back({{"category", s.category}, {"share", s.share}});
  j["category_shap_profile"] = std::move(profile);
  j["fold_plan_digest"] = r.fold_plan_digest;
  j["config_echo"] = {{"emotion_seed", r.seed}, {"n_rows", r.n_rows}, {"n_positive", r.n_positive}};
  j["warnings"] = r.warnings;
  return j;
}

json to_json(const RunReport& report) {
  json j;
  j["version"] = version();
  j["config"] = report.config.to_json();
  json emotions = json::array();
  for (const auto& e : report.emotions) emotions.push_back(to_json(e));
  j["emotions"] = std::move(emotions);
  json failures = json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"emotion", f.emotion}, {"stage", f.stage}, {"message", f.message}, {"exit_code", f.exit_code}});
  j["failures"] = std::move(failures);
  return j;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

void write_reports(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  using csv::escape;
  using csv::format_double;

  open_out(dir / "report.json") << dump_json(to_json(report));

  auto f1 = open_out(dir / "f1_summary.csv");
  f1 << "emotion,f1_acoustic,f1_embedding_all,f1_embedding_top,k_star\n";
  for (const auto& e : report.emotions) {
    f1 << escape(e.emotion) << ',' << format_double(e.f1_acoustic) << ',' << format_double(e.f1_embedding_all)
       << ',' << format_double(e.f1_embedding_top) << ',' << e.k_star << '\n';
  }

  auto probes = open_out(dir / "probe_results.csv");
  probes << "emotion,feature_name,category,rmse_all,rmse_top,info_increase\n";
  for (const auto& e : report.emotions)
    for (const auto& p : e.probe_results)
      probes << escape(e.emotion) << ',' << escape(p.feature_name) << ',' << p.category << ','
             << format_double(p.rmse_all) << ',' << format_double(p.rmse_top) << ','
             << format_double(p.info_increase) << '\n';

  auto aggregates = open_out(dir / "category_aggregates.csv");
  aggregates << "emotion,category,mean_ii,median_ii,count\n";
  for (const auto& e : report.emotions)
    for (const auto& a : e.category_aggregates)
      aggregates << escape(e.emotion) << ',' << a.category << ',' << format_double(a.mean_ii) << ','
                 << format_double(a.median_ii) << ',' << a.count << '\n';

  auto profile = open_out(dir / "category_shap_profile.csv");
  profile << "emotion,category,share\n";
  for (const auto& e : report.emotions)
    for (const auto& s : e.category_shap_profile)
      profile << escape(e.emotion) << ',' << s.category << ',' << format_double(s.share) << '\n';

  auto curves = open_out(dir / "subset_curves.csv");
  curves << "emotion,k,f1\n";
  for (const auto& e : report.emotions)
    for (std::size_t i = 0; i < e.subset_k_grid.size(); ++i)
      curves << escape(e.emotion) << ',' << e.subset_k_grid[i] << ',' << format_double(e.subset_f1_curve[i]) << '\n';
}

}  // namespace emprobe
