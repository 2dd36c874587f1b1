// emprobe: validate feature tables, run the probing analysis, or generate
// synthetic tables with planted signal.
//
// Exit codes: 0 success, 1 validation or usage error, 2 internal or
// convergence error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "emprobe/error.hpp"
#include "emprobe/pipeline.hpp"
#include "emprobe/synth.hpp"

namespace {

using namespace emprobe;

void add_input_flags(CLI::App& cmd, RunConfig& config) {
  cmd.add_option("--embeddings-path", config.embeddings_path, "Embedding table CSV")->required();
  cmd.add_option("--acoustic-path", config.acoustic_path, "Acoustic feature table CSV")->required();
  cmd.add_option("--category-map-path", config.category_map_path, "feature_name,category CSV")->required();
  cmd.add_option("--emotions", config.emotions, "Emotion labels to contrast with neutral")
      ->delimiter(',')
      ->capture_default_str();
  cmd.add_option("--neutral-label", config.neutral_label, "Label of the neutral class")->capture_default_str();
}

void print_issues(const std::vector<std::string>& issues) {
  for (const auto& issue : issues) fmt::print(stderr, "  - {}\n", issue);
  fmt::print("{} issue{}\n", issues.size(), issues.size() == 1 ? "" : "s");
}

int cmd_validate(const RunConfig& config) {
  const auto issues = validate_inputs(config);
  print_issues(issues);
  return issues.empty() ? 0 : 1;
}

int cmd_run(const RunConfig& config) {
  config.validate();
  PipelineInputs inputs;
  const auto issues = validate_inputs(config, &inputs);
  if (!issues.empty()) {
    print_issues(issues);
    return 1;
  }
  const RunReport report = run_pipeline(config, inputs);
  write_reports(report, config.output_dir);

  for (const auto& e : report.emotions) {
    fmt::print("{:<12} F1 acoustic {:.3f}  embedding-all {:.3f}  embedding-top {:.3f}  k*={}\n", e.emotion,
               e.f1_acoustic, e.f1_embedding_all, e.f1_embedding_top, e.k_star);
    for (const auto& w : e.warnings) fmt::print(stderr, "warning [{}] {}\n", e.emotion, w);
  }
  for (const auto& f : report.failures)
    fmt::print(stderr, "error [{}] stage '{}': {}\n", f.emotion, f.stage, f.message);
  fmt::print("report written to {}\n", (config.output_dir / "report.json").string());
  return report.exit_code();
}

std::vector<LatentSpec> parse_latents(const std::vector<std::string>& items, bool informative,
                                      const std::string& default_category) {
  std::vector<LatentSpec> out;
  for (const auto& item : items) {
    const auto colon = item.find(':');
    LatentSpec l;
    l.informative = informative;
    l.name = item.substr(0, colon);
    l.category = colon == std::string::npos ? default_category : item.substr(colon + 1);
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probe which interpretable acoustic features an audio embedding relies on for emotion recognition"};
  app.set_version_flag("--version", emprobe::version());
  app.require_subcommand(1);

  RunConfig config;

  auto* validate = app.add_subcommand("validate", "Check tables and category map for consistency");
  add_input_flags(*validate, config);

  auto* run = app.add_subcommand("run", "Run classification, attribution, subset search and probing");
  add_input_flags(*run, config);
  run->add_option("--output-dir", config.output_dir, "Directory for report.json and CSVs")->required();
  run->add_option("--c-grid", config.c_grid, "Logistic C values")->delimiter(',')->capture_default_str();
  run->add_option("--alpha-grid", config.alpha_grid, "Ridge alpha values")->delimiter(',')->capture_default_str();
  run->add_option("--k-outer", config.k_outer, "Outer folds")->capture_default_str();
  run->add_option("--k-inner", config.k_inner, "Inner folds")->capture_default_str();
  run->add_option("--subset-step", config.subset_step, "Subset sweep step")->capture_default_str();
  run->add_option("--subset-cap", config.subset_cap, "Largest subset size (default: all dims)");
  run->add_option("--seed", config.seed, "Master seed")->capture_default_str();

  SynthSpec spec;
  std::filesystem::path synth_dir;
  std::vector<std::string> informative{"latent.signal"};
  std::vector<std::string> decoys{"latent.decoy"};
  auto* synth = app.add_subcommand("synth", "Write synthetic embedding/acoustic tables with planted signal");
  synth->add_option("--output-dir", synth_dir, "Directory for embeddings.csv, acoustic.csv, categories.csv")
      ->required();
  synth->add_option("--n-speakers", spec.n_speakers)->capture_default_str();
  synth->add_option("--utterances-per-speaker", spec.utterances_per_speaker)->capture_default_str();
  synth->add_option("--embed-dim", spec.embed_dim)->capture_default_str();
  synth->add_option("--planted-dims", spec.planted_dims)->delimiter(',');
  synth->add_option("--informative", informative, "Informative latents as name[:Category]")->delimiter(',');
  synth->add_option("--decoys", decoys, "Decoy latents as name[:Category]")->delimiter(',');
  synth->add_option("--label-latent", spec.label_latent)->capture_default_str();
  synth->add_option("--noise-sigma", spec.noise_sigma)->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*run) return cmd_run(config);
    if (*synth) {
      spec.latents = parse_latents(informative, true, "Energy");
      auto decoy_specs = parse_latents(decoys, false, "Temporal");
      spec.latents.insert(spec.latents.end(), decoy_specs.begin(), decoy_specs.end());
      const auto data = generate(spec);
      std::filesystem::create_directories(synth_dir);
      write_feature_table(data.embeddings, synth_dir / "embeddings.csv");
      write_feature_table(data.acoustic, synth_dir / "acoustic.csv");
      data.categories.save(synth_dir / "categories.csv");
      fmt::print("wrote {} utterances ({} embedding dims, {} latents) to {}\n", data.embeddings.size(),
                 data.embeddings.dim(), data.acoustic.dim(), synth_dir.string());
      return 0;
    }
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 2;
  }
  return 1;
}
