#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emprobe/attrib.hpp"
#include "emprobe/crossval.hpp"
#include "emprobe/dataio.hpp"

namespace emprobe {

// Acoustic feature categories, in report order.
inline constexpr std::array<std::string_view, 4> kCategories = {"Energy", "Frequency", "Spectral", "Temporal"};

inline constexpr double kRmseFloor = 1e-9;

class CategoryMap {
 public:
  CategoryMap() = default;
  // Throws InputError for a category outside kCategories or a repeated name.
  explicit CategoryMap(std::map<std::string, std::string> mapping);

  static CategoryMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool contains(std::string_view feature) const;
  // Throws InputError naming the feature when unmapped.
  const std::string& category_of(std::string_view feature) const;
  const std::map<std::string, std::string, std::less<>>& entries() const { return mapping_; }

 private:
  std::map<std::string, std::string, std::less<>> mapping_;
};

struct StandardizedTargets {
  Matrix values;  // rows x kept, each column mean 0 and population sd 1
  std::vector<std::string> names;
  std::vector<std::string> excluded;  // zero variance over the subset
};

// Z-scores every acoustic column over the given rows (indices into the table).
StandardizedTargets standardize_targets(const FeatureTable& acoustic, std::span<const int> rows);

// Pooled out-of-fold RMSE of a nested-CV ridge probe.
double probe_feature(const MatrixRef& X, const VectorRef& target, std::span<const std::string> groups,
                     std::span<const double> alpha_grid, const NestedCvOptions& options);

// (rmse_all / rmse_top) / rmse_top, both inputs floored at kRmseFloor.
double information_increase(double rmse_all, double rmse_top);
bool information_increase_floored(double rmse_all, double rmse_top);

struct ProbeResult {
  std::string feature_name;
  std::string category;
  double rmse_all = 0.0;
  double rmse_top = 0.0;
  double info_increase = 0.0;
  bool floored = false;
  std::string plan_digest_all;
  std::string plan_digest_top;
  std::vector<double> alpha_all;  // chosen alpha per outer fold
  std::vector<double> alpha_top;
};

struct ProbeSuite {
  std::vector<ProbeResult> results;
  std::vector<std::string> excluded;
  std::vector<std::string> warnings;
};

struct ProbeOptions {
  std::vector<double> alpha_grid{0.001, 0.01, 0.1, 1.0, 10.0, 100.0};
  NestedCvOptions cv;
};

// For each non-constant acoustic feature, probes it from all embedding
// columns and from top_features on the rows `utterance_ids`, with one
// shared fold plan, and scores the pair with information_increase.
ProbeSuite run_probe_suite(const FeatureTable& embeddings, const FeatureTable& acoustic,
                           std::span<const std::string> utterance_ids, std::span<const std::string> top_features,
                           const CategoryMap& categories, const ProbeOptions& options);

struct CategoryAggregate {
  std::string category;
  double mean_ii = 0.0;
  double median_ii = 0.0;
  int count = 0;
  std::vector<double> values;
};

// Categories with at least one result, in kCategories order.
std::vector<CategoryAggregate> aggregate_by_category(std::span<const ProbeResult> results,
                                                     const CategoryMap& categories);

struct CategoryShare {
  std::string category;
  double share = 0.0;
};

// Sum of member importances over the grand total, for all four categories.
std::vector<CategoryShare> category_shap_profile(const Attribution& attribution, const CategoryMap& categories);

double median(std::vector<double> values);

}  // namespace emprobe
