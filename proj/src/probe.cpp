#include "emprobe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>

#include "emprobe/csv.hpp"
#include "emprobe/error.hpp"

namespace emprobe {

namespace {

bool known_category(std::string_view c) {
  return std::find(kCategories.begin(), kCategories.end(), c) != kCategories.end();
}

}  // namespace

CategoryMap::CategoryMap(std::map<std::string, std::string> mapping) {
  for (auto& [feature, category] : mapping) {
    if (feature.empty()) throw InputError("category map: empty feature name");
    if (!known_category(category)) {
      throw InputError(fmt::format("category map: feature '{}' has unknown category '{}' (expected one of {})",
                                   feature, category, fmt::join(kCategories, ", ")));
    }
    mapping_.emplace(feature, category);
  }
}

CategoryMap CategoryMap::load(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "feature_name" || rows.front()[1] != "category")
    throw InputError(fmt::format("'{}': header must be 'feature_name,category'", path.string()));
  std::map<std::string, std::string> mapping;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 2) throw InputError(fmt::format("'{}': row {} must have 2 fields", path.string(), i));
    if (!mapping.emplace(r[0], r[1]).second)
      throw InputError(fmt::format("'{}': feature '{}' listed twice", path.string(), r[0]));
  }
  return CategoryMap(std::move(mapping));
}

void CategoryMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << "feature_name,category\n";
  for (const auto& [feature, category] : mapping_) out << csv::escape(feature) << ',' << category << '\n';
}

bool CategoryMap::contains(std::string_view feature) const { return mapping_.find(feature) != mapping_.end(); }

const std::string& CategoryMap::category_of(std::string_view feature) const {
  auto it = mapping_.find(feature);
  if (it == mapping_.end()) throw InputError(fmt::format("feature '{}' is missing from the category map", feature));
  return it->second;
}

StandardizedTargets standardize_targets(const FeatureTable& acoustic, std::span<const int> rows) {
  if (rows.empty()) throw InputError("standardize_targets: empty row subset");
  const std::vector<int> idx(rows.begin(), rows.end());
  const Matrix sub = acoustic.values(idx, Eigen::all);
  const double n = static_cast<double>(sub.rows());

  StandardizedTargets out;
  std::vector<Eigen::Index> keep;
  std::vector<double> means, sds;
  for (Eigen::Index j = 0; j < sub.cols(); ++j) {
    const double mean = sub.col(j).mean();
    const double sd = std::sqrt((sub.col(j).array() - mean).square().sum() / n);
    const auto& name = acoustic.feature_names[static_cast<std::size_t>(j)];
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      out.excluded.push_back(name);
      continue;
    }
    keep.push_back(j);
    means.push_back(mean);
    sds.push_back(sd);
    out.names.push_back(name);
  }
  out.values.resize(sub.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    out.values.col(static_cast<Eigen::Index>(c)) = (sub.col(keep[c]).array() - means[c]) / sds[c];
  return out;
}

double probe_feature(const MatrixRef& X, const VectorRef& target, std::span<const std::string> groups,
                     std::span<const double> alpha_grid, const NestedCvOptions& options) {
  return nested_cv_regress(X, target, groups, alpha_grid, options).pooled_score;
}

bool information_increase_floored(double rmse_all, double rmse_top) {
  return rmse_all < kRmseFloor || rmse_top < kRmseFloor;
}

double information_increase(double rmse_all, double rmse_top) {
  if (!(rmse_all >= 0.0) || !(rmse_top >= 0.0))
    throw InputError(fmt::format("information_increase: RMSEs must be nonnegative ({}, {})", rmse_all, rmse_top));
  const double all = std::max(rmse_all, kRmseFloor);
  const double top = std::max(rmse_top, kRmseFloor);
  return (all / top) * (1.0 / top);
}

ProbeSuite run_probe_suite(const FeatureTable& embeddings, const FeatureTable& acoustic,
                           std::span<const std::string> utterance_ids, std::span<const std::string> top_features,
                           const CategoryMap& categories, const ProbeOptions& options) {
  if (top_features.empty()) throw InputError("probe suite: empty top-feature list");
  const auto emb_rows = embeddings.row_indices(utterance_ids);
  const auto ac_rows = acoustic.row_indices(utterance_ids);

  std::vector<std::string> groups;
  groups.reserve(emb_rows.size());
  for (int i : emb_rows) groups.push_back(embeddings.rows[static_cast<std::size_t>(i)].speaker_id);

  std::vector<Eigen::Index> top_cols;
  for (const auto& name : top_features) top_cols.push_back(static_cast<Eigen::Index>(embeddings.column_index(name)));

  const Matrix X_all = embeddings.values(emb_rows, Eigen::all);
  const Matrix X_top = X_all(Eigen::all, top_cols);
  auto targets = standardize_targets(acoustic, ac_rows);

  ProbeSuite suite;
  suite.excluded = targets.excluded;
  for (const auto& name : targets.names) categories.category_of(name);
  for (const auto& name : targets.excluded) suite.warnings.push_back(fmt::format("'{}' has zero variance; excluded", name));
  if (targets.names.empty()) return suite;

  const auto all = nested_cv_regress_multi(X_all, targets.values, groups, options.alpha_grid, options.cv);
  const auto top = nested_cv_regress_multi(X_top, targets.values, groups, options.alpha_grid, options.cv);
  suite.warnings.insert(suite.warnings.end(), all.front().warnings.begin(), all.front().warnings.end());

  for (std::size_t t = 0; t < targets.names.size(); ++t) {
    ProbeResult r;
    r.feature_name = targets.names[t];
    r.category = categories.category_of(r.feature_name);
    r.rmse_all = all[t].pooled_score;
    r.rmse_top = top[t].pooled_score;
    r.info_increase = information_increase(r.rmse_all, r.rmse_top);
    r.floored = information_increase_floored(r.rmse_all, r.rmse_top);
    if (r.floored) suite.warnings.push_back(fmt::format("RMSE floored at {} for '{}'", kRmseFloor, r.feature_name));
    r.plan_digest_all = all[t].plan_digest;
    r.plan_digest_top = top[t].plan_digest;
    r.alpha_all = all[t].chosen_hyperparams;
    r.alpha_top = top[t].chosen_hyperparams;
    suite.results.push_back(std::move(r));
  }
  return suite;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<CategoryAggregate> aggregate_by_category(std::span<const ProbeResult> results,
                                                     const CategoryMap& categories) {
  if (results.empty()) throw InputError("aggregate_by_category: no probe results");
  std::map<std::string, std::vector<double>, std::less<>> by_category;
  for (const auto& r : results) by_category[categories.category_of(r.feature_name)].push_back(r.info_increase);

  std::vector<CategoryAggregate> out;
  for (auto category : kCategories) {
    auto it = by_category.find(category);
    if (it == by_category.end()) continue;
    CategoryAggregate agg;
    agg.category = std::string(category);
    agg.values = it->second;
    agg.count = static_cast<int>(agg.values.size());
    double sum = 0.0;
    for (double v : agg.values) sum += v;
    agg.mean_ii = sum / agg.count;
    agg.median_ii = median(agg.values);
    out.push_back(std::move(agg));
  }
  return out;
}

std::vector<CategoryShare> category_shap_profile(const Attribution& attribution, const CategoryMap& categories) {
  std::map<std::string, double, std::less<>> totals;
  double grand = 0.0;
  for (std::size_t j = 0; j < attribution.feature_names.size(); ++j) {
    const double v = attribution.importance[static_cast<Eigen::Index>(j)];
    totals[categories.category_of(attribution.feature_names[j])] += v;
    grand += v;
  }
  std::vector<CategoryShare> out;
  for (auto category : kCategories) {
    auto it = totals.find(category);
    const double total = it == totals.end() ? 0.0 : it->second;
    out.push_back({std::string(category), grand > 0.0 ? total / grand : 0.0});
  }
  return out;
}

}  // namespace emprobe
