#include "emprobe/attrib.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "emprobe/error.hpp"
#include "emprobe/parallel.hpp"

namespace emprobe {

Attribution linear_shap(const LogisticModel& model, const MatrixRef& X, const VectorRef& background_mean,
                        std::vector<std::string> feature_names) {
  const Eigen::Index d = model.weights.size();
  if (X.cols() != d || background_mean.size() != d || static_cast<Eigen::Index>(feature_names.size()) != d) {
    throw InputError(fmt::format("linear_shap: dimension mismatch (model {}, X {}, mean {}, names {})", d,
                                 X.cols(), background_mean.size(), feature_names.size()));
  }
  Attribution out;
  out.feature_names = std::move(feature_names);
  out.background_mean = background_mean;
  out.phi = (X.rowwise() - background_mean.transpose()).array().rowwise() * model.weights.transpose().array();
  out.importance = X.rows() > 0 ? Vector(out.phi.cwiseAbs().colwise().mean().transpose()) : Vector::Zero(d);
  return out;
}

std::vector<std::string> rank_features(const Attribution& attribution) {
  std::vector<std::size_t> order(attribution.feature_names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& imp = attribution.importance;
  const auto& names = attribution.feature_names;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ia = imp[static_cast<Eigen::Index>(a)];
    const double ib = imp[static_cast<Eigen::Index>(b)];
    if (ia != ib) return ia > ib;
    return names[a] < names[b];
  });
  std::vector<std::string> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(names[i]);
  return out;
}

Attribution fit_full_and_attribute(const BinaryTask& task, std::span<const double> c_grid, int k_folds,
                                   std::uint64_t seed) {
  if (c_grid.empty()) throw InputError("C grid is empty");
  std::vector<std::string> warnings;
  const std::span<const std::string> groups(task.groups);
  const int k = effective_folds(k_folds, count_groups(groups), "attribution", warnings);
  const FoldPlan plan = grouped_kfold(groups, k, seed);
  const auto folds = plan.row_folds(groups);

  // Out-of-fold margins per grid value, pooled F1 at threshold 0.5.
  std::vector<std::vector<int>> predicted(c_grid.size(), std::vector<int>(task.size()));
  for (int f = 0; f < k; ++f) {
    std::vector<int> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(static_cast<int>(i));
    std::vector<int> y_train;
    for (int i : train) y_train.push_back(task.y[static_cast<std::size_t>(i)]);
    const Matrix X_train = task.X(train, Eigen::all);
    const Matrix X_test = task.X(test, Eigen::all);
    for (std::size_t c = 0; c < c_grid.size(); ++c) {
      const auto model = fit_logistic(X_train, y_train, c_grid[c]);
      const Vector margin = decision_function(model, X_test);
      for (std::size_t i = 0; i < test.size(); ++i)
        predicted[c][static_cast<std::size_t>(test[i])] = margin[static_cast<Eigen::Index>(i)] > 0.0 ? 1 : 0;
    }
  }
  std::vector<double> pooled(c_grid.size());
  std::size_t best = 0;
  for (std::size_t c = 0; c < c_grid.size(); ++c) {
    pooled[c] = f1_score(task.y, predicted[c]);
    if (pooled[c] > pooled[best] || (pooled[c] == pooled[best] && c_grid[c] < c_grid[best])) best = c;
  }

  const auto model = fit_logistic(task.X, task.y, c_grid[best]);
  const Vector mean = task.X.colwise().mean().transpose();
  Attribution out = linear_shap(model, task.X, mean, task.column_names);
  out.chosen_c = c_grid[best];
  out.cv_pooled_f1 = std::move(pooled);
  out.warnings = std::move(warnings);
  return out;
}

std::vector<int> subset_sizes(int step, int cap) {
  if (step < 1) throw InputError(fmt::format("subset step must be >= 1, got {}", step));
  if (cap < 1) throw InputError(fmt::format("subset cap must be >= 1, got {}", cap));
  std::vector<int> out;
  for (int k = step; k <= cap; k += step) out.push_back(k);
  if (out.empty() || out.back() != cap) out.push_back(cap);
  return out;
}

int first_max(std::span<const int> k_grid, std::span<const double> f1_curve) {
  if (k_grid.empty() || k_grid.size() != f1_curve.size()) throw InputError("subset curve is empty or misaligned");
  const double best = *std::max_element(f1_curve.begin(), f1_curve.end());
  for (std::size_t i = 0; i < k_grid.size(); ++i)
    if (f1_curve[i] == best) return k_grid[i];
  return k_grid.back();
}

SubsetResult minimal_subset_search(const BinaryTask& task, std::span<const std::string> ranking,
                                   const SubsetSearchOptions& options) {
  const int d = static_cast<int>(task.column_names.size());
  {
    std::unordered_set<std::string_view> columns(task.column_names.begin(), task.column_names.end());
    std::unordered_set<std::string_view> ranked;
    for (const auto& r : ranking) {
      if (!columns.contains(r)) throw InputError(fmt::format("ranked feature '{}' is not a task column", r));
      ranked.insert(r);
    }
    if (static_cast<int>(ranked.size()) != d || ranking.size() != ranked.size())
      throw InputError("ranking must list every task column exactly once");
  }
  const int cap = std::min(options.cap.value_or(d), d);

  std::unordered_map<std::string_view, Eigen::Index> column_of;
  for (int j = 0; j < d; ++j) column_of.emplace(task.column_names[static_cast<std::size_t>(j)], j);

  SubsetResult result;
  result.k_grid = subset_sizes(options.step, cap);
  result.f1_curve.resize(result.k_grid.size());
  result.reports.resize(result.k_grid.size());

  parallel_for(result.k_grid.size(), [&](std::size_t i) {
    const int k = result.k_grid[i];
    std::vector<Eigen::Index> cols;
    for (int j = 0; j < k; ++j) cols.push_back(column_of.at(ranking[static_cast<std::size_t>(j)]));
    BinaryTask sub;
    sub.emotion = task.emotion;
    sub.X = task.X(Eigen::all, cols);
    sub.y = task.y;
    sub.groups = task.groups;
    sub.column_names.assign(ranking.begin(), ranking.begin() + k);
    result.reports[i] = nested_cv_classify(sub, options.c_grid, options.cv);
    result.f1_curve[i] = result.reports[i].pooled_score;
  });

  result.k_star = first_max(result.k_grid, result.f1_curve);
  result.top_features.assign(ranking.begin(), ranking.begin() + result.k_star);
  return result;
}

}  // namespace emprobe
