#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emprobe/crossval.hpp"
#include "emprobe/dataio.hpp"
#include "emprobe/linmod.hpp"

namespace emprobe {

// Per-sample SHAP values of a linear model's margin (log-odds).
struct Attribution {
  std::vector<std::string> feature_names;
  Matrix phi;              // n x d, phi(i, j) = w_j * (x_ij - mu_j)
  Vector importance;       // mean |phi| per column
  Vector background_mean;  // mu

  // Set by fit_full_and_attribute.
  double chosen_c = 0.0;
  std::vector<double> cv_pooled_f1;  // one per grid value
  std::vector<std::string> warnings;
};

// Exact interventional SHAP for a linear model with background mean mu:
// sum_j phi_ij = f(x_i) - f(mu) where f is the margin.
Attribution linear_shap(const LogisticModel& model, const MatrixRef& X, const VectorRef& background_mean,
                        std::vector<std::string> feature_names);

// Descending importance; ties broken by ascending name.
std::vector<std::string> rank_features(const Attribution& attribution);

// Picks C by grouped k-fold CV on the whole task (pooled F1, ties ->
// smallest C), refits on every row and explains every row against the
// task's column means.
Attribution fit_full_and_attribute(const BinaryTask& task, std::span<const double> c_grid, int k_folds,
                                   std::uint64_t seed);

struct SubsetResult {
  std::vector<int> k_grid;
  std::vector<double> f1_curve;  // pooled nested-CV F1 per k
  int k_star = 0;
  std::vector<std::string> top_features;
  std::vector<CVReport> reports;  // per k
};

struct SubsetSearchOptions {
  int step = 10;
  std::optional<int> cap;  // default: all columns
  std::vector<double> c_grid{0.01, 0.1, 1.0, 10.0, 100.0};
  NestedCvOptions cv;
};

// Sizes step, 2*step, ... up to the cap; the cap itself is evaluated as the
// final size when it is not a multiple of step.
std::vector<int> subset_sizes(int step, int cap);

// Smallest k in the grid whose pooled F1 equals the maximum (exact compare).
int first_max(std::span<const int> k_grid, std::span<const double> f1_curve);

// Runs nested_cv_classify on the top-k ranked columns for every size in
// subset_sizes and keeps the smallest size reaching the best pooled F1.
SubsetResult minimal_subset_search(const BinaryTask& task, std::span<const std::string> ranking,
                                   const SubsetSearchOptions& options);

}  // namespace emprobe
