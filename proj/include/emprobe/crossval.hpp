#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "emprobe/dataio.hpp"
#include "emprobe/linmod.hpp"

namespace emprobe {

// Speaker-disjoint assignment of groups to k folds.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;

  // Fold index per row.
  std::vector<int> row_folds(std::span<const std::string> groups) const;
  // Row indices in / out of `fold`.
  std::vector<int> test_rows(std::span<const std::string> groups, int fold) const;
  std::vector<int> train_rows(std::span<const std::string> groups, int fold) const;
  // Stable 16-hex-digit hash of (k, assignment); equal digests mean equal plans.
  std::string digest() const;
};

// Distinct groups are sorted, shuffled with Rng(seed), then dealt
// round-robin to folds 0..k-1. Throws InputError when there are fewer than
// k distinct groups.
FoldPlan grouped_kfold(std::span<const std::string> groups, int k, std::uint64_t seed);

// Number of distinct values.
std::size_t count_groups(std::span<const std::string> groups);

struct CVReport {
  // Per outer fold; NaN where the fold's metric is undefined (e.g. F1 on a
  // fold without positives).
  std::vector<double> outer_scores;
  double pooled_score = 0.0;
  std::vector<double> chosen_hyperparams;
  // Classification: P(y=1). Regression: predicted value.
  std::vector<double> oof_predictions;
  int k_outer = 0;
  std::vector<int> k_inner;  // effective inner fold count per outer fold
  std::string plan_digest;
  std::vector<std::string> warnings;
};

struct NestedCvOptions {
  int k_outer = 5;
  int k_inner = 5;
  std::uint64_t seed = 0;
};

// Outer grouped k-fold; within each outer-training set an inner grouped
// k-fold picks the C with the highest mean inner F1 (ties -> smallest C),
// then the model is refit on the whole outer-training set and thresholded
// at 0.5 on the outer-test rows. Fold counts that exceed the available
// speaker count are reduced to it with a warning.
CVReport nested_cv_classify(const BinaryTask& task, std::span<const double> c_grid,
                            const NestedCvOptions& options);

// Ridge counterpart: inner selection minimises mean inner RMSE (ties ->
// largest alpha); pooled_score is the out-of-fold RMSE.
CVReport nested_cv_regress(const MatrixRef& X, const VectorRef& y, std::span<const std::string> groups,
                           std::span<const double> alpha_grid, const NestedCvOptions& options);

// Same, for each column of Y; every target shares one outer/inner fold plan
// and one factorisation per (split, alpha).
std::vector<CVReport> nested_cv_regress_multi(const MatrixRef& X, const MatrixRef& Y,
                                              std::span<const std::string> groups,
                                              std::span<const double> alpha_grid,
                                              const NestedCvOptions& options);

// 2PR/(P+R) for the positive class, 0 when P+R == 0. Throws InputError on
// length mismatch, empty input, or a y_true without positives.
double f1_score(std::span<const int> y_true, std::span<const int> y_pred);
double rmse(std::span<const double> y_true, std::span<const double> y_pred);

// Folds reduced to fit `available` speakers; records a warning when reduced.
int effective_folds(int requested, std::size_t available, const char* what,
                    std::vector<std::string>& warnings);

}  // namespace emprobe
