#include "emprobe/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <set>

#include "emprobe/error.hpp"
#include "emprobe/parallel.hpp"
#include "emprobe/rng.hpp"

namespace emprobe {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> rows_where(const std::vector<int>& folds, int fold, bool equal) {
  std::vector<int> out;
  for (std::size_t i = 0; i < folds.size(); ++i)
    if ((folds[i] == fold) == equal) out.push_back(static_cast<int>(i));
  return out;
}

template <typename T>
std::vector<T> take(std::span<const T> values, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(values[static_cast<std::size_t>(i)]);
  return out;
}

bool has_both_classes(const std::vector<int>& y) {
  const auto pos = std::count(y.begin(), y.end(), 1);
  return pos > 0 && static_cast<std::size_t>(pos) < y.size();
}

double f1_or_nan(std::span<const int> y_true, std::span<const int> y_pred) {
  if (std::find(y_true.begin(), y_true.end(), 1) == y_true.end()) return kNaN;
  return f1_score(y_true, y_pred);
}

double nan_mean(const std::vector<double>& v) {
  double sum = 0.0;
  int count = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      sum += x;
      ++count;
    }
  }
  return count == 0 ? kNaN : sum / count;
}

void check_grid(std::span<const double> grid, const char* name, bool allow_zero) {
  if (grid.empty()) throw InputError(fmt::format("{} grid is empty", name));
  for (double v : grid) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0))
      throw InputError(fmt::format("{} grid value {} is not {}", name, v, allow_zero ? "nonnegative" : "positive"));
  }
}

std::vector<int> threshold(const Vector& proba) {
  std::vector<int> out(static_cast<std::size_t>(proba.size()));
  for (Eigen::Index i = 0; i < proba.size(); ++i) out[static_cast<std::size_t>(i)] = proba[i] > 0.5 ? 1 : 0;
  return out;
}

}  // namespace

std::size_t count_groups(std::span<const std::string> groups) {
  return std::set<std::string>(groups.begin(), groups.end()).size();
}

std::vector<int> FoldPlan::row_folds(std::span<const std::string> groups) const {
  std::vector<int> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    auto it = assignment.find(g);
    if (it == assignment.end()) throw InputError(fmt::format("group '{}' is not in the fold plan", g));
    out.push_back(it->second);
  }
  return out;
}

std::vector<int> FoldPlan::test_rows(std::span<const std::string> groups, int fold) const {
  return rows_where(row_folds(groups), fold, true);
}

std::vector<int> FoldPlan::train_rows(std::span<const std::string> groups, int fold) const {
  return rows_where(row_folds(groups), fold, false);
}

std::string FoldPlan::digest() const {
  std::uint64_t h = fnv1a64(fmt::format("k={};", k));
  for (const auto& [group, fold] : assignment) h = fnv1a64(fmt::format("{}={};", group, fold), h);
  return fmt::format("{:016x}", h);
}

FoldPlan grouped_kfold(std::span<const std::string> groups, int k, std::uint64_t seed) {
  if (k < 2) throw InputError(fmt::format("fold count must be at least 2, got {}", k));
  std::set<std::string> distinct(groups.begin(), groups.end());
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw InputError(fmt::format("{} distinct speakers cannot fill {} folds", distinct.size(), k));
  }
  std::vector<std::string> order(distinct.begin(), distinct.end());
  Rng rng(seed);
  rng.shuffle(order);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) plan.assignment.emplace(order[i], static_cast<int>(i % k));
  return plan;
}

int effective_folds(int requested, std::size_t available, const char* what,
                    std::vector<std::string>& warnings) {
  if (available < 2) {
    throw InputError(fmt::format("{} cross-validation needs at least 2 speakers, found {}", what, available));
  }
  if (requested < 2) throw InputError(fmt::format("{} fold count must be at least 2, got {}", what, requested));
  if (static_cast<std::size_t>(requested) > available) {
    warnings.push_back(fmt::format("{} folds reduced from {} to {} (speaker count)", what, requested, available));
    return static_cast<int>(available);
  }
  return requested;
}

double f1_score(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw InputError(fmt::format("f1: length mismatch ({} vs {})", y_true.size(), y_pred.size()));
  if (y_true.empty()) throw InputError("f1: empty input");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == 1;
    const bool p = y_pred[i] == 1;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  if (tp + fn == 0) throw InputError("f1: y_true has no positive samples");
  // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); zero when TP == 0.
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size())
    throw InputError(fmt::format("rmse: length mismatch ({} vs {})", y_true.size(), y_pred.size()));
  if (y_true.empty()) throw InputError("rmse: empty input");
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(y_true.size()));
}

CVReport nested_cv_classify(const BinaryTask& task, std::span<const double> c_grid,
                            const NestedCvOptions& options) {
  check_grid(c_grid, "C", false);
  const std::size_t n = task.size();
  if (task.X.rows() != static_cast<Eigen::Index>(n) || task.groups.size() != n)
    throw InputError("task X, y and groups must have the same number of rows");
  const std::span<const std::string> groups(task.groups);
  const std::span<const int> labels(task.y);

  CVReport report;
  report.k_outer = effective_folds(options.k_outer, count_groups(groups), "outer", report.warnings);
  const FoldPlan plan = grouped_kfold(groups, report.k_outer, options.seed);
  report.plan_digest = plan.digest();
  const std::vector<int> folds = plan.row_folds(groups);

  const auto K = static_cast<std::size_t>(report.k_outer);
  report.outer_scores.assign(K, kNaN);
  report.chosen_hyperparams.assign(K, 0.0);
  report.k_inner.assign(K, 0);
  report.oof_predictions.assign(n, kNaN);
  std::vector<std::vector<std::string>> fold_warnings(K);

  parallel_for(K, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto train = rows_where(folds, fold, false);
    const auto test = rows_where(folds, fold, true);
    const Matrix X_train = task.X(train, Eigen::all);
    const auto y_train = take(labels, train);
    const auto g_train = take(groups, train);
    if (!has_both_classes(y_train))
      throw InputError(fmt::format("outer fold {}: training split has a single class", fold));

    const int k_in = effective_folds(options.k_inner, count_groups(g_train),
                                     fmt::format("inner (outer fold {})", fold).c_str(), fold_warnings[f]);
    report.k_inner[f] = k_in;
    const FoldPlan inner = grouped_kfold(g_train, k_in, derive_seed(options.seed, f));
    const auto inner_folds = inner.row_folds(g_train);

    std::vector<std::vector<double>> scores(c_grid.size(), std::vector<double>(static_cast<std::size_t>(k_in)));
    for (int g = 0; g < k_in; ++g) {
      const auto itrain = rows_where(inner_folds, g, false);
      const auto itest = rows_where(inner_folds, g, true);
      const auto yi_train = take(std::span<const int>(y_train), itrain);
      const auto yi_test = take(std::span<const int>(y_train), itest);
      if (!has_both_classes(yi_train)) {
        throw InputError(fmt::format("outer fold {}, inner fold {}: training split has a single class", fold, g));
      }
      const Matrix Xi_train = X_train(itrain, Eigen::all);
      const Matrix Xi_test = X_train(itest, Eigen::all);
      for (std::size_t c = 0; c < c_grid.size(); ++c) {
        const auto model = fit_logistic(Xi_train, yi_train, c_grid[c]);
        scores[c][static_cast<std::size_t>(g)] = f1_or_nan(yi_test, threshold(predict_proba(model, Xi_test)));
      }
    }

    std::size_t best = c_grid.size();
    double best_score = -1.0;
    for (std::size_t c = 0; c < c_grid.size(); ++c) {
      const double mean = nan_mean(scores[c]);
      if (std::isnan(mean)) continue;
      if (best == c_grid.size() || mean > best_score ||
          (mean == best_score && c_grid[c] < c_grid[best])) {
        best = c;
        best_score = mean;
      }
    }
    if (best == c_grid.size())
      throw InputError(fmt::format("outer fold {}: no inner test fold contains a positive sample", fold));
    report.chosen_hyperparams[f] = c_grid[best];

    const auto model = fit_logistic(X_train, y_train, c_grid[best]);
    const Vector proba = predict_proba(model, task.X(test, Eigen::all));
    for (std::size_t i = 0; i < test.size(); ++i)
      report.oof_predictions[static_cast<std::size_t>(test[i])] = proba[static_cast<Eigen::Index>(i)];
    report.outer_scores[f] = f1_or_nan(take(labels, test), threshold(proba));
  });

  for (auto& w : fold_warnings) report.warnings.insert(report.warnings.end(), w.begin(), w.end());
  Vector all(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) all[static_cast<Eigen::Index>(i)] = report.oof_predictions[i];
  report.pooled_score = f1_score(labels, threshold(all));
  return report;
}

std::vector<CVReport> nested_cv_regress_multi(const MatrixRef& X, const MatrixRef& Y,
                                              std::span<const std::string> groups,
                                              std::span<const double> alpha_grid,
                                              const NestedCvOptions& options) {
  check_grid(alpha_grid, "alpha", true);
  const auto n = static_cast<std::size_t>(X.rows());
  if (static_cast<std::size_t>(Y.rows()) != n || groups.size() != n)
    throw InputError("X, Y and groups must have the same number of rows");
  const auto m = static_cast<std::size_t>(Y.cols());
  const std::size_t A = alpha_grid.size();

  std::vector<std::string> warnings;
  const int k_outer = effective_folds(options.k_outer, count_groups(groups), "outer", warnings);
  const FoldPlan plan = grouped_kfold(groups, k_outer, options.seed);
  const std::vector<int> folds = plan.row_folds(groups);
  const auto K = static_cast<std::size_t>(k_outer);

  Matrix oof = Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m), kNaN);
  std::vector<std::vector<double>> chosen(K, std::vector<double>(m));
  std::vector<std::vector<double>> fold_scores(K, std::vector<double>(m));
  std::vector<int> k_inner(K);
  std::vector<std::vector<std::string>> fold_warnings(K);

  parallel_for(K, [&](std::size_t f) {
    const int fold = static_cast<int>(f);
    const auto train = rows_where(folds, fold, false);
    const auto test = rows_where(folds, fold, true);
    const Matrix X_train = X(train, Eigen::all);
    const Matrix Y_train = Y(train, Eigen::all);
    const auto g_train = take(groups, train);

    const int k_in = effective_folds(options.k_inner, count_groups(g_train),
                                     fmt::format("inner (outer fold {})", fold).c_str(), fold_warnings[f]);
    k_inner[f] = k_in;
    const FoldPlan inner = grouped_kfold(g_train, k_in, derive_seed(options.seed, f));
    const auto inner_folds = inner.row_folds(g_train);

    // mean inner RMSE, alpha x target
    Matrix inner_rmse = Matrix::Zero(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(m));
    for (int g = 0; g < k_in; ++g) {
      const auto itrain = rows_where(inner_folds, g, false);
      const auto itest = rows_where(inner_folds, g, true);
      const RidgeSolver solver(X_train(itrain, Eigen::all));
      const Matrix Xi_test = X_train(itest, Eigen::all);
      const Matrix Yi_train = Y_train(itrain, Eigen::all);
      const Matrix Yi_test = Y_train(itest, Eigen::all);
      for (std::size_t a = 0; a < A; ++a) {
        const auto fit = solver.solve(Yi_train, alpha_grid[a]);
        const Matrix pred = (Xi_test * fit.weights).rowwise() + fit.intercepts.transpose();
        const Eigen::RowVectorXd col_rmse =
            ((pred - Yi_test).colwise().squaredNorm() / static_cast<double>(itest.size())).cwiseSqrt();
        inner_rmse.row(static_cast<Eigen::Index>(a)) += col_rmse;
      }
    }
    inner_rmse /= static_cast<double>(k_in);

    std::vector<std::size_t> best(m);
    for (std::size_t t = 0; t < m; ++t) {
      std::size_t b = 0;
      for (std::size_t a = 1; a < A; ++a) {
        const double v = inner_rmse(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(t));
        const double bv = inner_rmse(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t));
        if (v < bv || (v == bv && alpha_grid[a] > alpha_grid[b])) b = a;
      }
      best[t] = b;
      chosen[f][t] = alpha_grid[b];
    }

    const RidgeSolver solver(X_train);
    const Matrix X_test = X(test, Eigen::all);
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<int> cols;
      for (std::size_t t = 0; t < m; ++t)
        if (best[t] == a) cols.push_back(static_cast<int>(t));
      if (cols.empty()) continue;
      const auto fit = solver.solve(Y_train(Eigen::all, cols), alpha_grid[a]);
      const Matrix pred = (X_test * fit.weights).rowwise() + fit.intercepts.transpose();
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto t = static_cast<Eigen::Index>(cols[c]);
        double ss = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i) {
          const double p = pred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
          oof(test[i], t) = p;
          const double e = p - Y(test[i], t);
          ss += e * e;
        }
        fold_scores[f][static_cast<std::size_t>(t)] = std::sqrt(ss / static_cast<double>(test.size()));
      }
    }
  });

  for (auto& w : fold_warnings) warnings.insert(warnings.end(), w.begin(), w.end());
  const std::string digest = plan.digest();
  std::vector<CVReport> reports(m);
  for (std::size_t t = 0; t < m; ++t) {
    auto& r = reports[t];
    r.k_outer = k_outer;
    r.k_inner = k_inner;
    r.plan_digest = digest;
    r.warnings = warnings;
    r.outer_scores.resize(K);
    r.chosen_hyperparams.resize(K);
    for (std::size_t f = 0; f < K; ++f) {
      r.outer_scores[f] = fold_scores[f][t];
      r.chosen_hyperparams[f] = chosen[f][t];
    }
    const auto col = static_cast<Eigen::Index>(t);
    r.oof_predictions.assign(oof.col(col).data(), oof.col(col).data() + n);
    std::vector<double> truth(Y.col(col).begin(), Y.col(col).end());
    r.pooled_score = rmse(truth, r.oof_predictions);
  }
  return reports;
}

CVReport nested_cv_regress(const MatrixRef& X, const VectorRef& y, std::span<const std::string> groups,
                           std::span<const double> alpha_grid, const NestedCvOptions& options) {
  auto reports = nested_cv_regress_multi(X, y, groups, alpha_grid, options);
  return std::move(reports.front());
}

}  // namespace emprobe
