#include <doctest.h>

#include <cmath>
#include <random>

#include "emprobe/attrib.hpp"
#include "emprobe/error.hpp"
#include "helpers.hpp"

using namespace emprobe;

namespace {

const std::vector<double> kCGrid{0.01, 0.1, 1.0, 10.0, 100.0};

LogisticModel model_with(std::vector<double> w, double b) {
  LogisticModel m;
  m.weights = Vector::Map(w.data(), static_cast<Eigen::Index>(w.size()));
  m.intercept = b;
  return m;
}

std::vector<std::string> names(int d) {
  std::vector<std::string> out;
  for (int j = 0; j < d; ++j) out.push_back("f." + std::to_string(j));
  return out;
}

// 10 speakers x 20 rows; the label is the sign of column `col` plus a little noise.
BinaryTask planted_task(std::mt19937_64& gen, int d, int col) {
  const Matrix X = testing::random_matrix(gen, 200, d);
  auto task = testing::grouped_task(X, 10, 20);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (std::size_t i = 0; i < task.size(); ++i)
    task.y[i] = X(static_cast<Eigen::Index>(i), col) + noise(gen) > 0 ? 1 : 0;
  for (int j = 0; j < d; ++j) task.column_names[static_cast<std::size_t>(j)] = "emb." + std::to_string(j);
  return task;
}

}  // namespace

TEST_CASE("linear_shap worked example") {
  const auto m = model_with({2.0, -1.0}, 0.3);
  Matrix X(1, 2);
  X << 3.0, 1.0;
  Vector mu(2);
  mu << 1.0, 0.0;
  const auto a = linear_shap(m, X, mu, {"a", "b"});
  CHECK(a.phi(0, 0) == 4.0);
  CHECK(a.phi(0, 1) == -1.0);
  CHECK(a.importance[0] == 4.0);
  CHECK(a.importance[1] == 1.0);
  // f(x) - f(mu) = (6 - 1 + 0.3) - (2 + 0.3)
  CHECK(a.phi.row(0).sum() == doctest::Approx(3.0));
}

TEST_CASE("linear_shap zero model and point at the background") {
  const auto zero = model_with({0.0, 0.0, 0.0}, 1.0);
  std::mt19937_64 gen(1);
  const Matrix X = testing::random_matrix(gen, 5, 3);
  const Vector mu = X.colwise().mean();
  CHECK(linear_shap(zero, X, mu, names(3)).phi.isZero(0.0));
  const auto m = model_with({1.0, 2.0, 3.0}, 0.0);
  CHECK(linear_shap(m, mu.transpose(), mu, names(3)).phi.isZero(0.0));
}

TEST_CASE("linear_shap input errors") {
  const auto m = model_with({1.0, 2.0}, 0.0);
  CHECK_THROWS_AS(linear_shap(m, Matrix::Zero(2, 3), Vector::Zero(3), names(3)), InputError);
  CHECK_THROWS_AS(linear_shap(m, Matrix::Zero(2, 2), Vector::Zero(3), names(2)), InputError);
  CHECK_THROWS_AS(linear_shap(m, Matrix::Zero(2, 2), Vector::Zero(2), names(1)), InputError);
}

TEST_CASE("linear_shap properties") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = testing::uniform_int(gen, 1, 30);
    const int d = testing::uniform_int(gen, 1, 8);
    LogisticModel m;
    m.weights = testing::random_matrix(gen, d, 1, 3.0);
    m.intercept = testing::random_matrix(gen, 1, 1)(0, 0);
    const Matrix X = testing::random_matrix(gen, n, d, 2.0);
    const Matrix B = testing::random_matrix(gen, 10, d);
    const Vector mu = B.colwise().mean();
    const auto a = linear_shap(m, X, mu, names(d));

    // additivity against the margin
    const Vector fx = decision_function(m, X);
    const double fmu = m.weights.dot(mu) + m.intercept;
    for (int i = 0; i < n; ++i) CHECK(std::abs(a.phi.row(i).sum() - (fx[i] - fmu)) <= 1e-10);

    // importance = |w_j| * mean |x_j - mu_j|
    for (int j = 0; j < d; ++j) {
      const double expected = std::abs(m.weights[j]) * (X.col(j).array() - mu[j]).abs().mean();
      CHECK(std::abs(a.importance[j] - expected) <= 1e-12 * std::max(1.0, expected));
    }

    // rescaling one column and its weight inversely leaves phi unchanged
    const int j = testing::uniform_int(gen, 0, d - 1);
    const double s = std::pow(10.0, testing::uniform_int(gen, -2, 2));
    Matrix Xs = X;
    Vector mus = mu;
    LogisticModel ms = m;
    Xs.col(j) *= s;
    mus[j] *= s;
    ms.weights[j] /= s;
    const auto as = linear_shap(ms, Xs, mus, names(d));
    CHECK((as.phi - a.phi).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, a.phi.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("rank_features orders by importance then name") {
  Attribution a;
  a.feature_names = {"c", "a", "b", "d"};
  a.importance = Vector(4);
  a.importance << 1.0, 2.0, 2.0, 0.5;
  CHECK(rank_features(a) == std::vector<std::string>{"a", "b", "c", "d"});
  a.importance << 0.0, 0.0, 0.0, 0.0;
  CHECK(rank_features(a) == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("subset_sizes and first_max") {
  CHECK(subset_sizes(10, 128) == std::vector<int>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120, 128});
  CHECK(subset_sizes(10, 30) == std::vector<int>{10, 20, 30});
  CHECK(subset_sizes(10, 5) == std::vector<int>{5});
  CHECK_THROWS_AS(subset_sizes(0, 10), InputError);

  CHECK(first_max(std::vector<int>{10, 20, 30}, std::vector<double>{0.8, 0.9, 0.9}) == 20);
  CHECK(first_max(std::vector<int>{10, 20, 30}, std::vector<double>{0.95, 0.9, 0.9}) == 10);
  CHECK(first_max(std::vector<int>{10}, std::vector<double>{0.0}) == 10);
}

TEST_CASE("fit_full_and_attribute ranks the planted column first") {
  std::mt19937_64 gen(4);
  const auto task = planted_task(gen, 8, 3);
  const auto a = fit_full_and_attribute(task, kCGrid, 5, 0);
  CHECK(rank_features(a).front() == "emb.3");
  CHECK(a.cv_pooled_f1.size() == kCGrid.size());
  CHECK(a.phi.rows() == static_cast<Eigen::Index>(task.size()));
  for (int j = 0; j < 8; ++j) CHECK(std::abs(a.background_mean[j] - task.X.col(j).mean()) <= 1e-12);
}

TEST_CASE("fit_full_and_attribute: duplicated columns share importance") {
  std::mt19937_64 gen(5);
  auto task = planted_task(gen, 4, 0);
  Matrix X(task.X.rows(), 5);
  X << task.X, task.X.col(0);
  task.X = X;
  task.column_names.push_back("emb.copy");
  const auto a = fit_full_and_attribute(task, kCGrid, 5, 0);
  CHECK(std::abs(a.importance[0] - a.importance[4]) <= 1e-9 * std::max(1.0, a.importance[0]));
}

TEST_CASE("fit_full_and_attribute: noise columns rank below the planted column") {
  int wins = 0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(500 + seed);
    const auto task = planted_task(gen, 20, 7);
    const auto a = fit_full_and_attribute(task, kCGrid, 5, static_cast<std::uint64_t>(seed));
    wins += rank_features(a).front() == "emb.7";
  }
  CHECK(wins >= 9);
}

TEST_CASE("minimal_subset_search finds a small planted subset") {
  std::mt19937_64 gen(6);
  const Matrix X = testing::random_matrix(gen, 200, 40);
  auto task = testing::grouped_task(X, 10, 20);
  for (std::size_t i = 0; i < task.size(); ++i)
    task.y[i] = X.row(static_cast<Eigen::Index>(i)).head(5).sum() > 0 ? 1 : 0;
  const auto ranking = rank_features(fit_full_and_attribute(task, kCGrid, 5, 0));

  SubsetSearchOptions opts;
  opts.step = 5;
  opts.cv = {5, 5, 0};
  const auto result = minimal_subset_search(task, ranking, opts);
  CHECK(result.k_grid == std::vector<int>{5, 10, 15, 20, 25, 30, 35, 40});
  CHECK(result.f1_curve.size() == result.k_grid.size());
  CHECK(result.reports.size() == result.k_grid.size());
  CHECK(result.k_star == first_max(result.k_grid, result.f1_curve));
  CHECK(result.top_features.size() == static_cast<std::size_t>(result.k_star));
  CHECK(std::equal(result.top_features.begin(), result.top_features.end(), ranking.begin()));
  CHECK(result.k_star <= 10);
}

TEST_CASE("minimal_subset_search validates the ranking") {
  std::mt19937_64 gen(7);
  const auto task = planted_task(gen, 4, 0);
  SubsetSearchOptions opts;
  const std::vector<std::string> bad{"emb.0", "nope"};
  CHECK_THROWS_AS(minimal_subset_search(task, bad, opts), InputError);
}
