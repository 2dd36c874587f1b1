#pragma once

#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "emprobe/dataio.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::path(EMPROBE_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

inline int uniform_int(std::mt19937_64& gen, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(gen);
}

// Gaussian elimination with partial pivoting on plain vectors; the reference
// solver for ridge tests, deliberately independent of Eigen's decompositions.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

// Ridge weights by forming the centred normal equations entry by entry.
inline std::vector<double> brute_force_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto d = static_cast<std::size_t>(X.cols());
  std::vector<double> xm(d, 0.0);
  double ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ym += y[static_cast<Eigen::Index>(i)] / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j)
      xm[j] += X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / static_cast<double>(n);
  }
  std::vector<std::vector<double>> a(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double xij = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - xm[j];
      b[j] += xij * (y[static_cast<Eigen::Index>(i)] - ym);
      for (std::size_t k = 0; k < d; ++k)
        a[j][k] += xij * (X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) - xm[k]);
    }
  }
  for (std::size_t j = 0; j < d; ++j) a[j][j] += alpha;
  return gauss_solve(std::move(a), std::move(b));
}

// Root of a monotone increasing function on [lo, hi] by bisection.
template <typename F>
double bisect(F f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Binary task with `speakers` groups of `per_speaker` rows each, labels
// alternating inside every speaker.
inline emprobe::BinaryTask grouped_task(const Eigen::MatrixXd& X, int speakers, int per_speaker) {
  emprobe::BinaryTask task;
  task.emotion = "emo";
  task.X = X;
  for (int s = 0; s < speakers; ++s) {
    for (int u = 0; u < per_speaker; ++u) {
      task.groups.push_back("spk" + std::to_string(s));
      task.y.push_back(u % 2);
      task.utterance_ids.push_back("spk" + std::to_string(s) + "_" + std::to_string(u));
    }
  }
  for (int j = 0; j < X.cols(); ++j) task.column_names.push_back("f." + std::to_string(j));
  return task;
}

}  // namespace testing
