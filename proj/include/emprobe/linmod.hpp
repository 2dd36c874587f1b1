#pragma once

#include <Eigen/Core>
#include <span>

namespace emprobe {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MatrixRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// Binary L2 logistic regression minimising
//   J(w, b) = 0.5 * |w|^2 + C * sum_i log(1 + exp(-s_i * (w.x_i + b))),  s_i = +-1
// with an unregularised intercept.
struct LogisticModel {
  Vector weights;
  double intercept = 0.0;
  double C = 1.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

struct LogisticOptions {
  // Stop once |grad J| <= tolerance, or once it reaches the rounding level
  // of the gradient for very large C * n.
  double tolerance = 1e-8;
  int max_iterations = 10000;
};

// Damped Newton from w = 0, b = 0. The Newton system is solved in the
// primal when d < n and through the n x n Woodbury form otherwise.
// Throws InputError for a single-class y or non-finite X, NumericalError
// if the tolerance is not met within max_iterations.
LogisticModel fit_logistic(const MatrixRef& X, std::span<const int> y, double C,
                           const LogisticOptions& options = {});

Vector predict_proba(const LogisticModel& model, const MatrixRef& X);
Vector decision_function(const LogisticModel& model, const MatrixRef& X);

// Objective and gradient of J; gradient has d + 1 entries (intercept last).
double logistic_objective(const MatrixRef& X, std::span<const int> y, double C,
                          const VectorRef& weights, double intercept);
Vector logistic_gradient(const MatrixRef& X, std::span<const int> y, double C,
                         const VectorRef& weights, double intercept);

// Mean log-loss of the model on (X, y).
double log_loss(const LogisticModel& model, const MatrixRef& X, std::span<const int> y);

struct RidgeModel {
  Vector weights;
  double intercept = 0.0;
  double alpha = 0.0;
};

// Ridge regression on mean-centred data:
//   w = (Xc'Xc + alpha I)^-1 Xc'yc,  b = mean(y) - w.mean(X)
// alpha == 0 with a rank-deficient Xc'Xc throws NumericalError.
RidgeModel fit_ridge(const MatrixRef& X, const VectorRef& y, double alpha);
Vector predict_ridge(const RidgeModel& model, const MatrixRef& X);

// Closed-form ridge for many targets and penalties on one design matrix.
// The Gram matrix of the centred design is formed once; every solve(alpha)
// is a Cholesky factorisation of that Gram plus alpha I. When d > n the
// n x n kernel form w = Xc'(XcXc' + alpha I)^-1 yc is used instead.
class RidgeSolver {
 public:
  explicit RidgeSolver(const MatrixRef& X);

  struct Fit {
    Matrix weights;     // d x m
    Vector intercepts;  // m
  };

  // Y is n x m (one target per column).
  Fit solve(const MatrixRef& Y, double alpha) const;

  Eigen::Index rows() const { return centered_.rows(); }
  Eigen::Index cols() const { return centered_.cols(); }

 private:
  Matrix centered_;
  Vector column_means_;
  Matrix gram_;  // Xc'Xc (d x d) or XcXc' (n x n)
  bool kernel_form_ = false;
};

}  // namespace emprobe
