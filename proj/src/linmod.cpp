#include "emprobe/linmod.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "emprobe/error.hpp"

namespace emprobe {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector signs_of(std::span<const int> y) {
  Vector s(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) s[static_cast<Eigen::Index>(i)] = y[i] == 1 ? 1.0 : -1.0;
  return s;
}

void check_labels(const MatrixRef& X, std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw InputError(fmt::format("X has {} rows but y has {} labels", X.rows(), y.size()));
  if (y.size() < 2) throw InputError("logistic regression needs at least 2 samples");
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 0 && v != 1) throw InputError(fmt::format("binary labels must be 0 or 1, got {}", v));
    pos += v == 1;
  }
  if (pos == 0 || pos == y.size())
    throw InputError("logistic regression needs both classes in y");
  if (!X.allFinite()) throw InputError("X contains non-finite values");
}

double objective_from_margins(const Vector& w, const Vector& margins, const Vector& s, double C) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-s[i] * margins[i]);
  return 0.5 * w.squaredNorm() + C * loss;
}

}  // namespace

double logistic_objective(const MatrixRef& X, std::span<const int> y, double C,
                          const VectorRef& weights, double intercept) {
  const Vector s = signs_of(y);
  const Vector margins = (X * weights).array() + intercept;
  return objective_from_margins(weights, margins, s, C);
}

Vector logistic_gradient(const MatrixRef& X, std::span<const int> y, double C,
                         const VectorRef& weights, double intercept) {
  const Vector s = signs_of(y);
  const Vector margins = (X * weights).array() + intercept;
  Vector r(margins.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = -C * s[i] * sigmoid(-s[i] * margins[i]);
  Vector g(weights.size() + 1);
  g.head(weights.size()) = weights + X.transpose() * r;
  g[weights.size()] = r.sum();
  return g;
}

LogisticModel fit_logistic(const MatrixRef& X, std::span<const int> y, double C,
                           const LogisticOptions& options) {
  check_labels(X, y);
  if (!(C > 0.0) || !std::isfinite(C)) throw InputError(fmt::format("C must be positive, got {}", C));

  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  const Vector s = signs_of(y);
  const bool kernel_form = d > n;
  Matrix kernel;
  if (kernel_form) kernel = X * X.transpose();

  Vector w = Vector::Zero(d);
  double b = 0.0;
  Vector margins = Vector::Zero(n);
  double J = objective_from_margins(w, margins, s, C);

  Vector r(n), curvature(n);
  // Below this the gradient is dominated by rounding in w + X'r.
  const double row_scale = X.cwiseAbs().rowwise().maxCoeff().sum();
  LogisticModel model;
  model.C = C;

  for (int iter = 0;; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(-s[i] * margins[i]);
      r[i] = -C * s[i] * p;
      curvature[i] = C * p * (1.0 - p);
    }
    const Vector gw = w + X.transpose() * r;
    const double gb = r.sum();
    const double gnorm = std::sqrt(gw.squaredNorm() + gb * gb);
    const double floor = 1024.0 * std::numeric_limits<double>::epsilon() * (w.norm() + C * (row_scale + n));
    if (gnorm <= std::max(options.tolerance, floor)) {
      model.iterations = iter;
      model.gradient_norm = gnorm;
      break;
    }
    if (iter >= options.max_iterations) {
      throw NumericalError(fmt::format(
          "logistic regression (C={}) did not converge in {} iterations: |grad|={:.3e}", C,
          options.max_iterations, gnorm));
    }

    // Newton direction for H = [[I + X'SX, X'S1], [1'SX, 1'S1]].
    Vector pw;
    double pb = 0.0;
    const double s_sum = curvature.sum();
    const Vector u = X.transpose() * curvature;
    if (!kernel_form) {
      const Vector root = curvature.cwiseSqrt();
      const Matrix scaled = X.array().colwise() * root.array();
      Matrix H = Matrix::Zero(d + 1, d + 1);
      H.topLeftCorner(d, d).diagonal().setOnes();
      H.topLeftCorner(d, d).selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
      H.block(d, 0, 1, d) = u.transpose();
      H(d, d) = s_sum;
      Vector g(d + 1);
      g.head(d) = gw;
      g[d] = gb;
      Eigen::LLT<Matrix, Eigen::Lower> llt(H);
      Vector step;
      if (llt.info() == Eigen::Success) {
        step = llt.solve(-g);
      } else {
        step = H.selfadjointView<Eigen::Lower>().ldlt().solve(-g);
      }
      pw = step.head(d);
      pb = step[d];
    } else {
      // (I + X'SX)^-1 v = v - X' R M^-1 R X v with R = S^(1/2), M = I + R K R.
      const Vector root = curvature.cwiseSqrt();
      Matrix M = root.asDiagonal() * kernel * root.asDiagonal();
      M.diagonal().array() += 1.0;
      const Eigen::LLT<Matrix> llt(M);
      if (llt.info() != Eigen::Success) throw NumericalError("logistic Newton system is not positive definite");
      auto apply_inverse = [&](const Vector& v) -> Vector {
        const Vector t = root.cwiseProduct(llt.solve(root.cwiseProduct(X * v)));
        return v - X.transpose() * t;
      };
      const Vector a1 = apply_inverse(-gw);
      const Vector a2 = apply_inverse(u);
      const double schur = s_sum - u.dot(a2);
      pb = schur > 0.0 ? (-gb - u.dot(a1)) / schur : 0.0;
      pw = a1 - a2 * pb;
    }

    // Backtracking (Armijo) along the Newton direction. The slack term
    // absorbs rounding in J once the predicted decrease nears machine precision.
    const Vector dm = (X * pw).array() + pb;
    const double slope = gw.dot(pw) + gb * pb;
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(J));
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vector w_try = w + t * pw;
      const Vector m_try = margins + t * dm;
      const double J_try = objective_from_margins(w_try, m_try, s, C);
      if (J_try <= J + 1e-4 * t * slope + slack) {
        w = w_try;
        b += t * pb;
        margins = m_try;
        J = J_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NumericalError(fmt::format(
          "logistic regression (C={}) line search failed at iteration {}: |grad|={:.3e}", C, iter, gnorm));
    }
  }

  model.weights = std::move(w);
  model.intercept = b;
  return model;
}

Vector decision_function(const LogisticModel& model, const MatrixRef& X) {
  if (X.cols() != model.weights.size())
    throw InputError(fmt::format("X has {} columns, model expects {}", X.cols(), model.weights.size()));
  return (X * model.weights).array() + model.intercept;
}

Vector predict_proba(const LogisticModel& model, const MatrixRef& X) {
  return decision_function(model, X).unaryExpr([](double m) { return sigmoid(m); });
}

double log_loss(const LogisticModel& model, const MatrixRef& X, std::span<const int> y) {
  const Vector margins = decision_function(model, X);
  const Vector s = signs_of(y);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-s[i] * margins[i]);
  return loss / static_cast<double>(margins.size());
}

RidgeSolver::RidgeSolver(const MatrixRef& X) {
  if (X.rows() < 2) throw InputError("ridge regression needs at least 2 samples");
  if (!X.allFinite()) throw InputError("X contains non-finite values");
  column_means_ = X.colwise().mean().transpose();
  centered_ = X.rowwise() - column_means_.transpose();
  kernel_form_ = X.cols() > X.rows();
  if (kernel_form_) {
    gram_ = centered_ * centered_.transpose();
  } else {
    gram_ = centered_.transpose() * centered_;
  }
}

RidgeSolver::Fit RidgeSolver::solve(const MatrixRef& Y, double alpha) const {
  if (Y.rows() != centered_.rows())
    throw InputError(fmt::format("Y has {} rows, X has {}", Y.rows(), centered_.rows()));
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw InputError(fmt::format("alpha must be finite and nonnegative, got {}", alpha));
  if (!Y.allFinite()) throw InputError("ridge targets contain non-finite values");

  const Vector y_means = Y.colwise().mean().transpose();
  const Matrix Yc = Y.rowwise() - y_means.transpose();

  Matrix A = gram_;
  A.diagonal().array() += alpha;
  const Eigen::LLT<Matrix> llt(A);
  const bool singular =
      llt.info() != Eigen::Success || (alpha == 0.0 && (kernel_form_ || llt.rcond() < 1e-12));
  if (singular) {
    throw NumericalError(fmt::format(
        "ridge normal equations are singular (alpha={}, n={}, d={}); use alpha > 0", alpha,
        centered_.rows(), centered_.cols()));
  }

  Fit fit;
  if (kernel_form_) {
    fit.weights = centered_.transpose() * llt.solve(Yc);
  } else {
    fit.weights = llt.solve(centered_.transpose() * Yc);
  }
  fit.intercepts = y_means - fit.weights.transpose() * column_means_;
  return fit;
}

RidgeModel fit_ridge(const MatrixRef& X, const VectorRef& y, double alpha) {
  if (X.rows() != y.size())
    throw InputError(fmt::format("X has {} rows but y has {} values", X.rows(), y.size()));
  const RidgeSolver solver(X);
  auto fit = solver.solve(y, alpha);
  RidgeModel model;
  model.weights = fit.weights.col(0);
  model.intercept = fit.intercepts[0];
  model.alpha = alpha;
  return model;
}

Vector predict_ridge(const RidgeModel& model, const MatrixRef& X) {
  if (X.cols() != model.weights.size())
    throw InputError(fmt::format("X has {} columns, model expects {}", X.cols(), model.weights.size()));
  return (X * model.weights).array() + model.intercept;
}

}  // namespace emprobe
