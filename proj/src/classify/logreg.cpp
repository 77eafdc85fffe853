#include <Eigen/Dense>
#include <cmath>

#include "egmlatent/classify/models.hpp"
#include "egmlatent/core/error.hpp"
#include "internal.hpp"

namespace egmlatent::classify {

namespace {

constexpr double kGradTol = 1e-6;
constexpr std::size_t kMaxIter = 10000;

}  // namespace

void detail::check_training_inputs(const Tensor& x, std::span<const std::uint8_t> y, const char* what) {
  if (x.rank() != 2 || x.dim(0) != y.size()) {
    throw Error(ErrorKind::Dimension, std::string(what) + ": features " + shape_string(x.shape()) + " with " +
                                          std::to_string(y.size()) + " labels");
  }
  std::size_t pos = 0;
  for (auto v : y) pos += v ? 1 : 0;
  if (pos == 0 || pos == y.size()) {
    throw Error(ErrorKind::TaskInfeasible, std::string(what) + " needs both classes in the training labels");
  }
}

LogisticModel logreg_train(const Tensor& xt, std::span<const std::uint8_t> y, double C) {
  detail::check_training_inputs(xt, y, "logistic regression");
  if (!(C > 0.0)) throw Error(ErrorKind::Configuration, "logistic regression needs C > 0");
  const std::size_t n = xt.dim(0), d = xt.dim(1);
  // Design matrix with a trailing column of ones for the bias.
  Eigen::MatrixXd x(n, d + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = xt.data()[i * d + j];
    x(i, d) = 1.0;
  }
  Eigen::VectorXd yv(n);
  for (std::size_t i = 0; i < n; ++i) yv[i] = y[i] ? 1.0 : 0.0;

  auto objective = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd z = x * theta;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += detail::softplus(z[i]) - yv[i] * z[i];
    return 0.5 * theta.head(d).squaredNorm() + C * loss;
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  double f = objective(theta);
  LogisticModel m;
  m.C = C;
  for (; m.iterations < kMaxIter; ++m.iterations) {
    const Eigen::VectorXd z = x * theta;
    Eigen::VectorXd p(n), wdiag(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = detail::sigmoid(z[i]);
      wdiag[i] = p[i] * (1.0 - p[i]);
    }
    Eigen::VectorXd grad = C * (x.transpose() * (p - yv));
    grad.head(d) += theta.head(d);
    m.gradient_norm = grad.norm();
    if (m.gradient_norm < kGradTol) break;
    Eigen::MatrixXd hess = C * (x.transpose() * wdiag.asDiagonal() * x);
    hess.topLeftCorner(d, d).diagonal().array() += 1.0;
    // A tiny ridge on the bias keeps the solve defined when every p saturates.
    hess(d, d) += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double slope = grad.dot(step);
    double t = 1.0, f_new = objective(theta + step);
    while (f_new > f + 1e-4 * t * slope && t > 1e-10) {
      t *= 0.5;
      f_new = objective(theta + t * step);
    }
    if (!(f_new <= f)) break;  // no descent possible at working precision
    theta += t * step;
    f = f_new;
  }
  m.weights.assign(theta.data(), theta.data() + d);
  m.bias = theta[d];
  return m;
}

double logreg_proba(const LogisticModel& m, std::span<const float> x) {
  if (x.size() != m.weights.size()) throw Error(ErrorKind::Dimension, "logistic model feature count mismatch");
  double z = m.bias;
  for (std::size_t j = 0; j < x.size(); ++j) z += m.weights[j] * x[j];
  return detail::sigmoid(z);
}

}  // namespace egmlatent::classify
