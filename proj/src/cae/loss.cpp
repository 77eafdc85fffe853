#include "egmlatent/cae/loss.hpp"

#include <cmath>

#include "egmlatent/core/error.hpp"

namespace egmlatent::cae {

namespace {

void require_same(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorKind::Dimension, "loss shapes differ: " + shape_string(a.shape()) + " vs " +
                                          shape_string(b.shape()));
  }
  if (a.size() == 0) throw Error(ErrorKind::Dimension, "loss of an empty tensor");
}

struct Activity {
  double weighted_error = 0.0;
  double weight = 0.0;
};

Activity activity(const Tensor& y, const Tensor& yhat, double tau) {
  Activity a;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = std::max(0.0, std::abs(double(y[i])) - tau);
    a.weighted_error += w * std::abs(double(y[i]) - double(yhat[i]));
    a.weight += w;
  }
  return a;
}

void check_reg(double lambda_reg, double tau, double eta) {
  if (!(lambda_reg >= 0.0 && tau >= 0.0 && eta > 0.0)) {
    throw Error(ErrorKind::Configuration, "regmse needs lambda >= 0, tau >= 0, eta > 0");
  }
}

}  // namespace

double loss_mse(const Tensor& target, const Tensor& prediction) {
  require_same(target, prediction);
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = double(target[i]) - double(prediction[i]);
    sum += d * d;
  }
  return sum / double(target.size());
}

LossValue loss_mse_grad(const Tensor& target, const Tensor& prediction) {
  LossValue out{loss_mse(target, prediction), Tensor(prediction.shape())};
  const double scale = 2.0 / double(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    out.grad[i] = static_cast<float>(scale * (double(prediction[i]) - double(target[i])));
  }
  return out;
}

double loss_regmse(const Tensor& target, const Tensor& prediction, double lambda_reg, double tau,
                   double eta) {
  check_reg(lambda_reg, tau, eta);
  const double mse = loss_mse(target, prediction);
  if (lambda_reg == 0.0) return mse;
  const Activity a = activity(target, prediction, tau);
  return mse + lambda_reg / double(target.size()) * a.weighted_error / (a.weight + eta);
}

LossValue loss_regmse_grad(const Tensor& target, const Tensor& prediction, double lambda_reg,
                           double tau, double eta) {
  LossValue out = loss_mse_grad(target, prediction);
  check_reg(lambda_reg, tau, eta);
  if (lambda_reg == 0.0) return out;
  const Activity a = activity(target, prediction, tau);
  out.value += lambda_reg / double(target.size()) * a.weighted_error / (a.weight + eta);
  const double scale = lambda_reg / double(target.size()) / (a.weight + eta);
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double w = std::max(0.0, std::abs(double(target[i])) - tau);
    const double d = double(prediction[i]) - double(target[i]);
    if (w > 0.0 && d != 0.0) out.grad[i] += static_cast<float>(scale * w * (d > 0.0 ? 1.0 : -1.0));
  }
  return out;
}

}  // namespace egmlatent::cae
