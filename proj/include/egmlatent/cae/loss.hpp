#pragma once

#include "egmlatent/core/tensor.hpp"

namespace egmlatent::cae {

struct LossValue {
  double value = 0.0;
  Tensor grad;  // d(value)/d(prediction), same shape as the prediction
};

/// Mean over all elements of (target - prediction)^2, accumulated in double.
double loss_mse(const Tensor& target, const Tensor& prediction);
LossValue loss_mse_grad(const Tensor& target, const Tensor& prediction);

/// MSE plus an activity-weighted absolute error term:
///   (lambda / N) * sum(w_i |y_i - yhat_i|) / (sum(w_i) + eta),  w_i = max(0, |y_i| - tau).
/// The subgradient of |.| at 0 is taken as 0.
double loss_regmse(const Tensor& target, const Tensor& prediction, double lambda_reg, double tau,
                   double eta);
LossValue loss_regmse_grad(const Tensor& target, const Tensor& prediction, double lambda_reg,
                           double tau, double eta);

}  // namespace egmlatent::cae
