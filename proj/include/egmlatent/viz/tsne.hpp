#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "egmlatent/core/tensor.hpp"

namespace egmlatent::viz {

struct TsneConfig {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double momentum_initial = 0.5, momentum_final = 0.8;
  std::size_t momentum_switch = 250;
  std::uint64_t seed = 0;

  /// Configuration error unless N >= 5, perplexity < (N - 1) / 3 and iterations >= 250.
  void validate(std::size_t n) const;
};

nlohmann::json tsne_config_to_json(const TsneConfig& c);

struct Projection2D {
  Tensor coords;  // N x 2
  std::vector<double> kl_history;  // KL(P || Q) after each iteration, unexaggerated P
};

/// Row-stochastic conditional affinities P_{j|i} (N x N, zero diagonal) with
/// each row's Gaussian precision found by bisection on the entropy.
struct ConditionalAffinities {
  std::size_t n = 0;
  std::vector<double> p;        // row-major N x N
  std::vector<double> beta;     // 1 / (2 sigma_i^2)
  std::vector<double> entropy;  // achieved entropy per row, nats
};

/// x: row-major N x D doubles.
ConditionalAffinities conditional_affinities(std::span<const double> x, std::size_t n, std::size_t d,
                                             double perplexity);
ConditionalAffinities conditional_affinities(const Tensor& x, double perplexity);
/// (P_{j|i} + P_{i|j}) / 2N.
std::vector<double> joint_affinities(const ConditionalAffinities& c);

Projection2D tsne(const Tensor& x, const TsneConfig& config);

}  // namespace egmlatent::viz
