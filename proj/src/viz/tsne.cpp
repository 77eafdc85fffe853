#include "egmlatent/viz/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/parallel.hpp"
#include "egmlatent/core/rng.hpp"

namespace egmlatent::viz {

namespace {

constexpr int kSigmaSearchSteps = 50;
constexpr double kEntropyTolerance = 1e-5;

double ordered_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

void TsneConfig::validate(std::size_t n) const {
  if (n < 5) throw Error(ErrorKind::Configuration, "t-SNE needs at least 5 points, got " + std::to_string(n));
  if (!(perplexity > 0.0) || !(perplexity < double(n - 1) / 3.0)) {
    throw Error(ErrorKind::Configuration, "perplexity " + std::to_string(perplexity) + " infeasible for " +
                                              std::to_string(n) + " points (needs < (N - 1) / 3)");
  }
  if (iterations < 250) throw Error(ErrorKind::Configuration, "t-SNE needs at least 250 iterations");
  if (!(learning_rate > 0.0) || !(exaggeration >= 1.0)) {
    throw Error(ErrorKind::Configuration, "t-SNE learning rate must be positive and exaggeration >= 1");
  }
}

nlohmann::json tsne_config_to_json(const TsneConfig& c) {
  return {{"perplexity", c.perplexity},
          {"iterations", c.iterations},
          {"learning_rate", c.learning_rate},
          {"exaggeration", c.exaggeration},
          {"exaggeration_iterations", c.exaggeration_iterations},
          {"momentum_initial", c.momentum_initial},
          {"momentum_final", c.momentum_final},
          {"momentum_switch", c.momentum_switch},
          {"seed", c.seed},
          {"method", "exact"}};
}

ConditionalAffinities conditional_affinities(std::span<const double> x, std::size_t n, std::size_t d,
                                             double perplexity) {
  if (x.size() != n * d) throw Error(ErrorKind::Dimension, "conditional_affinities: size mismatch");
  if (n < 2) throw Error(ErrorKind::DegenerateData, "affinities need at least two points");
  ConditionalAffinities out;
  out.n = n;
  out.p.assign(n * n, 0.0);
  out.beta.assign(n, 1.0);
  out.entropy.assign(n, 0.0);
  const double target = std::log(perplexity);

  parallel_for(n, [&](std::size_t i) {
    std::vector<double> dist(n, 0.0);
    double dmin = std::numeric_limits<double>::infinity(), dsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[i * d + k] - x[j * d + k];
        s += diff * diff;
      }
      dist[j] = s;
      dmin = std::min(dmin, s);
      dsum += s;
    }
    double* row = out.p.data() + i * n;
    // Distances are shifted by their minimum so the largest term is exp(0).
    auto evaluate = [&](double beta) {
      double z = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double shifted = dist[j] - dmin;
        row[j] = std::exp(-beta * shifted);
        z += row[j];
        weighted += shifted * row[j];
      }
      for (std::size_t j = 0; j < n; ++j) row[j] /= z;
      return std::log(z) + beta * weighted / z;
    };

    const double mean_dist = dsum / double(n - 1);
    double beta = mean_dist > 0.0 ? 1.0 / mean_dist : 1.0;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double h = evaluate(beta);
    for (int step = 1; step < kSigmaSearchSteps && std::abs(h - target) >= kEntropyTolerance; ++step) {
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
      h = evaluate(beta);
    }
    out.beta[i] = beta;
    out.entropy[i] = h;
  });
  return out;
}

ConditionalAffinities conditional_affinities(const Tensor& x, double perplexity) {
  if (x.rank() != 2) throw Error(ErrorKind::Dimension, "conditional_affinities expects N x D");
  std::vector<double> xd(x.values().begin(), x.values().end());
  return conditional_affinities(xd, x.dim(0), x.dim(1), perplexity);
}

std::vector<double> joint_affinities(const ConditionalAffinities& c) {
  const std::size_t n = c.n;
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = (c.p[i * n + j] + c.p[j * n + i]) / (2.0 * double(n));
  return p;
}

Projection2D tsne(const Tensor& x, const TsneConfig& config) {
  if (x.rank() != 2) throw Error(ErrorKind::Dimension, "tsne expects N x D embeddings");
  const std::size_t n = x.dim(0);
  config.validate(n);
  for (float v : x.values()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::DegenerateData, "tsne input has non-finite values");
  }
  const std::vector<double> p = joint_affinities(conditional_affinities(x, config.perplexity));

  Rng rng = Rng(config.seed).fork("tsne/init");
  std::vector<double> y(n * 2), update(n * 2, 0.0), gains(n * 2, 1.0), grad(n * 2);
  for (auto& v : y) v = 1e-4 * rng.normal();

  std::vector<double> num(n * n), row_z(n), row_kl(n);
  Projection2D out;
  out.kl_history.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const double exag = it < config.exaggeration_iterations ? config.exaggeration : 1.0;
    const double momentum = it < config.momentum_switch ? config.momentum_initial : config.momentum_final;

    parallel_for(n, [&](std::size_t i) {
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
          num[i * n + j] = 0.0;
          continue;
        }
        const double dx = y[2 * i] - y[2 * j], dy = y[2 * i + 1] - y[2 * j + 1];
        num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
        z += num[i * n + j];
      }
      row_z[i] = z;
    });
    const double z = ordered_sum(row_z);

    parallel_for(n, [&](std::size_t i) {
      double gx = 0.0, gy = 0.0, kl = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double pij = p[i * n + j];
        const double qij = num[i * n + j] / z;
        const double mult = (exag * std::max(pij, 1e-12) - qij) * num[i * n + j];
        gx += mult * (y[2 * i] - y[2 * j]);
        gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
        if (pij > 0.0) kl += pij * std::log(pij / std::max(qij, 1e-300));
      }
      grad[2 * i] = 4.0 * gx;
      grad[2 * i + 1] = 4.0 * gy;
      row_kl[i] = kl;
    });
    // Gibbs' inequality makes KL non-negative; only rounding can push it below zero.
    out.kl_history.push_back(std::max(0.0, ordered_sum(row_kl)));

    for (std::size_t k = 0; k < 2 * n; ++k) {
      gains[k] = (grad[k] > 0.0) != (update[k] > 0.0) ? gains[k] + 0.2 : gains[k] * 0.8;
      gains[k] = std::max(gains[k], 0.01);
      update[k] = momentum * update[k] - config.learning_rate * gains[k] * grad[k];
      y[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= double(n);
    my /= double(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
  }

  out.coords = Tensor(Shape{n, 2});
  for (std::size_t k = 0; k < 2 * n; ++k) {
    if (!std::isfinite(y[k])) throw Error(ErrorKind::Divergence, "t-SNE layout became non-finite");
    out.coords[k] = float(y[k]);
  }
  return out;
}

}  // namespace egmlatent::viz
