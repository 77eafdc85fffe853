#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "egmlatent/cae/model.hpp"

namespace egmlatent::cae {

struct EpochReport {
  std::size_t epoch = 0;  // from 1
  double train_loss = 0.0;  // mean per-element MSE over the epoch's train-mode batches
  double val_loss = 0.0;    // eval-mode MSE on the validation split
};

struct TrainResult {
  CaeModel model;  // weights of the best validation epoch
  std::vector<EpochReport> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochReport&)>;

/// Batches in seeded order; a trailing batch of one sample is merged into
/// the previous batch because train-mode batchnorm needs two samples.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size, Rng& rng);

/// Rows [indices] of an N x H x W tensor as an image batch N' x 1 x H x W.
Tensor gather_batch(const Tensor& data, const std::vector<std::size_t>& indices);

/// Eval-mode MSE over a dataset, evaluated in chunks of `chunk` rows.
double evaluate_mse(const CaeModel& model, const Tensor& data, std::size_t chunk = 128);

/// Trains from a fresh seeded initialization. train/val: N x H x W segments
/// in [-1, 1]. A non-finite loss or gradient is a divergence error naming the
/// epoch and batch.
TrainResult train_cae(const CaeConfig& config, const Tensor& train, const Tensor& val,
                      std::uint64_t seed, const EpochCallback& on_epoch = {});

/// N x latent_dim embeddings, row order preserved.
Tensor embed(const CaeModel& model, const Tensor& data, std::size_t chunk = 128);

}  // namespace egmlatent::cae
