#include "egmlatent/cae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "egmlatent/cae/early_stopping.hpp"
#include "egmlatent/cae/loss.hpp"
#include "egmlatent/core/adam.hpp"
#include "egmlatent/core/error.hpp"

namespace egmlatent::cae {

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t count, std::size_t batch_size, Rng& rng) {
  const auto order = permutation(count, rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; i += batch_size) {
    out.emplace_back(order.begin() + i, order.begin() + std::min(count, i + batch_size));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

Tensor gather_batch(const Tensor& data, const std::vector<std::size_t>& indices) {
  const std::size_t h = data.dim(1), w = data.dim(2), row = h * w;
  Tensor out(Shape{indices.size(), 1, h, w});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= data.dim(0)) throw Error(ErrorKind::Dimension, "batch index out of range");
    std::copy(data.data() + indices[i] * row, data.data() + (indices[i] + 1) * row, out.data() + i * row);
  }
  return out;
}

namespace {

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v(hi - lo);
  for (std::size_t i = lo; i < hi; ++i) v[i - lo] = i;
  return v;
}

void require_segments(const Tensor& data, const CaeConfig& c, const char* what) {
  if (data.rank() != 3 || data.dim(1) != c.input_height() || data.dim(2) != c.input_width()) {
    throw Error(ErrorKind::Dimension, std::string(what) + " segments must be N x " +
                                          std::to_string(c.input_height()) + " x 250, got " +
                                          shape_string(data.shape()));
  }
}

}  // namespace

double evaluate_mse(const CaeModel& model, const Tensor& data, std::size_t chunk) {
  double sum = 0.0;
  const std::size_t n = data.dim(0);
  for (std::size_t i = 0; i < n; i += chunk) {
    const Tensor x = gather_batch(data, range(i, std::min(n, i + chunk)));
    sum += loss_mse(x, model.reconstruct(x)) * double(x.size());
  }
  return sum / double(data.size());
}

Tensor embed(const CaeModel& model, const Tensor& data, std::size_t chunk) {
  require_segments(data, model.config(), "embedding");
  const std::size_t n = data.dim(0), d = model.config().latent_dim;
  Tensor out(Shape{n, d});
  for (std::size_t i = 0; i < n; i += chunk) {
    const Tensor z = model.encode(gather_batch(data, range(i, std::min(n, i + chunk))));
    std::copy(z.values().begin(), z.values().end(), out.data() + i * d);
  }
  return out;
}

TrainResult train_cae(const CaeConfig& config, const Tensor& train, const Tensor& val,
                      std::uint64_t seed, const EpochCallback& on_epoch) {
  config.validate();
  require_segments(train, config, "training");
  require_segments(val, config, "validation");
  if (train.dim(0) < 2) throw Error(ErrorKind::DegenerateBatch, "need at least 2 training segments");
  if (val.dim(0) < 1) throw Error(ErrorKind::DegenerateData, "validation split is empty");

  const Rng root(seed);
  Rng init_rng = root.fork("init");
  CaeModel model(config, init_rng);
  const AdamOptions adam{config.learning_rate};
  std::vector<Parameter*> params = model.parameters();
  std::vector<AdamState> adam_states;
  for (Parameter* p : params) adam_states.emplace_back(p->value.shape(), adam);

  EarlyStopping stopper(config.patience, config.min_delta);
  TrainResult result{model, {}, 0, 0.0, false};

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng = root.fork("shuffle/" + std::to_string(epoch));
    Rng dropout_rng = root.fork("dropout/" + std::to_string(epoch));
    const auto batches = epoch_batches(train.dim(0), config.batch_size, shuffle_rng);
    double mse_sum = 0.0;
    std::size_t elements = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Tensor x = gather_batch(train, batches[b]);
      model.zero_grad();
      ForwardTrace trace = model.forward(x, Mode::Train, dropout_rng);
      const LossValue loss = config.loss == LossKind::Mse
                                 ? loss_mse_grad(x, trace.reconstruction)
                                 : loss_regmse_grad(x, trace.reconstruction, config.lambda_reg, config.tau, config.eta);
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b + 1);
      if (!std::isfinite(loss.value)) throw Error(ErrorKind::Divergence, "non-finite loss at " + where);
      mse_sum += loss_mse(x, trace.reconstruction) * double(x.size());
      elements += x.size();
      model.backward(trace, loss.grad);
      try {
        for (std::size_t i = 0; i < params.size(); ++i) adam_step(*params[i], adam_states[i]);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Divergence) throw;
        throw Error(ErrorKind::Divergence, std::string(e.what()) + " at " + where);
      }
    }
    EpochReport report{epoch, mse_sum / double(elements), evaluate_mse(model, val)};
    if (!std::isfinite(report.val_loss)) {
      throw Error(ErrorKind::Divergence, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(report);
    if (on_epoch) on_epoch(report);
    const auto decision = stopper.observe(report.val_loss);
    if (decision.new_best) result.model = model;
    if (decision.stop) {
      result.stopped_early = true;
      break;
    }
  }
  result.best_epoch = stopper.best_epoch();
  result.best_val_loss = stopper.best_loss();
  return result;
}

}  // namespace egmlatent::cae
