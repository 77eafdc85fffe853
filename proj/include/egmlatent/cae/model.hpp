#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "egmlatent/cae/config.hpp"
#include "egmlatent/core/layers.hpp"
#include "egmlatent/core/rng.hpp"

namespace egmlatent::cae {

struct EncoderBlock {
  Parameter conv_w, conv_b, bn_gamma, bn_beta;
  BatchNormState bn;
};

struct DecoderBlock {
  Parameter convt_w, convt_b, bn_gamma, bn_beta;
  BatchNormState bn;
};

/// Everything backward() needs from one forward pass.
struct ForwardTrace {
  struct Encoder {
    Tensor conv_in;
    BatchNormCache bn;
    Tensor relu_out;
    PoolRecord pool;
    DropoutMask drop;
  };
  struct Decoder {
    Tensor convt_in;
    BatchNormCache bn;
    Tensor relu_out;
    DropoutMask drop;
  };
  Mode mode = Mode::Eval;
  std::vector<Encoder> encoder;
  Tensor fc_in;   // N x flatten
  Tensor latent;  // N x latent_dim
  std::vector<Decoder> decoder;  // in decoder order (deepest block first)
  Tensor out_in;
  Tensor reconstruction;  // N x 1 x H x W
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

class CaeModel {
 public:
  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases,
  /// batchnorm gamma 1 and beta 0.
  CaeModel(const CaeConfig& config, Rng& init_rng);

  const CaeConfig& config() const noexcept { return config_; }
  std::size_t flatten_size() const noexcept;
  /// Spatial shape entering encoder block b (b = conv_blocks gives the bottleneck).
  std::array<std::size_t, 2> stage_shape(std::size_t block) const;

  /// batch: N x 1 x H x W (or N x H x W). Train mode draws dropout masks from rng
  /// and updates batchnorm running statistics.
  ForwardTrace forward(const Tensor& batch, Mode mode, Rng& rng);
  /// Accumulates parameter gradients for d(loss)/d(reconstruction).
  void backward(const ForwardTrace& trace, const Tensor& grad_reconstruction);

  /// Eval-mode encoder only: N x latent_dim.
  Tensor encode(const Tensor& batch) const;
  /// Eval-mode full pass.
  Tensor reconstruct(const Tensor& batch) const;

  std::vector<Parameter*> parameters();
  /// Trainable values followed by batchnorm running statistics, in a fixed order.
  std::vector<NamedTensor> state();
  std::size_t parameter_count() const;
  void zero_grad();

 private:
  Tensor as_image_batch(const Tensor& batch) const;
  Tensor run_encoder(const Tensor& x, Mode mode, Rng& rng, ForwardTrace* trace);
  Tensor run_decoder(const Tensor& latent, ForwardTrace& trace, Mode mode, Rng& rng);

  CaeConfig config_;
  std::vector<EncoderBlock> enc_;
  Parameter enc_fc_w_, enc_fc_b_;
  Parameter dec_fc_w_, dec_fc_b_;
  std::vector<DecoderBlock> dec_;  // dec_[b] mirrors enc_[b]
  Parameter out_w_, out_b_;
};

}  // namespace egmlatent::cae
