#pragma once

// Forward and backward rules for the layers the autoencoder uses.
//
// Image tensors are N x C x H x W; a rank-3 C x H x W tensor is accepted as a
// batch of one and the result keeps the caller's rank. Backward functions
// accumulate into Parameter::grad and return the gradient for the input.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "egmlatent/core/rng.hpp"
#include "egmlatent/core/tensor.hpp"

namespace egmlatent {

enum class Mode { Train, Eval };

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// floor((in + 2*padding - kernel) / stride) + 1, or a configuration error
/// when that is not positive.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry geometry);

// Cross-correlation. kernels: C_out x C_in x k x k, bias: C_out.
Tensor conv2d(const Tensor& input, const Parameter& kernels, const Parameter& bias,
              ConvGeometry geometry);
Tensor conv2d_backward(const Tensor& grad_output, const Tensor& input, Parameter& kernels,
                       Parameter& bias, ConvGeometry geometry);

// Adjoint of conv2d with respect to its input. kernels: C_in x C_out x k x k
// (the layout of the conv2d it mirrors), bias: C_out. output_hw is the spatial
// shape of the mirrored encoder stage and must be consistent with the input.
Tensor conv_transpose2d(const Tensor& input, const Parameter& kernels, const Parameter& bias,
                        ConvGeometry geometry, std::array<std::size_t, 2> output_hw);
Tensor conv_transpose2d_backward(const Tensor& grad_output, const Tensor& input,
                                 Parameter& kernels, Parameter& bias, ConvGeometry geometry);

/// 2x2 max pooling with stride 2. Output extent is max(1, floor(n / 2)); the
/// last window along an axis absorbs a trailing odd row/column (and an axis
/// of extent 1 gets a clipped 1-wide window), so no input element is dropped.
struct PoolRecord {
  Tensor output;
  std::vector<std::uint32_t> argmax_indices;  // flat positions in the pre-pool tensor
  Shape input_shape;
};

std::size_t pooled_extent(std::size_t extent) noexcept;
PoolRecord maxpool2d(const Tensor& input);
Tensor maxpool2d_backward(const Tensor& grad_output, const PoolRecord& record);
Tensor maxunpool2d(const Tensor& input, const PoolRecord& record);
Tensor maxunpool2d_backward(const Tensor& grad_output, const PoolRecord& record);

struct BatchNormState {
  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels);

  Tensor running_mean;
  Tensor running_var;
  float momentum = 0.1f;
  float epsilon = 1e-5f;
};

struct BatchNormCache {
  Tensor normalized;
  std::vector<float> inv_std;
  Mode mode = Mode::Eval;
};

// Per-channel normalization over N*H*W. Train mode needs N >= 2 and updates
// the running statistics (unbiased variance, momentum weighting).
Tensor batchnorm(const Tensor& input, const Parameter& gamma, const Parameter& beta,
                 BatchNormState& state, Mode mode, BatchNormCache* cache = nullptr);
/// Eval-mode inference shortcut: maxpool2d(relu(batchnorm(x))) values without
/// pooling records. Consumes x as scratch.
Tensor batchnorm_relu_pool_eval(Tensor x, const Parameter& gamma, const Parameter& beta,
                                const BatchNormState& state);
Tensor batchnorm_backward(const Tensor& grad_output, const BatchNormCache& cache,
                          Parameter& gamma, Parameter& beta);

/// Inverted dropout mask. An empty keep vector means identity.
struct DropoutMask {
  std::vector<std::uint8_t> keep;
  float scale = 1.0f;
};

Tensor dropout(const Tensor& input, float p, Mode mode, Rng& rng, DropoutMask* mask = nullptr);
Tensor dropout_backward(const Tensor& grad_output, const DropoutMask& mask);

// input: N x D, weights: D x L, bias: L.
Tensor fully_connected(const Tensor& input, const Parameter& weights, const Parameter& bias);
Tensor fully_connected_backward(const Tensor& grad_output, const Tensor& input,
                                Parameter& weights, Parameter& bias);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& grad_output, const Tensor& output);

/// tanh clamped to the open interval (-1, 1); float tanh saturates to +-1
/// for |x| > ~9.
Tensor tanh_act(const Tensor& input);
Tensor tanh_backward(const Tensor& grad_output, const Tensor& output);

}  // namespace egmlatent
