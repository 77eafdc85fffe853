#include "egmlatent/core/layers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "egmlatent/core/error.hpp"
#include "reduce.hpp"

namespace egmlatent {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

struct ImageDims {
  std::size_t n, c, h, w;
};

ImageDims image_dims(const Tensor& t, const char* what) {
  if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
  if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2)};
  throw Error(ErrorKind::Dimension,
              std::string(what) + " expects a rank-3 or rank-4 tensor, got " +
                  shape_string(t.shape()));
}

void require_same_size(const Tensor& a, const Tensor& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::Dimension, std::string(what) + ": " + shape_string(a.shape()) +
                                          " vs " + shape_string(b.shape()));
  }
}

// Largest float strictly below 1.
constexpr float kTanhBound = 1.0f - std::numeric_limits<float>::epsilon() / 2.0f;

}  // namespace

// ---------------------------------------------------------------- pooling

std::size_t pooled_extent(std::size_t extent) noexcept {
  return std::max<std::size_t>(1, extent / 2);
}

PoolRecord maxpool2d(const Tensor& input) {
  const auto d = image_dims(input, "maxpool2d");
  if (d.h == 0 || d.w == 0) throw Error(ErrorKind::Dimension, "maxpool2d on empty plane");
  if (input.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::Dimension, "maxpool2d input too large for 32-bit indices");
  }
  const std::size_t ho = pooled_extent(d.h);
  const std::size_t wo = pooled_extent(d.w);

  PoolRecord record;
  record.input_shape = input.shape();
  record.output = Tensor(input.rank() == 4 ? Shape{d.n, d.c, ho, wo} : Shape{d.c, ho, wo});
  record.argmax_indices.resize(record.output.size());

  std::size_t cell = 0;
  for (std::size_t plane = 0; plane < d.n * d.c; ++plane) {
    const std::size_t base = plane * d.h * d.w;
    for (std::size_t oh = 0; oh < ho; ++oh) {
      const std::size_t r0 = 2 * oh;
      const std::size_t r1 = oh + 1 == ho ? d.h : r0 + 2;
      for (std::size_t ow = 0; ow < wo; ++ow, ++cell) {
        const std::size_t c0 = 2 * ow;
        const std::size_t c1 = ow + 1 == wo ? d.w : c0 + 2;
        std::size_t best = base + r0 * d.w + c0;
        float best_value = input[best];
        // Row-major scan with strict '>' keeps the lowest flat index on ties.
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            const std::size_t idx = base + r * d.w + c;
            if (input[idx] > best_value) {
              best_value = input[idx];
              best = idx;
            }
          }
        }
        record.output[cell] = best_value;
        record.argmax_indices[cell] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return record;
}

Tensor maxunpool2d(const Tensor& input, const PoolRecord& record) {
  if (input.shape() != record.output.shape()) {
    throw Error(ErrorKind::Dimension, "maxunpool2d input " + shape_string(input.shape()) +
                                          " does not match pooled shape " +
                                          shape_string(record.output.shape()));
  }
  Tensor out(record.input_shape);
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::size_t idx = record.argmax_indices[i];
    if (idx >= out.size()) {
      throw Error(ErrorKind::Corruption, "pool index " + std::to_string(idx) +
                                             " out of bounds for " +
                                             shape_string(record.input_shape));
    }
    out[idx] = input[i];
  }
  return out;
}

Tensor maxpool2d_backward(const Tensor& grad_output, const PoolRecord& record) {
  return maxunpool2d(grad_output, record);
}

Tensor maxunpool2d_backward(const Tensor& grad_output, const PoolRecord& record) {
  if (grad_output.shape() != record.input_shape) {
    throw Error(ErrorKind::Dimension, "maxunpool2d_backward grad " +
                                          shape_string(grad_output.shape()) + " vs " +
                                          shape_string(record.input_shape));
  }
  Tensor grad_input(record.output.shape());
  for (std::size_t i = 0; i < grad_input.size(); ++i) {
    grad_input[i] = grad_output[record.argmax_indices[i]];
  }
  return grad_input;
}

// ------------------------------------------------------------- batch norm

BatchNormState::BatchNormState(std::size_t channels)
    : running_mean(Shape{channels}, 0.0f), running_var(Shape{channels}, 1.0f) {}

namespace {

// Every batchnorm path goes through this loop so that results never depend
// on which code path or buffer alignment produced them.
void bn_affine(const float* x, float* y, float* normalized, std::size_t count, float mean, float istd, float g,
               float b) {
  if (normalized) {
    for (std::size_t i = 0; i < count; ++i) {
      normalized[i] = (x[i] - mean) * istd;
      y[i] = std::fma(g, normalized[i], b);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) y[i] = std::fma(g, (x[i] - mean) * istd, b);
  }
}

}  // namespace

Tensor batchnorm(const Tensor& input, const Parameter& gamma, const Parameter& beta,
                 BatchNormState& state, Mode mode, BatchNormCache* cache) {
  if (input.rank() != 4) {
    throw Error(ErrorKind::Dimension, "batchnorm expects N x C x H x W, got " +
                                          shape_string(input.shape()));
  }
  const std::size_t n = input.dim(0), c = input.dim(1);
  const std::size_t plane = input.dim(2) * input.dim(3);
  if (gamma.value.size() != c || beta.value.size() != c || state.running_mean.size() != c ||
      state.running_var.size() != c) {
    throw Error(ErrorKind::Dimension, "batchnorm parameters do not match " +
                                          std::to_string(c) + " channels");
  }
  if (mode == Mode::Train && n < 2) {
    throw Error(ErrorKind::DegenerateBatch, "train-mode batchnorm needs at least 2 samples");
  }

  Tensor out(input.shape());
  Tensor normalized(cache ? input.shape() : Shape{});
  std::vector<float> inv_std(c);
  const double count = static_cast<double>(n * plane);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        sum += detail::sum(input.data() + (s * c + ch) * plane, plane);
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        sq += detail::sum_sq_dev(input.data() + (s * c + ch) * plane, plane, mean);
      }
      var = sq / count;
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      const double m = state.momentum;
      state.running_mean[ch] = static_cast<float>((1 - m) * state.running_mean[ch] + m * mean);
      state.running_var[ch] = static_cast<float>((1 - m) * state.running_var[ch] + m * unbiased);
    } else {
      mean = state.running_mean[ch];
      var = state.running_var[ch];
    }
    const float istd = static_cast<float>(1.0 / std::sqrt(var + state.epsilon));
    const float fmean = static_cast<float>(mean);
    inv_std[ch] = istd;
    const float g = gamma.value[ch], b = beta.value[ch];
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t off = (s * c + ch) * plane;
      bn_affine(input.data() + off, out.data() + off, cache ? normalized.data() + off : nullptr, plane, fmean,
                istd, g, b);
    }
  }
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
    cache->mode = mode;
  }
  return out;
}

Tensor batchnorm_relu_pool_eval(Tensor x, const Parameter& gamma, const Parameter& beta,
                                const BatchNormState& state) {
  if (x.rank() != 4) throw Error(ErrorKind::Dimension, "batchnorm_relu_pool_eval expects N x C x H x W");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma.value.size() != c || beta.value.size() != c || state.running_mean.size() != c ||
      state.running_var.size() != c) {
    throw Error(ErrorKind::Dimension, "batchnorm parameters do not match " + std::to_string(c) + " channels");
  }
  if (h == 0 || w == 0) throw Error(ErrorKind::Dimension, "maxpool2d on empty plane");
  const std::size_t plane = h * w, ho = pooled_extent(h), wo = pooled_extent(w);
  Tensor out(Shape{n, c, ho, wo});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double mean = state.running_mean[ch], var = state.running_var[ch];
    const float istd = static_cast<float>(1.0 / std::sqrt(var + state.epsilon));
    for (std::size_t s = 0; s < n; ++s) {
      float* p = x.data() + (s * c + ch) * plane;
      bn_affine(p, p, nullptr, plane, static_cast<float>(mean), istd, gamma.value[ch], beta.value[ch]);
      float* o = out.data() + (s * c + ch) * ho * wo;
      // relu(max(window)) == max(relu(window)), so the clamp is applied once per cell.
      for (std::size_t oh = 0; oh < ho; ++oh) {
        const std::size_t r0 = 2 * oh, r1 = oh + 1 == ho ? h : std::min(h, r0 + 2);
        float* orow = o + oh * wo;
        // Column pairs first, with the clamp as the initial maximum.
        const std::size_t full = (w >= 2 ? wo - 1 : 0);
        for (std::size_t ow = 0; ow < full; ++ow) orow[ow] = 0.0f;
        for (std::size_t r = r0; r < r1; ++r) {
          const float* row = p + r * w;
          for (std::size_t ow = 0; ow < full; ++ow) {
            orow[ow] = std::max(orow[ow], std::max(row[2 * ow], row[2 * ow + 1]));
          }
        }
        const std::size_t c0 = 2 * (wo - 1);
        float best = p[r0 * w + c0];
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t cc = c0; cc < w; ++cc) best = std::max(best, p[r * w + cc]);
        orow[wo - 1] = best > 0.0f ? best : 0.0f;
      }
    }
  }
  return out;
}

Tensor batchnorm_backward(const Tensor& grad_output, const BatchNormCache& cache,
                          Parameter& gamma, Parameter& beta) {
  const Tensor& xh = cache.normalized;
  require_same_size(grad_output, xh, "batchnorm_backward");
  const std::size_t n = xh.dim(0), c = xh.dim(1);
  const std::size_t plane = xh.dim(2) * xh.dim(3);
  const double count = static_cast<double>(n * plane);

  Tensor grad_input(xh.shape());
  using ConstArr = Eigen::Map<const Eigen::ArrayXf>;
  using Arr = Eigen::Map<Eigen::ArrayXf>;
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t off = (s * c + ch) * plane;
      sum_dy += detail::sum(grad_output.data() + off, plane);
      sum_dy_xh += detail::dot(grad_output.data() + off, xh.data() + off, plane);
    }
    gamma.grad[ch] += static_cast<float>(sum_dy_xh);
    beta.grad[ch] += static_cast<float>(sum_dy);
    const float scale = gamma.value[ch] * cache.inv_std[ch];
    const float mean_dy = static_cast<float>(sum_dy / count);
    const float mean_dy_xh = static_cast<float>(sum_dy_xh / count);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t off = (s * c + ch) * plane;
      ConstArr dy(grad_output.data() + off, plane), x(xh.data() + off, plane);
      Arr dx(grad_input.data() + off, plane);
      if (cache.mode == Mode::Eval) {
        dx = scale * dy;
      } else {
        dx = scale * (dy - mean_dy - x * mean_dy_xh);
      }
    }
  }
  return grad_input;
}

// ---------------------------------------------------------------- dropout

Tensor dropout(const Tensor& input, float p, Mode mode, Rng& rng, DropoutMask* mask) {
  if (!(p >= 0.0f && p < 1.0f)) {
    throw Error(ErrorKind::Configuration, "dropout probability must be in [0, 1)");
  }
  if (mode == Mode::Eval || p == 0.0f) {
    if (mask) *mask = DropoutMask{};
    return input;
  }
  DropoutMask local;
  DropoutMask& m = mask ? *mask : local;
  m.scale = 1.0f / (1.0f - p);
  m.keep.resize(input.size());
  // Each 64-bit draw decides four elements from 16-bit slices.
  const std::uint32_t keep_below = static_cast<std::uint32_t>(std::lround((1.0 - double(p)) * 65536.0));
  Tensor out(input.shape());
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (i % 4 == 0) bits = rng.next_u64();
    const bool keep = (bits & 0xFFFFu) < keep_below;
    bits >>= 16;
    m.keep[i] = keep ? 1 : 0;
    out[i] = keep ? input[i] * m.scale : 0.0f;
  }
  return out;
}

Tensor dropout_backward(const Tensor& grad_output, const DropoutMask& mask) {
  if (mask.keep.empty()) return grad_output;
  if (mask.keep.size() != grad_output.size()) {
    throw Error(ErrorKind::Dimension, "dropout mask does not match gradient");
  }
  Tensor grad_input(grad_output.shape());
  for (std::size_t i = 0; i < grad_output.size(); ++i) {
    grad_input[i] = mask.keep[i] ? grad_output[i] * mask.scale : 0.0f;
  }
  return grad_input;
}

// -------------------------------------------------------- fully connected

Tensor fully_connected(const Tensor& input, const Parameter& weights, const Parameter& bias) {
  if (input.rank() != 2 || weights.value.rank() != 2 || input.dim(1) != weights.value.dim(0)) {
    throw Error(ErrorKind::Dimension, "fully_connected " + shape_string(input.shape()) + " x " +
                                          shape_string(weights.value.shape()));
  }
  const std::size_t n = input.dim(0), d = input.dim(1), l = weights.value.dim(1);
  if (bias.value.size() != l) throw Error(ErrorKind::Dimension, "fully_connected bias size");
  // Row by row in a fixed order, so a row's output does not depend on what
  // else is in the batch (a GEMM picks its blocking from the batch size).
  Tensor out(Shape{n, l});
  const float* w = weights.value.data();
  for (std::size_t r = 0; r < n; ++r) {
    float* y = out.data() + r * l;
    const float* x = input.data() + r * d;
    for (std::size_t k = 0; k < d; ++k) {
      const float xv = x[k];
      const float* wk = w + k * l;
      for (std::size_t j = 0; j < l; ++j) y[j] += xv * wk[j];
    }
    for (std::size_t j = 0; j < l; ++j) y[j] += bias.value[j];
  }
  return out;
}

Tensor fully_connected_backward(const Tensor& grad_output, const Tensor& input,
                                Parameter& weights, Parameter& bias) {
  const std::size_t n = input.dim(0), d = input.dim(1), l = weights.value.dim(1);
  if (grad_output.rank() != 2 || grad_output.dim(0) != n || grad_output.dim(1) != l) {
    throw Error(ErrorKind::Dimension, "fully_connected_backward grad " +
                                          shape_string(grad_output.shape()));
  }
  ConstMatMap dy(grad_output.data(), n, l);
  ConstMatMap x(input.data(), n, d);
  MatMap(weights.grad.data(), d, l).noalias() += x.transpose() * dy;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < l; ++j) bias.grad[j] += dy(r, j);
  }
  Tensor grad_input(input.shape());
  MatMap(grad_input.data(), n, d).noalias() =
      dy * ConstMatMap(weights.value.data(), d, l).transpose();
  return grad_input;
}

// ------------------------------------------------------------ activations

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0f ? input[i] : 0.0f;
  return out;
}

Tensor relu_backward(const Tensor& grad_output, const Tensor& output) {
  require_same_size(grad_output, output, "relu_backward");
  Tensor grad_input(grad_output.shape());
  for (std::size_t i = 0; i < output.size(); ++i) {
    grad_input[i] = output[i] > 0.0f ? grad_output[i] : 0.0f;
  }
  return grad_input;
}

Tensor tanh_act(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = std::clamp(std::tanh(input[i]), -kTanhBound, kTanhBound);
  }
  return out;
}

Tensor tanh_backward(const Tensor& grad_output, const Tensor& output) {
  require_same_size(grad_output, output, "tanh_backward");
  Tensor grad_input(grad_output.shape());
  for (std::size_t i = 0; i < output.size(); ++i) {
    grad_input[i] = grad_output[i] * (1.0f - output[i] * output[i]);
  }
  return grad_input;
}

}  // namespace egmlatent
