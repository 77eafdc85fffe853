#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/layers.hpp"
#include "egmlatent/core/parallel.hpp"
#include "reduce.hpp"

namespace egmlatent {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

// Samples per gradient-accumulation chunk. Fixed so that the reduction order,
// and therefore every parameter gradient, does not depend on the worker count.
constexpr std::size_t kChunk = 8;

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

Shape image_shape(bool batched, std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  return batched ? Shape{n, c, h, w} : Shape{c, h, w};
}

std::size_t check_square_kernel(const Tensor& kernels) {
  if (kernels.rank() != 4 || kernels.dim(2) != kernels.dim(3)) {
    throw Error(ErrorKind::Dimension, "kernels must be rank 4 with square k x k, got " +
                                          shape_string(kernels.shape()));
  }
  const std::size_t k = kernels.dim(2);
  if (k % 2 == 0) throw Error(ErrorKind::Configuration, "kernel size must be odd");
  return k;
}

// Valid output columns [lo, hi) for kernel offset kj: 0 <= o*s - p + kj < extent.
std::pair<std::size_t, std::size_t> valid_range(std::size_t out, std::size_t extent,
                                                std::size_t offset, ConvGeometry g) {
  const std::size_t lo = g.padding > offset ? (g.padding - offset + g.stride - 1) / g.stride : 0;
  if (extent + g.padding <= offset) return {0, 0};
  const std::size_t hi = std::min(out, (extent + g.padding - offset + g.stride - 1) / g.stride);
  return {std::min(lo, hi), hi};
}

void im2col(const float* x, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            ConvGeometry g, std::size_t ho, std::size_t wo, float* col) {
  const std::size_t plane = ho * wo;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        float* dst = col + ((ch * k + ki) * k + kj) * plane;
        const auto [lo, hi] = valid_range(wo, w, kj, g);
        for (std::size_t oh = 0; oh < ho; ++oh) {
          float* row = dst + oh * wo;
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(row, row + wo, 0.0f);
            continue;
          }
          const float* src = x + (ch * h + static_cast<std::size_t>(ih)) * w;
          std::fill(row, row + lo, 0.0f);
          if (g.stride == 1) {
            std::copy(src + lo + kj - g.padding, src + hi + kj - g.padding, row + lo);
          } else {
            for (std::size_t ow = lo; ow < hi; ++ow) row[ow] = src[ow * g.stride + kj - g.padding];
          }
          std::fill(row + hi, row + wo, 0.0f);
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-adds columns back onto the image.
void col2im(const float* col, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            ConvGeometry g, std::size_t ho, std::size_t wo, float* x) {
  const std::size_t plane = ho * wo;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const float* src = col + ((ch * k + ki) * k + kj) * plane;
        const auto [lo, hi] = valid_range(wo, w, kj, g);
        for (std::size_t oh = 0; oh < ho; ++oh) {
          const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + ki) -
                                    static_cast<std::ptrdiff_t>(g.padding);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(h)) continue;
          float* dst = x + (ch * h + static_cast<std::size_t>(ih)) * w;
          const float* row = src + oh * wo;
          for (std::size_t ow = lo; ow < hi; ++ow) dst[ow * g.stride + kj - g.padding] += row[ow];
        }
      }
    }
  }
}

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

void check_bias(const Parameter& bias, std::size_t channels) {
  if (bias.value.size() != channels) {
    throw Error(ErrorKind::Dimension, "bias has " + std::to_string(bias.value.size()) +
                                          " entries, expected " + std::to_string(channels));
  }
}

}  // namespace

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, ConvGeometry g) {
  if (g.stride == 0) throw Error(ErrorKind::Configuration, "stride must be >= 1");
  const std::size_t padded = in + 2 * g.padding;
  if (padded < kernel) {
    throw Error(ErrorKind::Configuration, "kernel " + std::to_string(kernel) +
                                              " exceeds padded extent " + std::to_string(padded));
  }
  return (padded - kernel) / g.stride + 1;
}

Tensor conv2d(const Tensor& input, const Parameter& kernels, const Parameter& bias,
              ConvGeometry g) {
  const auto d = image_dims(input, "conv2d");
  const std::size_t k = check_square_kernel(kernels.value);
  if (kernels.value.dim(1) != d.c) {
    throw Error(ErrorKind::Dimension, "conv2d input has " + std::to_string(d.c) +
                                          " channels, kernels expect " +
                                          std::to_string(kernels.value.dim(1)));
  }
  const std::size_t cout = kernels.value.dim(0);
  check_bias(bias, cout);
  const std::size_t ho = conv_output_extent(d.h, k, g);
  const std::size_t wo = conv_output_extent(d.w, k, g);
  const std::size_t plane = ho * wo;
  const std::size_t patch = d.c * k * k;

  Tensor out(image_shape(input.rank() == 4, d.n, cout, ho, wo));
  ConstMatMap kmat(kernels.value.data(), cout, patch);
  parallel_for(chunk_count(d.n), [&](std::size_t chunk) {
    // Reused per thread: a fresh multi-megabyte buffer per call costs page faults.
    thread_local std::vector<float> scratch;
    scratch.resize(patch * plane);
    MatMap col(scratch.data(), patch, plane);
    const std::size_t end = std::min(d.n, (chunk + 1) * kChunk);
    for (std::size_t s = chunk * kChunk; s < end; ++s) {
      im2col(input.data() + s * d.c * d.h * d.w, d.c, d.h, d.w, k, g, ho, wo, col.data());
      MatMap y(out.data() + s * cout * plane, cout, plane);
      y.noalias() = kmat * col;
      for (std::size_t o = 0; o < cout; ++o) y.row(o).array() += bias.value[o];
    }
  });
  return out;
}

Tensor conv2d_backward(const Tensor& grad_output, const Tensor& input, Parameter& kernels,
                       Parameter& bias, ConvGeometry g) {
  const auto d = image_dims(input, "conv2d_backward");
  const std::size_t k = check_square_kernel(kernels.value);
  const std::size_t cout = kernels.value.dim(0);
  const std::size_t ho = conv_output_extent(d.h, k, g);
  const std::size_t wo = conv_output_extent(d.w, k, g);
  const std::size_t plane = ho * wo;
  const std::size_t patch = d.c * k * k;
  if (grad_output.size() != d.n * cout * plane) {
    throw Error(ErrorKind::Dimension, "conv2d grad_output " + shape_string(grad_output.shape()) +
                                          " does not match forward output");
  }

  Tensor grad_input(input.shape());
  ConstMatMap kmat(kernels.value.data(), cout, patch);
  const std::size_t chunks = chunk_count(d.n);
  std::vector<RowMat> dk(chunks);
  std::vector<Eigen::VectorXf> db(chunks);
  parallel_for(chunks, [&](std::size_t chunk) {
    RowMat col(patch, plane);
    RowMat dcol(patch, plane);
    dk[chunk] = RowMat::Zero(cout, patch);
    db[chunk] = Eigen::VectorXf::Zero(cout);
    const std::size_t end = std::min(d.n, (chunk + 1) * kChunk);
    for (std::size_t s = chunk * kChunk; s < end; ++s) {
      im2col(input.data() + s * d.c * d.h * d.w, d.c, d.h, d.w, k, g, ho, wo, col.data());
      ConstMatMap dy(grad_output.data() + s * cout * plane, cout, plane);
      dk[chunk].noalias() += dy * col.transpose();
      for (std::size_t o = 0; o < cout; ++o) db[chunk][o] += float(detail::sum(dy.row(o).data(), plane));
      dcol.noalias() = kmat.transpose() * dy;
      col2im(dcol.data(), d.c, d.h, d.w, k, g, ho, wo, grad_input.data() + s * d.c * d.h * d.w);
    }
  });
  MatMap kgrad(kernels.grad.data(), cout, patch);
  for (std::size_t c = 0; c < chunks; ++c) {
    kgrad += dk[c];
    for (std::size_t o = 0; o < cout; ++o) bias.grad[o] += db[c][o];
  }
  return grad_input;
}

Tensor conv_transpose2d(const Tensor& input, const Parameter& kernels, const Parameter& bias,
                        ConvGeometry g, std::array<std::size_t, 2> output_hw) {
  const auto d = image_dims(input, "conv_transpose2d");
  const std::size_t k = check_square_kernel(kernels.value);
  if (kernels.value.dim(0) != d.c) {
    throw Error(ErrorKind::Dimension, "conv_transpose2d input has " + std::to_string(d.c) +
                                          " channels, kernels expect " +
                                          std::to_string(kernels.value.dim(0)));
  }
  const std::size_t cout = kernels.value.dim(1);
  check_bias(bias, cout);
  const auto [oh, ow] = output_hw;
  if (conv_output_extent(oh, k, g) != d.h || conv_output_extent(ow, k, g) != d.w) {
    throw Error(ErrorKind::Dimension, "conv_transpose2d cannot map " + std::to_string(d.h) + "x" +
                                          std::to_string(d.w) + " onto mirrored shape " +
                                          std::to_string(oh) + "x" + std::to_string(ow));
  }
  if (g.stride == 1 && g.padding < k && d.c <= cout) {
    // Stride 1: a plain convolution with flipped, channel-swapped kernels.
    // Only cheaper when the column buffer does not grow.
    Parameter flipped(Tensor(Shape{cout, d.c, k, k}));
    const float* src = kernels.value.data();
    float* dst = flipped.value.data();
    for (std::size_t c = 0; c < d.c; ++c)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t i = 0; i < k * k; ++i)
          dst[(o * d.c + c) * k * k + (k * k - 1 - i)] = src[(c * cout + o) * k * k + i];
    return conv2d(input, flipped, bias, ConvGeometry{1, k - 1 - g.padding});
  }
  const std::size_t plane = d.h * d.w;
  const std::size_t patch = cout * k * k;

  Tensor out(image_shape(input.rank() == 4, d.n, cout, oh, ow));
  ConstMatMap kmat(kernels.value.data(), d.c, patch);
  parallel_for(chunk_count(d.n), [&](std::size_t chunk) {
    RowMat col(patch, plane);
    const std::size_t end = std::min(d.n, (chunk + 1) * kChunk);
    for (std::size_t s = chunk * kChunk; s < end; ++s) {
      ConstMatMap x(input.data() + s * d.c * plane, d.c, plane);
      col.noalias() = kmat.transpose() * x;
      float* y = out.data() + s * cout * oh * ow;
      col2im(col.data(), cout, oh, ow, k, g, d.h, d.w, y);
      for (std::size_t o = 0; o < cout; ++o) {
        float* p = y + o * oh * ow;
        for (std::size_t i = 0; i < oh * ow; ++i) p[i] += bias.value[o];
      }
    }
  });
  return out;
}

Tensor conv_transpose2d_backward(const Tensor& grad_output, const Tensor& input,
                                 Parameter& kernels, Parameter& bias, ConvGeometry g) {
  const auto d = image_dims(input, "conv_transpose2d_backward");
  const auto go = image_dims(grad_output, "conv_transpose2d_backward");
  const std::size_t k = check_square_kernel(kernels.value);
  const std::size_t cout = kernels.value.dim(1);
  if (go.n != d.n || go.c != cout || conv_output_extent(go.h, k, g) != d.h ||
      conv_output_extent(go.w, k, g) != d.w) {
    throw Error(ErrorKind::Dimension, "conv_transpose2d grad_output " +
                                          shape_string(grad_output.shape()) +
                                          " does not match forward output");
  }
  const std::size_t plane = d.h * d.w;
  const std::size_t patch = cout * k * k;
  const std::size_t out_plane = go.h * go.w;

  Tensor grad_input(input.shape());
  ConstMatMap kmat(kernels.value.data(), d.c, patch);
  const std::size_t chunks = chunk_count(d.n);
  std::vector<RowMat> dk(chunks);
  std::vector<Eigen::VectorXf> db(chunks);
  parallel_for(chunks, [&](std::size_t chunk) {
    RowMat col(patch, plane);
    dk[chunk] = RowMat::Zero(d.c, patch);
    db[chunk] = Eigen::VectorXf::Zero(cout);
    const std::size_t end = std::min(d.n, (chunk + 1) * kChunk);
    for (std::size_t s = chunk * kChunk; s < end; ++s) {
      const float* dy = grad_output.data() + s * cout * out_plane;
      im2col(dy, cout, go.h, go.w, k, g, d.h, d.w, col.data());
      ConstMatMap x(input.data() + s * d.c * plane, d.c, plane);
      MatMap dx(grad_input.data() + s * d.c * plane, d.c, plane);
      dx.noalias() = kmat * col;
      dk[chunk].noalias() += x * col.transpose();
      for (std::size_t o = 0; o < cout; ++o) db[chunk][o] += float(detail::sum(dy + o * out_plane, out_plane));
    }
  });
  MatMap kgrad(kernels.grad.data(), d.c, patch);
  for (std::size_t c = 0; c < chunks; ++c) {
    kgrad += dk[c];
    for (std::size_t o = 0; o < cout; ++o) bias.grad[o] += db[c][o];
  }
  return grad_input;
}

}  // namespace egmlatent
