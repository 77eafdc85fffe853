#include "egmlatent/cae/model.hpp"

#include <algorithm>
#include <cmath>

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/parallel.hpp"

namespace egmlatent::cae {

namespace {

Parameter kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / double(fan_in));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-bound, bound));
  return Parameter(std::move(t));
}

Parameter filled(std::size_t n, float value) { return Parameter(Tensor(Shape{n}, value)); }

}  // namespace

CaeModel::CaeModel(const CaeConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t f = config_.filters, k = config_.kernel;
  for (std::size_t b = 0; b < config_.conv_blocks; ++b) {
    const std::size_t c_in = b == 0 ? 1 : f;
    EncoderBlock blk;
    blk.conv_w = kaiming_uniform(Shape{f, c_in, k, k}, c_in * k * k, rng);
    blk.conv_b = filled(f, 0.0f);
    blk.bn_gamma = filled(f, 1.0f);
    blk.bn_beta = filled(f, 0.0f);
    blk.bn = BatchNormState(f);
    enc_.push_back(std::move(blk));
  }
  const std::size_t flat = flatten_size(), latent = config_.latent_dim;
  enc_fc_w_ = kaiming_uniform(Shape{flat, latent}, flat, rng);
  enc_fc_b_ = filled(latent, 0.0f);
  dec_fc_w_ = kaiming_uniform(Shape{latent, flat}, latent, rng);
  dec_fc_b_ = filled(flat, 0.0f);
  for (std::size_t b = 0; b < config_.conv_blocks; ++b) {
    DecoderBlock blk;
    blk.convt_w = kaiming_uniform(Shape{f, f, k, k}, f * k * k, rng);
    blk.convt_b = filled(f, 0.0f);
    blk.bn_gamma = filled(f, 1.0f);
    blk.bn_beta = filled(f, 0.0f);
    blk.bn = BatchNormState(f);
    dec_.push_back(std::move(blk));
  }
  out_w_ = kaiming_uniform(Shape{f, 1, k, k}, f * k * k, rng);
  out_b_ = filled(1, 0.0f);
}

std::array<std::size_t, 2> CaeModel::stage_shape(std::size_t block) const {
  std::array<std::size_t, 2> hw{config_.input_height(), config_.input_width()};
  for (std::size_t b = 0; b < block; ++b) hw = {pooled_extent(hw[0]), pooled_extent(hw[1])};
  return hw;
}

std::size_t CaeModel::flatten_size() const noexcept {
  const auto hw = stage_shape(config_.conv_blocks);
  return config_.filters * hw[0] * hw[1];
}

Tensor CaeModel::as_image_batch(const Tensor& batch) const {
  const std::size_t h = config_.input_height(), w = config_.input_width();
  if (batch.rank() == 3 && batch.dim(1) == h && batch.dim(2) == w) {
    return batch.reshaped(Shape{batch.dim(0), 1, h, w});
  }
  if (batch.rank() == 4 && batch.dim(1) == 1 && batch.dim(2) == h && batch.dim(3) == w) return batch;
  throw Error(ErrorKind::Dimension, "cae expects N x 1 x " + std::to_string(h) + " x " + std::to_string(w) +
                                        ", got " + shape_string(batch.shape()));
}

Tensor CaeModel::run_encoder(const Tensor& x, Mode mode, Rng& rng, ForwardTrace* trace) {
  const ConvGeometry same{1, config_.kernel / 2};
  Tensor h = x;
  for (auto& blk : enc_) {
    ForwardTrace::Encoder rec;
    Tensor c = conv2d(h, blk.conv_w, blk.conv_b, same);
    if (trace) rec.conv_in = std::move(h);
    Tensor n = batchnorm(c, blk.bn_gamma, blk.bn_beta, blk.bn, mode, trace ? &rec.bn : nullptr);
    c = Tensor();
    Tensor r = relu(n);
    n = Tensor();
    PoolRecord pool = maxpool2d(r);
    if (trace) rec.relu_out = std::move(r);
    h = dropout(pool.output, config_.dropout_p, mode, rng, trace ? &rec.drop : nullptr);
    if (trace) {
      rec.pool = std::move(pool);
      trace->encoder.push_back(std::move(rec));
    }
  }
  const std::size_t n = h.dim(0);
  Tensor flat = h.reshaped(Shape{n, flatten_size()});
  Tensor z = fully_connected(flat, enc_fc_w_, enc_fc_b_);
  if (trace) {
    trace->fc_in = std::move(flat);
    trace->latent = z;
  }
  return z;
}

Tensor CaeModel::run_decoder(const Tensor& latent, ForwardTrace& trace, Mode mode, Rng& rng) {
  const ConvGeometry same{1, config_.kernel / 2};
  const std::size_t n = latent.dim(0), f = config_.filters;
  const auto bottom = stage_shape(config_.conv_blocks);
  Tensor h = fully_connected(latent, dec_fc_w_, dec_fc_b_).reshaped(Shape{n, f, bottom[0], bottom[1]});
  for (std::size_t i = 0; i < config_.conv_blocks; ++i) {
    const std::size_t b = config_.conv_blocks - 1 - i;
    auto& blk = dec_[b];
    ForwardTrace::Decoder rec;
    Tensor u = maxunpool2d(h, trace.encoder[b].pool);
    h = Tensor();
    Tensor c = conv_transpose2d(u, blk.convt_w, blk.convt_b, same, stage_shape(b));
    rec.convt_in = std::move(u);
    Tensor nrm = batchnorm(c, blk.bn_gamma, blk.bn_beta, blk.bn, mode, &rec.bn);
    c = Tensor();
    Tensor r = relu(nrm);
    nrm = Tensor();
    h = dropout(r, config_.dropout_p, mode, rng, &rec.drop);
    rec.relu_out = std::move(r);
    trace.decoder.push_back(std::move(rec));
  }
  Tensor y = conv_transpose2d(h, out_w_, out_b_, same, stage_shape(0));
  trace.out_in = std::move(h);
  return tanh_act(y);
}

ForwardTrace CaeModel::forward(const Tensor& batch, Mode mode, Rng& rng) {
  ForwardTrace trace;
  trace.mode = mode;
  const Tensor x = as_image_batch(batch);
  Tensor z = run_encoder(x, mode, rng, &trace);
  trace.reconstruction = run_decoder(z, trace, mode, rng);
  return trace;
}

void CaeModel::backward(const ForwardTrace& t, const Tensor& grad_reconstruction) {
  if (grad_reconstruction.shape() != t.reconstruction.shape()) {
    throw Error(ErrorKind::Dimension, "gradient shape " + shape_string(grad_reconstruction.shape()) +
                                          " does not match reconstruction");
  }
  const ConvGeometry same{1, config_.kernel / 2};
  Tensor g = tanh_backward(grad_reconstruction, t.reconstruction);
  g = conv_transpose2d_backward(g, t.out_in, out_w_, out_b_, same);
  for (std::size_t i = config_.conv_blocks; i-- > 0;) {
    const std::size_t b = config_.conv_blocks - 1 - i;
    auto& blk = dec_[b];
    const auto& rec = t.decoder[i];
    g = dropout_backward(g, rec.drop);
    g = relu_backward(g, rec.relu_out);
    g = batchnorm_backward(g, rec.bn, blk.bn_gamma, blk.bn_beta);
    g = conv_transpose2d_backward(g, rec.convt_in, blk.convt_w, blk.convt_b, same);
    g = maxunpool2d_backward(g, t.encoder[b].pool);
  }
  const std::size_t n = t.latent.dim(0);
  g = fully_connected_backward(g.reshaped(Shape{n, flatten_size()}), t.latent, dec_fc_w_, dec_fc_b_);
  g = fully_connected_backward(g, t.fc_in, enc_fc_w_, enc_fc_b_);
  const auto bottom_shape = t.encoder.back().pool.output.shape();
  g.reshape(bottom_shape);
  for (std::size_t b = config_.conv_blocks; b-- > 0;) {
    auto& blk = enc_[b];
    const auto& rec = t.encoder[b];
    g = dropout_backward(g, rec.drop);
    g = maxpool2d_backward(g, rec.pool);
    g = relu_backward(g, rec.relu_out);
    g = batchnorm_backward(g, rec.bn, blk.bn_gamma, blk.bn_beta);
    g = conv2d_backward(g, rec.conv_in, blk.conv_w, blk.conv_b, same);
  }
}

Tensor CaeModel::encode(const Tensor& batch) const {
  // Eval mode reads batchnorm statistics and never draws from the rng.
  // Runs one sample at a time so the intermediates stay cache resident.
  const Tensor x = as_image_batch(batch);
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3), flat = flatten_size();
  const ConvGeometry same{1, config_.kernel / 2};
  Tensor features(Shape{n, flat});
  parallel_for(n, [&](std::size_t s) {
    Tensor a(Shape{1, 1, h, w}, std::vector<float>(x.data() + s * h * w, x.data() + (s + 1) * h * w));
    for (const auto& blk : enc_) {
      a = batchnorm_relu_pool_eval(conv2d(a, blk.conv_w, blk.conv_b, same), blk.bn_gamma, blk.bn_beta, blk.bn);
    }
    std::copy(a.data(), a.data() + flat, features.data() + s * flat);
  });
  return fully_connected(features, enc_fc_w_, enc_fc_b_);
}

Tensor CaeModel::reconstruct(const Tensor& batch) const {
  Rng unused(0);
  return const_cast<CaeModel*>(this)->forward(batch, Mode::Eval, unused).reconstruction;
}

std::vector<Parameter*> CaeModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& b : enc_) {
    for (Parameter* p : {&b.conv_w, &b.conv_b, &b.bn_gamma, &b.bn_beta}) out.push_back(p);
  }
  for (Parameter* p : {&enc_fc_w_, &enc_fc_b_, &dec_fc_w_, &dec_fc_b_}) out.push_back(p);
  for (auto& b : dec_) {
    for (Parameter* p : {&b.convt_w, &b.convt_b, &b.bn_gamma, &b.bn_beta}) out.push_back(p);
  }
  out.push_back(&out_w_);
  out.push_back(&out_b_);
  return out;
}

std::vector<NamedTensor> CaeModel::state() {
  std::vector<NamedTensor> out;
  for (std::size_t b = 0; b < enc_.size(); ++b) {
    const std::string p = "encoder." + std::to_string(b) + ".";
    auto& blk = enc_[b];
    out.push_back({p + "conv.weight", &blk.conv_w.value});
    out.push_back({p + "conv.bias", &blk.conv_b.value});
    out.push_back({p + "bn.gamma", &blk.bn_gamma.value});
    out.push_back({p + "bn.beta", &blk.bn_beta.value});
    out.push_back({p + "bn.running_mean", &blk.bn.running_mean});
    out.push_back({p + "bn.running_var", &blk.bn.running_var});
  }
  out.push_back({"encoder.fc.weight", &enc_fc_w_.value});
  out.push_back({"encoder.fc.bias", &enc_fc_b_.value});
  out.push_back({"decoder.fc.weight", &dec_fc_w_.value});
  out.push_back({"decoder.fc.bias", &dec_fc_b_.value});
  for (std::size_t b = 0; b < dec_.size(); ++b) {
    const std::string p = "decoder." + std::to_string(b) + ".";
    auto& blk = dec_[b];
    out.push_back({p + "convt.weight", &blk.convt_w.value});
    out.push_back({p + "convt.bias", &blk.convt_b.value});
    out.push_back({p + "bn.gamma", &blk.bn_gamma.value});
    out.push_back({p + "bn.beta", &blk.bn_beta.value});
    out.push_back({p + "bn.running_mean", &blk.bn.running_mean});
    out.push_back({p + "bn.running_var", &blk.bn.running_var});
  }
  out.push_back({"decoder.out.weight", &out_w_.value});
  out.push_back({"decoder.out.bias", &out_b_.value});
  return out;
}

std::size_t CaeModel::parameter_count() const {
  std::size_t n = 0;
  for (Parameter* p : const_cast<CaeModel*>(this)->parameters()) n += p->value.size();
  return n;
}

void CaeModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

}  // namespace egmlatent::cae
