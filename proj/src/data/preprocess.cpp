#include "egmlatent/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "egmlatent/core/error.hpp"

namespace egmlatent::data {

std::vector<double> design_lowpass(std::size_t taps, double cutoff_hz, double fs_hz) {
  if (taps % 2 == 0) throw Error(ErrorKind::Configuration, "lowpass needs an odd tap count");
  std::vector<double> h(taps);
  const double fc = cutoff_hz / fs_hz;  // cycles per sample
  const double mid = double(taps - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t n = 0; n < taps; ++n) {
    const double t = double(n) - mid;
    const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * double(n) / double(taps - 1));
    h[n] = sinc * window;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

Tensor resample_to_250(const Tensor& signal, int fs_in) {
  if (signal.rank() != 2) throw Error(ErrorKind::Dimension, "resample expects channels x T");
  if (fs_in <= 0 || fs_in % kTargetRateHz != 0) {
    throw Error(ErrorKind::UnsupportedRate, "cannot decimate " + std::to_string(fs_in) + " Hz to 250 Hz");
  }
  if (fs_in == kTargetRateHz) return signal;

  const std::size_t factor = std::size_t(fs_in / kTargetRateHz);
  const std::size_t channels = signal.dim(0), length = signal.dim(1);
  const std::size_t out_len = length / factor;
  const auto h = design_lowpass(kResampleTaps, kTargetRateHz / 2.0, fs_in);
  const long half = long(kResampleTaps / 2);

  // Zero-phase: tap k multiplies x[m * factor + k - half]; samples outside are zero.
  // Polyphase layout: phase[r][j] = padded[j * factor + r], so each tap is a
  // contiguous multiply-add over all outputs.
  const std::size_t span = out_len + (kResampleTaps - 1) / factor + 1;
  std::vector<std::vector<double>> phase(factor, std::vector<double>(span, 0.0));
  std::vector<double> acc(out_len);
  Tensor out(Shape{channels, out_len});
  for (std::size_t c = 0; c < channels; ++c) {
    const float* x = signal.data() + c * length;
    for (std::size_t r = 0; r < factor; ++r) {
      for (std::size_t j = 0; j < span; ++j) {
        const long t = long(j * factor + r) - half;
        phase[r][j] = t >= 0 && t < long(length) ? double(x[t]) : 0.0;
      }
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < kResampleTaps; ++k) {
      const double hk = h[k];
      const double* p = phase[k % factor].data() + k / factor;
      for (std::size_t m = 0; m < out_len; ++m) acc[m] += hk * p[m];
    }
    float* y = out.data() + c * out_len;
    for (std::size_t m = 0; m < out_len; ++m) y[m] = static_cast<float>(acc[m]);
  }
  return out;
}

DriverAnnotation rescale_annotation(const DriverAnnotation& a, int fs_in, int fs_out) {
  DriverAnnotation r = a;
  r.start_sample = std::size_t(a.start_sample * std::uint64_t(fs_out) / std::uint64_t(fs_in));
  r.end_sample = std::size_t((a.end_sample * std::uint64_t(fs_out) + std::uint64_t(fs_in) - 1) / std::uint64_t(fs_in));
  return r;
}

std::vector<Tensor> segment_windows(const Tensor& signal250) {
  if (signal250.rank() != 2) throw Error(ErrorKind::Dimension, "segment_windows expects channels x T");
  const std::size_t channels = signal250.dim(0), length = signal250.dim(1);
  if (length < kWindowSamples) {
    throw Error(ErrorKind::TooShort, "recording has " + std::to_string(length) + " samples, need 250");
  }
  std::vector<Tensor> out;
  for (std::size_t w = 0; w < length / kWindowSamples; ++w) {
    Tensor seg(Shape{channels, kWindowSamples});
    for (std::size_t c = 0; c < channels; ++c) {
      const float* src = signal250.data() + c * length + w * kWindowSamples;
      std::copy(src, src + kWindowSamples, seg.data() + c * kWindowSamples);
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<Segment> extract_segments(const EgmRecording& recording,
                                      std::span<const DriverAnnotation> annotations) {
  recording.validate();
  const Tensor resampled = resample_to_250(recording.samples, recording.sample_rate_hz);
  std::vector<DriverAnnotation> scaled;
  for (const auto& a : annotations) scaled.push_back(rescale_annotation(a, recording.sample_rate_hz, kTargetRateHz));
  auto windows = segment_windows(resampled);
  std::vector<Segment> out;
  out.reserve(windows.size());
  for (std::size_t w = 0; w < windows.size(); ++w) {
    Segment s;
    s.data = std::move(windows[w]);
    s.labels = assign_labels(w * kWindowSamples, (w + 1) * kWindowSamples, scaled);
    s.patient_id = recording.patient_id;
    s.source_recording_id = recording.acquisition_id;
    s.window_index = w;
    out.push_back(std::move(s));
  }
  return out;
}

double percentile(std::vector<float>& values, double p) {
  if (values.empty()) throw Error(ErrorKind::DegenerateData, "percentile of an empty set");
  const double rank = p / 100.0 * double(values.size() - 1);
  const std::size_t lo = std::size_t(std::floor(rank));
  const double frac = rank - double(lo);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + lo + 1, values.end());
  return a + frac * (b - a);
}

NormalizationParams compute_clip_params(std::span<const Tensor> training_segments, Polarity polarity) {
  std::vector<float> pool;
  std::size_t total = 0;
  for (const auto& s : training_segments) total += s.size();
  pool.reserve(total);
  for (const auto& s : training_segments) pool.insert(pool.end(), s.values().begin(), s.values().end());
  if (pool.empty()) throw Error(ErrorKind::DegenerateData, "no training values for clip parameters");

  NormalizationParams params;
  params.polarity = polarity;
  params.p_low = static_cast<float>(percentile(pool, 2.0));
  params.p_high = static_cast<float>(percentile(pool, 98.0));
  if (!(params.p_low < params.p_high)) {
    throw Error(ErrorKind::DegenerateData, "2nd and 98th percentiles coincide");
  }
  return params;
}

float scale_value(float x, const NormalizationParams& params) {
  const double lo = params.p_low, hi = params.p_high;
  const double clipped = std::clamp(double(x), lo, hi);
  const double y = 2.0 * (clipped - lo) / (hi - lo) - 1.0;
  return static_cast<float>(std::clamp(y, -1.0, 1.0));
}

Tensor clip_and_scale(const Tensor& raw, const NormalizationParams& params) {
  if (!(params.p_low < params.p_high)) {
    throw Error(ErrorKind::DegenerateData, "normalization needs p_low < p_high");
  }
  Tensor out = raw;
  for (float& v : out.values()) v = scale_value(v, params);
  return out;
}

DriverLabels assign_labels(std::size_t window_start, std::size_t window_end,
                           std::span<const DriverAnnotation> annotations) {
  DriverLabels labels;
  for (const auto& a : annotations) {
    if (a.start_sample < window_end && window_start < a.end_sample) labels.set(a.kind, true);
  }
  return labels;
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  throw Error(ErrorKind::Configuration, "unknown split '" + std::string(name) + "'");
}

Split SplitAssignment::of(const std::string& patient_id) const {
  auto it = by_patient.find(patient_id);
  if (it == by_patient.end()) throw Error(ErrorKind::Configuration, "patient " + patient_id + " has no split");
  return it->second;
}

std::vector<std::string> SplitAssignment::patients(Split split) const {
  std::vector<std::string> out;
  for (const auto& [id, s] : by_patient) {
    if (s == split) out.push_back(id);
  }
  return out;
}

SplitAssignment patient_split(std::vector<std::string> patient_ids, const SplitFractions& f,
                              std::uint64_t seed) {
  std::sort(patient_ids.begin(), patient_ids.end());
  patient_ids.erase(std::unique(patient_ids.begin(), patient_ids.end()), patient_ids.end());
  const double sum = f.train + f.validation + f.test;
  if (f.train <= 0.0 || f.validation <= 0.0 || f.test <= 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::Configuration, "split fractions must be positive and sum to 1");
  }
  const std::size_t n = patient_ids.size();
  if (n < 3) throw Error(ErrorKind::Configuration, "need at least 3 patients for 3 splits");

  std::size_t n_train = std::size_t(std::llround(f.train * double(n)));
  std::size_t n_val = std::size_t(std::llround(f.validation * double(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 2);
  n_val = std::clamp<std::size_t>(n_val, 1, n - n_train - 1);

  Rng rng(seed);
  rng.shuffle(patient_ids);
  SplitAssignment out;
  for (std::size_t i = 0; i < n; ++i) {
    const Split s = i < n_train ? Split::Train : i < n_train + n_val ? Split::Validation : Split::Test;
    out.by_patient[patient_ids[i]] = s;
  }
  return out;
}

std::vector<std::size_t> undersample(std::span<const std::uint8_t> labels, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::TaskInfeasible, "undersampling needs both classes (positives " +
                                               std::to_string(pos.size()) + ", negatives " +
                                               std::to_string(neg.size()) + ")");
  }
  std::vector<std::size_t>& major = pos.size() > neg.size() ? pos : neg;
  const std::size_t keep = std::min(pos.size(), neg.size());
  // Partial Fisher-Yates: the first `keep` slots become a uniform sample.
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + std::size_t(rng.below(major.size() - i));
    std::swap(major[i], major[j]);
  }
  major.resize(keep);
  std::vector<std::size_t> out;
  out.reserve(2 * keep);
  out.insert(out.end(), pos.begin(), pos.end());
  out.insert(out.end(), neg.begin(), neg.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace egmlatent::data
