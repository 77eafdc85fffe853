#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "egmlatent/core/rng.hpp"
#include "egmlatent/core/tensor.hpp"
#include "egmlatent/data/recording.hpp"

namespace egmlatent::data {

inline constexpr int kTargetRateHz = 250;
inline constexpr std::size_t kWindowSamples = 250;
inline constexpr std::size_t kResampleTaps = 127;

/// Hamming-windowed sinc low-pass, unit DC gain. cutoff_hz is the -6 dB point.
std::vector<double> design_lowpass(std::size_t taps, double cutoff_hz, double fs_hz);

/// Low-pass at 125 Hz then keep every (fs_in / 250)-th sample of a channels x T
/// matrix. Output length is floor(T * 250 / fs_in). fs_in must be a positive
/// multiple of 250, otherwise an unsupported-rate error.
Tensor resample_to_250(const Tensor& signal, int fs_in);

/// Annotation interval mapped to another rate: start rounds down, end rounds up,
/// so a non-empty interval stays non-empty.
DriverAnnotation rescale_annotation(const DriverAnnotation& a, int fs_in, int fs_out);

/// Non-overlapping 250-sample windows of a channels x T matrix at 250 Hz; the
/// trailing partial window is dropped. T < 250 is a too-short error.
std::vector<Tensor> segment_windows(const Tensor& signal250);

struct Segment {
  Tensor data;  // channels x 250
  DriverLabels labels;
  std::string patient_id;
  std::string source_recording_id;
  std::size_t window_index = 0;
};

/// Resamples to 250 Hz, windows, and labels one recording. Values stay raw (mV).
std::vector<Segment> extract_segments(const EgmRecording& recording,
                                      std::span<const DriverAnnotation> annotations);

struct NormalizationParams {
  float p_low = 0.0f;
  float p_high = 0.0f;
  Polarity polarity = Polarity::Bipolar;
};

/// Percentile p in [0, 100] with linear interpolation at rank p/100 * (n - 1).
/// Reorders values.
double percentile(std::vector<float>& values, double p);

/// Global 2nd/98th percentiles over every value of every segment. Empty input
/// or p_low == p_high is a degenerate-data error.
NormalizationParams compute_clip_params(std::span<const Tensor> training_segments, Polarity polarity);

/// Clips to [p_low, p_high] then maps linearly onto [-1, 1].
float scale_value(float x, const NormalizationParams& params);
Tensor clip_and_scale(const Tensor& raw, const NormalizationParams& params);

/// A flag is set iff [window_start, window_end) shares a sample with an
/// annotation of that kind. Annotations must already be at 250 Hz.
DriverLabels assign_labels(std::size_t window_start, std::size_t window_end,
                           std::span<const DriverAnnotation> annotations);

enum class Split { Train, Validation, Test };
std::string_view to_string(Split split) noexcept;
Split split_from_string(std::string_view name);

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct SplitAssignment {
  std::map<std::string, Split> by_patient;

  Split of(const std::string& patient_id) const;
  std::vector<std::string> patients(Split split) const;
};

/// Seeded partition by patient. Train and validation get round(f * N)
/// patients, test the rest; each split keeps at least one patient.
SplitAssignment patient_split(std::vector<std::string> patient_ids, const SplitFractions& fractions,
                              std::uint64_t seed);

/// Indices of a balanced subset: all minority samples plus an equal-size
/// random draw without replacement from the majority. Returned ascending.
/// An empty class is a task-infeasible error.
std::vector<std::size_t> undersample(std::span<const std::uint8_t> labels, Rng& rng);

}  // namespace egmlatent::data
