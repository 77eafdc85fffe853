#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "egmlatent/data/recording.hpp"

// Signal-level driver detectors. They look only at the samples, never at the
// generator's internal state, so they can audit synthetic annotations.

namespace egmlatent::data {

struct DetectorParams {
  double activation_threshold_mv = 0.15;
  double activation_refractory_ms = 50.0;

  double qs_min_depth_mv = 1.0;
  /// Largest positive lobe allowed before the trough, relative to its depth.
  double qs_max_r_ratio = 0.25;
  double qs_min_spacing_ms = 80.0;
  double qs_max_spacing_ms = 400.0;

  double staircase_max_step = 0.35;  // fraction of the cycle length
  double staircase_min_span = 0.5;

  double hfca_threshold_mv = 0.1;
  double hfca_refractory_ms = 15.0;
  double hfca_min_rate_hz = 12.0;
  double shortening_ratio = 0.85;
};

/// Peak samples of |x| above threshold in [begin, end), at most one per refractory period.
std::vector<std::size_t> detect_activations(std::span<const float> x, std::size_t begin,
                                            std::size_t end, double threshold,
                                            std::size_t refractory);

/// Median interval between successive activations; 0 when fewer than two.
double median_cycle(const std::vector<std::size_t>& activations);

struct QsComplex {
  std::size_t trough;
  double depth;
};
/// Negative monophasic deflections in [begin, end) of one unipolar channel.
std::vector<QsComplex> find_qs_complexes(std::span<const float> x, int fs, std::size_t begin,
                                         std::size_t end, const DetectorParams& p = {});

/// Some unipolar channel shows QS deflections in two consecutive beats.
bool focal_detected(const EgmRecording& unipolar, std::size_t begin, std::size_t end,
                    const DetectorParams& p = {});
/// The circular bipolar ring shows a head-to-tail staircase spanning more than
/// half the cycle length for at least two consecutive beats.
bool rotational_detected(const EgmRecording& bipolar, std::size_t begin, std::size_t end,
                         const DetectorParams& p = {});
/// Number of neighbors of a fragmented (HFCA) bipolar channel whose discrete
/// cycle length is shorter than the concurrent reference by the configured
/// ratio. Positive means entangled.
int entanglement_index(const EgmRecording& bipolar, std::size_t begin, std::size_t end,
                       const DetectorParams& p = {});

bool driver_detected(DriverKind kind, const EgmRecording& unipolar, const EgmRecording& bipolar,
                     std::size_t begin, std::size_t end, const DetectorParams& p = {});

}  // namespace egmlatent::data
