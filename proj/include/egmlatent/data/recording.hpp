#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "egmlatent/core/tensor.hpp"

namespace egmlatent::data {

enum class Polarity { Unipolar, Bipolar };

/// 20 unipolar electrodes or 15 bipolar pairs on a five-spline star catheter.
std::size_t channel_count(Polarity polarity) noexcept;
std::string_view to_string(Polarity polarity) noexcept;
Polarity polarity_from_string(std::string_view name);

enum class DriverKind { Focal, Rotational, Entanglement };
inline constexpr std::array<DriverKind, 3> kAllDrivers = {DriverKind::Rotational, DriverKind::Focal,
                                                          DriverKind::Entanglement};

std::string_view to_string(DriverKind kind) noexcept;
DriverKind driver_from_string(std::string_view name);
/// Focal activity is read from unipolar signals; rotors and entanglement from bipolar.
Polarity task_polarity(DriverKind kind) noexcept;

/// A driver episode over the half-open sample interval [start, end).
struct DriverAnnotation {
  DriverKind kind = DriverKind::Focal;
  std::size_t start_sample = 0;
  std::size_t end_sample = 0;

  bool valid_for(std::size_t length) const noexcept {
    return start_sample < end_sample && end_sample <= length;
  }
  std::vector<std::uint8_t> mask(std::size_t length) const;

  friend bool operator==(const DriverAnnotation&, const DriverAnnotation&) = default;
};

struct EgmRecording {
  std::string patient_id;
  std::string acquisition_id;
  Polarity polarity = Polarity::Bipolar;
  Tensor samples;  // channels x T, millivolts
  int sample_rate_hz = 1000;

  std::size_t channels() const { return samples.rank() == 2 ? samples.dim(0) : 0; }
  std::size_t length() const { return samples.rank() == 2 ? samples.dim(1) : 0; }
  double duration_s() const { return double(length()) / sample_rate_hz; }
  /// Throws a dimension error when the channel count does not match the polarity.
  void validate() const;
};

struct DriverLabels {
  bool rotational = false;
  bool focal = false;
  bool entanglement = false;

  bool get(DriverKind kind) const noexcept;
  void set(DriverKind kind, bool value) noexcept;
  friend bool operator==(const DriverLabels&, const DriverLabels&) = default;
};

/// Catheter geometry: spline s in [0, 5), electrode e in [0, 4) from the tip,
/// bipolar pair j in [0, 3) joins electrodes j and j + 1 of one spline.
namespace catheter {
inline constexpr std::size_t kSplines = 5;
inline constexpr std::size_t kElectrodesPerSpline = 4;
inline constexpr std::size_t kPairsPerSpline = 3;
/// Pair index used for the circular (one per spline, equidistant) ring.
inline constexpr std::size_t kCircularPair = 1;

constexpr std::size_t unipolar_channel(std::size_t spline, std::size_t electrode) {
  return spline * kElectrodesPerSpline + electrode;
}
constexpr std::size_t bipolar_channel(std::size_t spline, std::size_t pair) {
  return spline * kPairsPerSpline + pair;
}
std::array<std::size_t, kSplines> circular_bipolar_channels() noexcept;
/// Same-spline adjacent pairs plus the same pair on the two adjacent splines.
std::vector<std::size_t> bipolar_neighbors(std::size_t channel);
}  // namespace catheter

}  // namespace egmlatent::data
