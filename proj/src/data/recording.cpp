#include "egmlatent/data/recording.hpp"

#include "egmlatent/core/error.hpp"

namespace egmlatent::data {

std::size_t channel_count(Polarity polarity) noexcept {
  return polarity == Polarity::Unipolar ? 20 : 15;
}

std::string_view to_string(Polarity polarity) noexcept {
  return polarity == Polarity::Unipolar ? "unipolar" : "bipolar";
}

Polarity polarity_from_string(std::string_view name) {
  if (name == "unipolar") return Polarity::Unipolar;
  if (name == "bipolar") return Polarity::Bipolar;
  throw Error(ErrorKind::Configuration, "unknown polarity '" + std::string(name) + "'");
}

std::string_view to_string(DriverKind kind) noexcept {
  switch (kind) {
    case DriverKind::Focal: return "focal";
    case DriverKind::Rotational: return "rotational";
    case DriverKind::Entanglement: return "entanglement";
  }
  return "?";
}

DriverKind driver_from_string(std::string_view name) {
  if (name == "focal") return DriverKind::Focal;
  if (name == "rotational") return DriverKind::Rotational;
  if (name == "entanglement") return DriverKind::Entanglement;
  throw Error(ErrorKind::Configuration, "unknown driver kind '" + std::string(name) + "'");
}

Polarity task_polarity(DriverKind kind) noexcept {
  return kind == DriverKind::Focal ? Polarity::Unipolar : Polarity::Bipolar;
}

std::vector<std::uint8_t> DriverAnnotation::mask(std::size_t length) const {
  std::vector<std::uint8_t> m(length, 0);
  for (std::size_t i = start_sample; i < end_sample && i < length; ++i) m[i] = 1;
  return m;
}

void EgmRecording::validate() const {
  if (samples.rank() != 2) {
    throw Error(ErrorKind::Dimension, "recording samples must be channels x T");
  }
  if (channels() != channel_count(polarity)) {
    throw Error(ErrorKind::Dimension, std::string(to_string(polarity)) + " recording needs " +
                                          std::to_string(channel_count(polarity)) +
                                          " channels, got " + std::to_string(channels()));
  }
  if (sample_rate_hz <= 0) throw Error(ErrorKind::Configuration, "sample rate must be positive");
}

bool DriverLabels::get(DriverKind kind) const noexcept {
  switch (kind) {
    case DriverKind::Focal: return focal;
    case DriverKind::Rotational: return rotational;
    case DriverKind::Entanglement: return entanglement;
  }
  return false;
}

void DriverLabels::set(DriverKind kind, bool value) noexcept {
  switch (kind) {
    case DriverKind::Focal: focal = value; break;
    case DriverKind::Rotational: rotational = value; break;
    case DriverKind::Entanglement: entanglement = value; break;
  }
}

namespace catheter {

std::array<std::size_t, kSplines> circular_bipolar_channels() noexcept {
  std::array<std::size_t, kSplines> out{};
  for (std::size_t s = 0; s < kSplines; ++s) out[s] = bipolar_channel(s, kCircularPair);
  return out;
}

std::vector<std::size_t> bipolar_neighbors(std::size_t channel) {
  if (channel >= kSplines * kPairsPerSpline) {
    throw Error(ErrorKind::Dimension, "bipolar channel " + std::to_string(channel));
  }
  const std::size_t s = channel / kPairsPerSpline, j = channel % kPairsPerSpline;
  std::vector<std::size_t> out;
  if (j > 0) out.push_back(bipolar_channel(s, j - 1));
  if (j + 1 < kPairsPerSpline) out.push_back(bipolar_channel(s, j + 1));
  out.push_back(bipolar_channel((s + kSplines - 1) % kSplines, j));
  out.push_back(bipolar_channel((s + 1) % kSplines, j));
  return out;
}

}  // namespace catheter

}  // namespace egmlatent::data
