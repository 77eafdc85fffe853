#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egmlatent/core/rng.hpp"
#include "egmlatent/data/recording.hpp"

namespace egmlatent::data {

struct SynthConfig {
  std::size_t patients = 60;
  std::size_t recordings_per_patient = 2;
  double min_duration_s = 15.0;
  double max_duration_s = 30.0;
  int sample_rate_hz = 1000;

  double min_cycle_ms = 170.0;
  double max_cycle_ms = 230.0;
  double cycle_jitter = 0.04;  // relative sd of beat-to-beat cycle length
  double noise_mv = 0.02;

  double p_focal = 0.5;
  double p_rotational = 0.5;
  double p_entanglement = 0.5;
  double min_episode_s = 3.0;
  double max_episode_s = 8.0;

  double qs_depth_mv = 2.5;
  double focal_rate_factor = 0.8;
  /// Rotor activation span across the circular ring, as a fraction of the cycle length.
  double staircase_span = 0.7;
  double rotor_rate_factor = 0.85;
  /// Typical oscillation frequency (Hz) of the fragmented bursts on the HFCA channel.
  double fragmentation_density = 40.0;
  double cl_shortening_factor = 0.65;

  std::uint64_t seed = 1;

  /// Throws a configuration error on out-of-range fields.
  void validate() const;
};

struct SynthRecording {
  EgmRecording unipolar;
  EgmRecording bipolar;
  std::vector<DriverAnnotation> annotations;  // at sample_rate_hz, shared by both polarities
};

/// One acquisition with the given identity. All randomness comes from rng.
SynthRecording synth_recording(const SynthConfig& config, const std::string& patient_id,
                               const std::string& acquisition_id, Rng& rng);

/// The full corpus: patients P0001.. each with recordings A01.., seeded from
/// config.seed with one independent stream per recording.
std::vector<SynthRecording> synth_corpus(const SynthConfig& config);

std::string patient_name(std::size_t index);
std::string acquisition_name(std::size_t index);

}  // namespace egmlatent::data
