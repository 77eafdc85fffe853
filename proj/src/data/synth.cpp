#include "egmlatent/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/parallel.hpp"

namespace egmlatent::data {

namespace {

using catheter::kElectrodesPerSpline;
using catheter::kPairsPerSpline;
using catheter::kSplines;

constexpr std::size_t kElectrodes = kSplines * kElectrodesPerSpline;
constexpr std::size_t kPairs = kSplines * kPairsPerSpline;

struct Point {
  double x, y;
};

Point electrode_position(std::size_t spline, std::size_t electrode) {
  const double theta = 2.0 * std::numbers::pi * double(spline) / kSplines;
  const double r = 0.4 + 0.2 * double(electrode);
  return {r * std::cos(theta), r * std::sin(theta)};
}

struct Episode {
  DriverKind kind;
  std::size_t start, end;
  // Rotor: first spline of the staircase, direction and span fraction.
  std::size_t rotor_origin = 0;
  int rotor_direction = 1;
  double rotor_span = 0.7;
  // Focal: source electrode; the QS cluster is (spline, electrode) and (spline, electrode + 1).
  std::size_t focal_spline = 0, focal_electrode = 0;
  // Entanglement: the fragmented bipolar channel.
  std::size_t hfca_channel = 0;

  bool contains(double t) const { return t >= double(start) && t < double(end); }
};

struct Beat {
  double time;
  const Episode* episode;  // focal or rotational episode driving this beat, if any
};

double jittered(double base, double jitter, Rng& rng) {
  const double z = std::clamp(rng.normal(), -2.5, 2.5);
  return base * (1.0 + jitter * z);
}

// Adds amplitude * shape((n - center) / fs in ms) for samples within +-half_ms of center.
template <typename Shape>
void add_wave(std::vector<float>& channel, double center, double fs, double half_ms,
              double amplitude, Shape shape) {
  const double half = half_ms * fs / 1000.0;
  const long lo = std::max(0L, long(std::ceil(center - half)));
  const long hi = std::min(long(channel.size()) - 1, long(std::floor(center + half)));
  for (long n = lo; n <= hi; ++n) {
    const double t_ms = (double(n) - center) * 1000.0 / fs;
    channel[std::size_t(n)] += static_cast<float>(amplitude * shape(t_ms));
  }
}

// Biphasic RS deflection: small positive lobe then a deeper negative one.
auto rs_shape(double sigma_ms) {
  return [sigma_ms](double t) {
    const double u = t / sigma_ms;
    const double g = -u * std::exp(0.5 * (1.0 - u * u));
    return u < 0.0 ? 0.6 * g : g;
  };
}

auto qs_shape(double sigma_ms) {
  return [sigma_ms](double t) {
    const double u = t / sigma_ms;
    return -std::exp(-0.5 * u * u);
  };
}

// Sharp bipolar spike (negated second derivative of a Gaussian).
auto spike_shape(double sigma_ms) {
  return [sigma_ms](double t) {
    const double u = t / sigma_ms;
    return (1.0 - u * u) * std::exp(-0.5 * u * u);
  };
}

std::vector<Episode> place_episodes(const SynthConfig& c, std::size_t length, Rng& rng) {
  std::vector<DriverKind> kinds;
  if (rng.bernoulli(c.p_rotational)) kinds.push_back(DriverKind::Rotational);
  if (rng.bernoulli(c.p_focal)) kinds.push_back(DriverKind::Focal);
  if (rng.bernoulli(c.p_entanglement)) kinds.push_back(DriverKind::Entanglement);
  rng.shuffle(kinds);

  const double fs = c.sample_rate_hz;
  std::vector<Episode> out;
  if (kinds.empty()) return out;
  const double slot = double(length) / double(kinds.size());
  const double guard = 0.25 * fs;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const double room = slot - 2.0 * guard;
    const double max_len = std::min(c.max_episode_s * fs, room);
    const double min_len = std::min(c.min_episode_s * fs, max_len);
    if (max_len < fs) continue;
    const double len = rng.uniform(min_len, max_len);
    const double start = double(i) * slot + guard + rng.uniform(0.0, room - len);
    Episode e{kinds[i], std::size_t(start), std::size_t(start + len)};
    switch (e.kind) {
      case DriverKind::Rotational:
        e.rotor_origin = rng.below(kSplines);
        e.rotor_direction = rng.bernoulli(0.5) ? 1 : -1;
        e.rotor_span = std::clamp(c.staircase_span + rng.uniform(-0.05, 0.05), 0.55, 0.95);
        break;
      case DriverKind::Focal:
        e.focal_spline = rng.below(kSplines);
        e.focal_electrode = rng.below(kElectrodesPerSpline - 1);
        break;
      case DriverKind::Entanglement:
        e.hfca_channel = rng.below(kPairs);
        break;
    }
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const Episode& a, const Episode& b) { return a.start < b.start; });
  return out;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Configuration, "synth: " + what); };
  auto probability = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) fail(std::string(name) + " must be in [0, 1]");
  };
  if (patients == 0 || recordings_per_patient == 0) fail("need at least one patient and recording");
  if (!(min_duration_s >= 1.0 && max_duration_s >= min_duration_s)) fail("bad duration range");
  if (sample_rate_hz <= 0 || sample_rate_hz % 250 != 0) fail("sample rate must be a multiple of 250");
  if (!(min_cycle_ms > 50.0 && max_cycle_ms >= min_cycle_ms)) fail("bad cycle-length range");
  if (!(cycle_jitter >= 0.0 && cycle_jitter < 0.2)) fail("cycle_jitter must be in [0, 0.2)");
  if (!(noise_mv >= 0.0)) fail("noise_mv must be non-negative");
  probability(p_focal, "p_focal");
  probability(p_rotational, "p_rotational");
  probability(p_entanglement, "p_entanglement");
  if (!(min_episode_s > 0.0 && max_episode_s >= min_episode_s)) fail("bad episode duration range");
  if (!(qs_depth_mv > 0.0)) fail("qs_depth_mv must be positive");
  if (!(focal_rate_factor > 0.0 && focal_rate_factor <= 1.0)) fail("focal_rate_factor must be in (0, 1]");
  if (!(rotor_rate_factor > 0.0 && rotor_rate_factor <= 1.0)) fail("rotor_rate_factor must be in (0, 1]");
  if (!(staircase_span > 0.5 && staircase_span < 1.0)) fail("staircase_span must be in (0.5, 1)");
  if (!(fragmentation_density > 0.0)) fail("fragmentation_density must be positive");
  if (!(cl_shortening_factor > 0.0 && cl_shortening_factor < 1.0)) {
    fail("cl_shortening_factor must be in (0, 1)");
  }
}

SynthRecording synth_recording(const SynthConfig& c, const std::string& patient_id,
                               const std::string& acquisition_id, Rng& rng) {
  const double fs = c.sample_rate_hz;
  const std::size_t length = std::size_t(std::llround(rng.uniform(c.min_duration_s, c.max_duration_s) * fs));
  const double cycle = rng.uniform(c.min_cycle_ms, c.max_cycle_ms) * fs / 1000.0;  // samples
  const double scale = rng.uniform(0.7, 1.3);
  const double plane_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double max_lag = 0.15 * cycle;

  const std::vector<Episode> episodes = place_episodes(c, length, rng);
  auto driving_episode = [&](double t) -> const Episode* {
    for (const auto& e : episodes) {
      if (e.kind != DriverKind::Entanglement && e.contains(t)) return &e;
    }
    return nullptr;
  };

  // Global beat train; focal and rotor episodes run faster than the background.
  std::vector<Beat> beats;
  for (double t = rng.uniform(0.0, cycle); t < double(length);) {
    const Episode* e = driving_episode(t);
    beats.push_back({t, e});
    double factor = 1.0;
    if (e) factor = e->kind == DriverKind::Focal ? c.focal_rate_factor : c.rotor_rate_factor;
    t += jittered(cycle * factor, c.cycle_jitter, rng);
  }

  // Per-electrode activation time of every beat.
  std::vector<std::array<double, kElectrodes>> activation(beats.size());
  for (std::size_t b = 0; b < beats.size(); ++b) {
    const Episode* e = beats[b].episode;
    for (std::size_t s = 0; s < kSplines; ++s) {
      for (std::size_t el = 0; el < kElectrodesPerSpline; ++el) {
        const Point p = electrode_position(s, el);
        double delay;
        if (e && e->kind == DriverKind::Rotational) {
          const long steps = (e->rotor_direction * (long(s) - long(e->rotor_origin)) + 5L * kSplines) % long(kSplines);
          delay = e->rotor_span * cycle * double(steps) / double(kSplines - 1) + 0.01 * cycle * double(el);
        } else if (e && e->kind == DriverKind::Focal) {
          const Point src = electrode_position(e->focal_spline, e->focal_electrode);
          delay = 0.1 * cycle * std::hypot(p.x - src.x, p.y - src.y);
        } else {
          const double proj = p.x * std::cos(plane_angle) + p.y * std::sin(plane_angle);
          delay = max_lag * 0.5 * (proj + 1.0);
        }
        delay += rng.normal() * 0.001 * fs;
        activation[b][catheter::unipolar_channel(s, el)] = beats[b].time + std::max(0.0, delay);
      }
    }
  }

  auto in_focal_cluster = [](const Episode& e, std::size_t s, std::size_t el) {
    return s == e.focal_spline && (el == e.focal_electrode || el == e.focal_electrode + 1);
  };

  SynthRecording out;
  out.unipolar = {patient_id, acquisition_id, Polarity::Unipolar, Tensor(Shape{kElectrodes, length}),
                  c.sample_rate_hz};
  out.bipolar = {patient_id, acquisition_id, Polarity::Bipolar, Tensor(Shape{kPairs, length}),
                 c.sample_rate_hz};

  // Unipolar: RS deflections, QS on the focal cluster, slow wander and noise.
  for (std::size_t s = 0; s < kSplines; ++s) {
    for (std::size_t el = 0; el < kElectrodesPerSpline; ++el) {
      const std::size_t ch = catheter::unipolar_channel(s, el);
      std::vector<float> x(length, 0.0f);
      const double amp = rng.uniform(0.8, 1.4) * scale;
      const double sigma = 6.0 * rng.uniform(0.85, 1.15);
      const double depth = c.qs_depth_mv * scale;
      for (std::size_t b = 0; b < beats.size(); ++b) {
        const Episode* e = beats[b].episode;
        if (e && e->kind == DriverKind::Focal && in_focal_cluster(*e, s, el)) {
          add_wave(x, activation[b][ch], fs, 4.0 * 6.0, depth * rng.uniform(0.9, 1.1), qs_shape(6.0));
        } else {
          add_wave(x, activation[b][ch], fs, 5.0 * sigma, amp, rs_shape(sigma));
        }
      }
      const double wander_hz = rng.uniform(0.2, 0.5), wander_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t n = 0; n < length; ++n) {
        x[n] += static_cast<float>(0.05 * std::sin(2.0 * std::numbers::pi * wander_hz * double(n) / fs + wander_phase) +
                                   c.noise_mv * rng.normal());
      }
      std::copy(x.begin(), x.end(), out.unipolar.samples.data() + ch * length);
    }
  }

  // Bipolar: one sharp spike per discrete activation at the mean time of the pair.
  const Episode* entangled = nullptr;
  for (const auto& e : episodes) {
    if (e.kind == DriverKind::Entanglement) entangled = &e;
  }
  std::vector<std::size_t> neighbors;
  if (entangled) neighbors = catheter::bipolar_neighbors(entangled->hfca_channel);

  for (std::size_t s = 0; s < kSplines; ++s) {
    for (std::size_t j = 0; j < kPairsPerSpline; ++j) {
      const std::size_t ch = catheter::bipolar_channel(s, j);
      std::vector<float> x(length, 0.0f);
      const double amp = rng.uniform(0.5, 1.1) * scale * (rng.bernoulli(0.5) ? 1.0 : -1.0);
      const double sigma = 2.5 * rng.uniform(0.85, 1.15);
      const bool is_hfca = entangled && ch == entangled->hfca_channel;
      const bool is_neighbor =
          entangled && std::find(neighbors.begin(), neighbors.end(), ch) != neighbors.end();

      std::optional<double> first_replaced;
      for (std::size_t b = 0; b < beats.size(); ++b) {
        const double t = 0.5 * (activation[b][catheter::unipolar_channel(s, j)] +
                                activation[b][catheter::unipolar_channel(s, j + 1)]);
        if ((is_hfca || is_neighbor) && entangled->contains(t)) {
          if (!first_replaced) first_replaced = t;
          continue;
        }
        add_wave(x, t, fs, 5.0 * sigma, amp, spike_shape(sigma));
      }
      if (is_neighbor) {
        // Discrete activations continue at a shortened cycle length.
        double t = first_replaced.value_or(double(entangled->start));
        while (t < double(entangled->end)) {
          add_wave(x, t, fs, 5.0 * sigma, amp, spike_shape(sigma));
          t += jittered(cycle * c.cl_shortening_factor, c.cycle_jitter, rng);
        }
      }
      if (is_hfca) {
        // Fragmentation: Hann-windowed bursts of high-frequency oscillation with short gaps.
        double t = double(entangled->start) + rng.uniform(0.0, 0.03) * fs;
        while (t < double(entangled->end)) {
          const double half_ms = 0.5 * rng.uniform(60.0, 150.0);
          const double f_hz = c.fragmentation_density * rng.uniform(0.9, 1.5);
          const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double a = std::abs(amp) * rng.uniform(0.5, 1.0);
          const double center = t + half_ms * fs / 1000.0;
          add_wave(x, center, fs, half_ms, a, [&](double tm) {
            const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * tm / half_ms));
            return w * std::sin(2.0 * std::numbers::pi * f_hz * tm / 1000.0 + phase);
          });
          t = center + (half_ms + rng.uniform(20.0, 80.0)) * fs / 1000.0;
        }
      }
      for (std::size_t n = 0; n < length; ++n) x[n] += static_cast<float>(c.noise_mv * rng.normal());
      std::copy(x.begin(), x.end(), out.bipolar.samples.data() + ch * length);
    }
  }

  for (const auto& e : episodes) out.annotations.push_back({e.kind, e.start, e.end});
  return out;
}

std::string patient_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%04zu", index + 1);
  return buf;
}

std::string acquisition_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "A%02zu", index + 1);
  return buf;
}

std::vector<SynthRecording> synth_corpus(const SynthConfig& config) {
  config.validate();
  const std::size_t total = config.patients * config.recordings_per_patient;
  std::vector<SynthRecording> out(total);
  const Rng root(config.seed);
  parallel_for(total, [&](std::size_t i) {
    const std::string patient = patient_name(i / config.recordings_per_patient);
    const std::string acquisition = acquisition_name(i % config.recordings_per_patient);
    Rng rng = root.fork(patient + "/" + acquisition);
    out[i] = synth_recording(config, patient, acquisition, rng);
  });
  return out;
}

}  // namespace egmlatent::data
