#include "egmlatent/data/detectors.hpp"

#include <algorithm>
#include <cmath>

namespace egmlatent::data {

namespace {

std::span<const float> channel(const EgmRecording& r, std::size_t ch) {
  return std::span<const float>(r.samples.data() + ch * r.length(), r.length());
}

std::size_t ms_to_samples(double ms, int fs) {
  return std::max<std::size_t>(1, std::size_t(std::llround(ms * fs / 1000.0)));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  return m;
}

}  // namespace

std::vector<std::size_t> detect_activations(std::span<const float> x, std::size_t begin,
                                            std::size_t end, double threshold,
                                            std::size_t refractory) {
  std::vector<std::size_t> out;
  end = std::min(end, x.size());
  std::size_t i = begin;
  while (i < end) {
    if (std::abs(x[i]) <= threshold) {
      ++i;
      continue;
    }
    const std::size_t stop = std::min(end, i + refractory / 2 + 1);
    std::size_t peak = i;
    for (std::size_t k = i; k < stop; ++k) {
      if (std::abs(x[k]) > std::abs(x[peak])) peak = k;
    }
    out.push_back(peak);
    i = peak + refractory;
  }
  return out;
}

double median_cycle(const std::vector<std::size_t>& activations) {
  std::vector<double> gaps;
  for (std::size_t i = 1; i < activations.size(); ++i) gaps.push_back(double(activations[i] - activations[i - 1]));
  return median(std::move(gaps));
}

std::vector<QsComplex> find_qs_complexes(std::span<const float> x, int fs, std::size_t begin,
                                         std::size_t end, const DetectorParams& p) {
  std::vector<QsComplex> out;
  end = std::min(end, x.size());
  const std::size_t base_half = ms_to_samples(60.0, fs);
  const std::size_t r_window = ms_to_samples(40.0, fs);
  const std::size_t refractory = ms_to_samples(50.0, fs);

  auto local_baseline = [&](std::size_t t) {
    const std::size_t lo = t > base_half ? t - base_half : 0;
    const std::size_t hi = std::min(x.size(), t + base_half + 1);
    return median(std::vector<double>(x.begin() + lo, x.begin() + hi));
  };

  std::size_t i = begin;
  while (i < end) {
    if (x[i] > -p.qs_min_depth_mv * 0.5) {
      ++i;
      continue;
    }
    // Deepest point of this excursion.
    std::size_t trough = i;
    const std::size_t stop = std::min(end, i + refractory);
    for (std::size_t k = i; k < stop; ++k) {
      if (x[k] < x[trough]) trough = k;
    }
    const double base = local_baseline(trough);
    const double depth = base - x[trough];
    if (depth >= p.qs_min_depth_mv) {
      const std::size_t lo = trough > r_window ? trough - r_window : 0;
      double r_peak = 0.0;
      for (std::size_t k = lo; k < trough; ++k) r_peak = std::max(r_peak, double(x[k]) - base);
      if (r_peak < p.qs_max_r_ratio * depth) out.push_back({trough, depth});
    }
    i = trough + refractory;
  }
  return out;
}

bool focal_detected(const EgmRecording& unipolar, std::size_t begin, std::size_t end,
                    const DetectorParams& p) {
  const int fs = unipolar.sample_rate_hz;
  const double lo = p.qs_min_spacing_ms * fs / 1000.0, hi = p.qs_max_spacing_ms * fs / 1000.0;
  for (std::size_t ch = 0; ch < unipolar.channels(); ++ch) {
    const auto qs = find_qs_complexes(channel(unipolar, ch), fs, begin, end, p);
    for (std::size_t i = 1; i < qs.size(); ++i) {
      const double gap = double(qs[i].trough - qs[i - 1].trough);
      if (gap >= lo && gap <= hi) return true;
    }
  }
  return false;
}

bool rotational_detected(const EgmRecording& bipolar, std::size_t begin, std::size_t end,
                         const DetectorParams& p) {
  const int fs = bipolar.sample_rate_hz;
  const auto ring = catheter::circular_bipolar_channels();
  const std::size_t refractory = ms_to_samples(p.activation_refractory_ms, fs);
  std::vector<std::vector<std::size_t>> acts;
  for (std::size_t ch : ring) {
    acts.push_back(detect_activations(channel(bipolar, ch), begin, end, p.activation_threshold_mv, refractory));
  }
  std::vector<double> cycles;
  for (const auto& a : acts) cycles.push_back(median_cycle(a));
  const double cycle = median(cycles);
  if (cycle <= 0.0) return false;

  const std::size_t n = ring.size();
  for (std::size_t origin = 0; origin < n; ++origin) {
    for (int dir : {1, -1}) {
      int run = 0;
      for (std::size_t t0 : acts[origin]) {
        std::size_t prev = t0;
        bool chained = true;
        for (std::size_t step = 1; step < n && chained; ++step) {
          const std::size_t s = std::size_t((long(origin) + dir * long(step) + long(n)) % long(n));
          const auto& a = acts[s];
          auto it = std::upper_bound(a.begin(), a.end(), prev);
          if (it == a.end() || double(*it - prev) > p.staircase_max_step * cycle) {
            chained = false;
          } else {
            prev = *it;
          }
        }
        chained = chained && double(prev - t0) > p.staircase_min_span * cycle;
        run = chained ? run + 1 : 0;
        if (run >= 2) return true;
      }
    }
  }
  return false;
}

int entanglement_index(const EgmRecording& bipolar, std::size_t begin, std::size_t end,
                       const DetectorParams& p) {
  const int fs = bipolar.sample_rate_hz;
  end = std::min(end, bipolar.length());
  if (end <= begin) return 0;
  const double seconds = double(end - begin) / fs;
  const std::size_t n = bipolar.channels();

  std::vector<bool> hfca(n, false);
  std::vector<double> cycle(n, 0.0);
  const std::size_t refractory = ms_to_samples(p.activation_refractory_ms, fs);
  const std::size_t hfca_refractory = ms_to_samples(p.hfca_refractory_ms, fs);
  for (std::size_t ch = 0; ch < n; ++ch) {
    const auto x = channel(bipolar, ch);
    const auto fine = detect_activations(x, begin, end, p.hfca_threshold_mv, hfca_refractory);
    hfca[ch] = double(fine.size()) / seconds >= p.hfca_min_rate_hz;
    cycle[ch] = median_cycle(detect_activations(x, begin, end, p.activation_threshold_mv, refractory));
  }

  int index = 0;
  for (std::size_t ch = 0; ch < n; ++ch) {
    if (!hfca[ch]) continue;
    const auto near = catheter::bipolar_neighbors(ch);
    std::vector<double> reference;
    for (std::size_t other = 0; other < n; ++other) {
      const bool is_near = std::find(near.begin(), near.end(), other) != near.end();
      if (other != ch && !is_near && !hfca[other] && cycle[other] > 0.0) reference.push_back(cycle[other]);
    }
    const double ref = median(reference);
    if (ref <= 0.0) continue;
    for (std::size_t nb : near) {
      if (!hfca[nb] && cycle[nb] > 0.0 && cycle[nb] < p.shortening_ratio * ref) ++index;
    }
  }
  return index;
}

bool driver_detected(DriverKind kind, const EgmRecording& unipolar, const EgmRecording& bipolar,
                     std::size_t begin, std::size_t end, const DetectorParams& p) {
  switch (kind) {
    case DriverKind::Focal: return focal_detected(unipolar, begin, end, p);
    case DriverKind::Rotational: return rotational_detected(bipolar, begin, end, p);
    case DriverKind::Entanglement: return entanglement_index(bipolar, begin, end, p) > 0;
  }
  return false;
}

}  // namespace egmlatent::data
