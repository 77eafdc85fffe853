#include <cmath>

#include "doctest.h"
#include "egmlatent/core/error.hpp"
#include "egmlatent/data/detectors.hpp"
#include "egmlatent/data/synth.hpp"

using namespace egmlatent;
using namespace egmlatent::data;

namespace {

SynthConfig small_config() {
  SynthConfig c;
  c.patients = 12;
  c.recordings_per_patient = 2;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("synthetic recordings have catheter shapes and legal durations") {
  const auto corpus = synth_corpus(small_config());
  REQUIRE(corpus.size() == 24);
  for (const auto& r : corpus) {
    CHECK(r.unipolar.channels() == 20);
    CHECK(r.bipolar.channels() == 15);
    CHECK(r.unipolar.length() == r.bipolar.length());
    CHECK(r.unipolar.duration_s() >= 15.0);
    CHECK(r.unipolar.duration_s() <= 30.0);
    CHECK(r.unipolar.samples.all_finite());
    CHECK(r.bipolar.samples.all_finite());
    for (const auto& a : r.annotations) CHECK(a.valid_for(r.bipolar.length()));
  }
  CHECK(corpus[0].unipolar.patient_id == "P0001");
  CHECK(corpus[3].bipolar.patient_id == "P0002");
  CHECK(corpus[3].bipolar.acquisition_id == "A02");
}

TEST_CASE("zero injection probabilities give unannotated recordings") {
  SynthConfig c = small_config();
  c.p_focal = c.p_rotational = c.p_entanglement = 0.0;
  for (const auto& r : synth_corpus(c)) CHECK(r.annotations.empty());
}

TEST_CASE("same seed, same corpus") {
  SynthConfig c = small_config();
  c.patients = 3;
  const auto a = synth_corpus(c), b = synth_corpus(c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].unipolar.samples == b[i].unipolar.samples);
    CHECK(a[i].bipolar.samples == b[i].bipolar.samples);
    CHECK(a[i].annotations == b[i].annotations);
  }
  c.seed += 1;
  CHECK_FALSE(synth_corpus(c)[0].bipolar.samples == a[0].bipolar.samples);
}

TEST_CASE("forced focal episode shows repeated QS deflections one cycle apart") {
  SynthConfig c = small_config();
  c.p_focal = 1.0;
  c.p_rotational = c.p_entanglement = 0.0;
  Rng rng(99);
  const auto r = synth_recording(c, "P1", "A1", rng);
  REQUIRE(r.annotations.size() == 1);
  const auto& a = r.annotations[0];
  CHECK(a.kind == DriverKind::Focal);
  bool found = false;
  for (std::size_t ch = 0; ch < 20 && !found; ++ch) {
    std::span<const float> x(r.unipolar.samples.data() + ch * r.unipolar.length(), r.unipolar.length());
    const auto qs = find_qs_complexes(x, c.sample_rate_hz, a.start_sample, a.end_sample);
    for (std::size_t i = 1; i < qs.size(); ++i) {
      const double gap_ms = double(qs[i].trough - qs[i - 1].trough);
      if (gap_ms >= c.focal_rate_factor * c.min_cycle_ms * 0.85 && gap_ms <= c.max_cycle_ms * 1.15) found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("every annotation is confirmed by its detector; baseline fires nothing") {
  const auto corpus = synth_corpus(small_config());
  int annotations = 0;
  for (const auto& r : corpus) {
    for (const auto& a : r.annotations) {
      ++annotations;
      INFO(r.bipolar.patient_id << "/" << r.bipolar.acquisition_id << " " << to_string(a.kind));
      CHECK(driver_detected(a.kind, r.unipolar, r.bipolar, a.start_sample, a.end_sample));
    }
  }
  CHECK(annotations > 20);

  SynthConfig c = small_config();
  c.p_focal = c.p_rotational = c.p_entanglement = 0.0;
  for (const auto& r : synth_corpus(c)) {
    for (DriverKind k : kAllDrivers) {
      INFO(r.bipolar.patient_id << " " << to_string(k));
      CHECK_FALSE(driver_detected(k, r.unipolar, r.bipolar, 0, r.bipolar.length()));
    }
  }
}

TEST_CASE("entanglement index counts shortened neighbours") {
  SynthConfig c = small_config();
  c.p_entanglement = 1.0;
  c.p_focal = c.p_rotational = 0.0;
  Rng rng(5);
  const auto r = synth_recording(c, "P1", "A1", rng);
  REQUIRE(r.annotations.size() == 1);
  const auto& a = r.annotations[0];
  const int inside = entanglement_index(r.bipolar, a.start_sample, a.end_sample);
  CHECK(inside >= 1);
  CHECK(inside <= 4);
  CHECK(entanglement_index(r.bipolar, 0, a.start_sample) == 0);
}

TEST_CASE("activation detector finds isolated spikes once each") {
  std::vector<float> x(1000, 0.0f);
  for (std::size_t t : {100u, 300u, 520u}) {
    x[t - 4] = -0.4f;
    x[t] = 1.0f;
    x[t + 4] = -0.4f;
  }
  CHECK(detect_activations(x, 0, 1000, 0.15, 50) == std::vector<std::size_t>{100, 300, 520});
  CHECK(detect_activations(x, 200, 1000, 0.15, 50) == std::vector<std::size_t>{300, 520});
  CHECK(median_cycle({100, 300, 520}) == doctest::Approx(210.0));
}

TEST_CASE("synth config validation") {
  auto rejects = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Configuration;
    }
    return false;
  };
  CHECK(rejects([](SynthConfig& c) { c.cl_shortening_factor = 1.0; }));
  CHECK(rejects([](SynthConfig& c) { c.p_focal = 1.5; }));
  CHECK(rejects([](SynthConfig& c) { c.p_rotational = -0.1; }));
  CHECK(rejects([](SynthConfig& c) { c.sample_rate_hz = 300; }));
  CHECK(rejects([](SynthConfig& c) { c.staircase_span = 0.4; }));
  CHECK_NOTHROW(SynthConfig{}.validate());
}
