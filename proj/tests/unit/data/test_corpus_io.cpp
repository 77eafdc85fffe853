#include <fstream>

#include "doctest.h"
#include "egmlatent/core/error.hpp"
#include "egmlatent/data/corpus_io.hpp"
#include "egmlatent/data/synth.hpp"
#include "test_support.hpp"

using namespace egmlatent;
using namespace egmlatent::data;

TEST_CASE("recording and sidecar round trip") {
  const auto dir = testing::scratch_dir("recording_io");
  SynthConfig c;
  c.p_focal = c.p_rotational = c.p_entanglement = 1.0;
  Rng rng(3);
  const auto r = synth_recording(c, "P0007", "A01", rng);
  const auto sidecar = write_recording(dir, r.bipolar, r.annotations);
  CHECK(sidecar.filename() == "P0007_A01_bipolar.json");
  const auto back = read_recording(sidecar);
  CHECK(back.recording.samples == r.bipolar.samples);
  CHECK(back.recording.patient_id == "P0007");
  CHECK(back.recording.polarity == Polarity::Bipolar);
  CHECK(back.recording.sample_rate_hz == 1000);
  CHECK(back.annotations == r.annotations);

  const auto j = read_json(sidecar);
  CHECK(j.at("annotations").size() == 3);
  CHECK(j.at("annotations")[0].contains("start_sample"));
}

TEST_CASE("sidecar with an annotation past the end is corrupt") {
  const auto dir = testing::scratch_dir("recording_bad");
  EgmRecording rec{"P1", "A1", Polarity::Unipolar, Tensor(Shape{20, 500}), 250};
  const auto path = write_recording(dir, rec, {{DriverKind::Focal, 10, 20}});
  auto j = read_json(path);
  j["annotations"][0]["end_sample"] = 900;
  write_json(path, j);
  try {
    read_recording(path);
    FAIL("expected corruption");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Corruption);
  }
}

TEST_CASE("dataset files round trip with labels") {
  const auto dir = testing::scratch_dir("dataset_io");
  Rng rng(4);
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < 5; ++i) {
    Segment s;
    s.data = testing::random_tensor(Shape{15, 250}, rng);
    s.patient_id = "P" + std::to_string(i % 2);
    s.source_recording_id = "A01";
    s.window_index = i;
    s.labels = {i == 1, i == 2, i >= 3};
    segs.push_back(s);
  }
  const Tensor first = segs[0].data;
  const auto ds = make_dataset(Polarity::Bipolar, segs);
  CHECK(ds.data.shape() == Shape{5, 15, 250});
  CHECK(ds.segment(0) == first);
  write_dataset(dir, "train_bipolar", ds, {{"note", "x"}});
  const auto back = read_dataset(dir, "train_bipolar");
  CHECK(back.data == ds.data);
  CHECK(back.labels(DriverKind::Entanglement) == std::vector<std::uint8_t>{0, 0, 0, 1, 1});
  CHECK(back.labels(DriverKind::Rotational) == std::vector<std::uint8_t>{0, 1, 0, 0, 0});
  CHECK(back.patient_ids()[3] == "P1");
  CHECK(back.rows[4].window_index == 4);
  CHECK(read_dataset_manifest(dir, "train_bipolar").at("note") == "x");

  Segment wrong;
  wrong.data = Tensor(Shape{20, 250});
  CHECK_THROWS_AS(make_dataset(Polarity::Bipolar, {wrong}), Error);
}

TEST_CASE("normalization params survive JSON exactly") {
  const NormalizationParams p{-0.123456789f, 0.987654321f, Polarity::Unipolar};
  const auto q = normalization_from_json(nlohmann::json::parse(normalization_to_json(p).dump()));
  CHECK(q.p_low == p.p_low);
  CHECK(q.p_high == p.p_high);
  CHECK(q.polarity == p.polarity);
}

TEST_CASE("missing files are missing-artifact errors") {
  const auto dir = testing::scratch_dir("missing");
  try {
    read_dataset(dir, "nope");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
  }
}
