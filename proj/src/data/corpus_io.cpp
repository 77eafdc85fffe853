#include "egmlatent/data/corpus_io.hpp"

#include <fstream>

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/tensor_io.hpp"

namespace egmlatent::data {

using nlohmann::json;

nlohmann::json annotation_to_json(const DriverAnnotation& a) {
  return {{"kind", std::string(to_string(a.kind))}, {"start_sample", a.start_sample}, {"end_sample", a.end_sample}};
}

DriverAnnotation annotation_from_json(const nlohmann::json& j) {
  try {
    return {driver_from_string(j.at("kind").get<std::string>()), j.at("start_sample").get<std::size_t>(),
            j.at("end_sample").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, std::string("bad annotation: ") + e.what());
  }
}

std::string recording_stem(const EgmRecording& r) {
  return r.patient_id + "_" + r.acquisition_id + "_" + std::string(to_string(r.polarity));
}

fs::path write_recording(const fs::path& dir, const EgmRecording& recording,
                         const std::vector<DriverAnnotation>& annotations) {
  recording.validate();
  fs::create_directories(dir);
  const std::string stem = recording_stem(recording);
  save_tensor(dir / (stem + ".egmt"), recording.samples);
  json anns = json::array();
  for (const auto& a : annotations) anns.push_back(annotation_to_json(a));
  const json sidecar = {{"patient_id", recording.patient_id},
                        {"acquisition_id", recording.acquisition_id},
                        {"polarity", std::string(to_string(recording.polarity))},
                        {"sample_rate_hz", recording.sample_rate_hz},
                        {"samples_file", stem + ".egmt"},
                        {"annotations", anns}};
  const fs::path path = dir / (stem + ".json");
  write_json(path, sidecar);
  return path;
}

RecordingFile read_recording(const fs::path& sidecar) {
  const json j = read_json(sidecar);
  RecordingFile out;
  try {
    out.recording.patient_id = j.at("patient_id").get<std::string>();
    out.recording.acquisition_id = j.at("acquisition_id").get<std::string>();
    out.recording.polarity = polarity_from_string(j.at("polarity").get<std::string>());
    out.recording.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    const std::string file = j.value("samples_file", recording_stem(out.recording) + ".egmt");
    const fs::path tensor_path = sidecar.parent_path() / file;
    require_file(tensor_path);
    out.recording.samples = load_tensor(tensor_path);
    for (const auto& a : j.at("annotations")) out.annotations.push_back(annotation_from_json(a));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, sidecar.string() + ": " + e.what());
  }
  out.recording.validate();
  for (const auto& a : out.annotations) {
    if (!a.valid_for(out.recording.length())) {
      throw Error(ErrorKind::Corruption, sidecar.string() + ": annotation outside the recording");
    }
  }
  return out;
}

std::vector<std::uint8_t> SegmentDataset::labels(DriverKind kind) const {
  std::vector<std::uint8_t> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i].labels.get(kind) ? 1 : 0;
  return out;
}

std::vector<std::string> SegmentDataset::patient_ids() const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.patient_id);
  return out;
}

Tensor SegmentDataset::segment(std::size_t i) const {
  const std::size_t c = data.dim(1), w = data.dim(2);
  const float* src = data.data() + i * c * w;
  return Tensor(Shape{c, w}, std::vector<float>(src, src + c * w));
}

SegmentDataset make_dataset(Polarity polarity, std::vector<Segment> segments) {
  SegmentDataset out;
  out.polarity = polarity;
  const std::size_t c = channel_count(polarity);
  out.data = Tensor(Shape{segments.size(), c, kWindowSamples});
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].data.shape() != Shape{c, kWindowSamples}) {
      throw Error(ErrorKind::Dimension, "segment shape " + shape_string(segments[i].data.shape()));
    }
    std::copy(segments[i].data.values().begin(), segments[i].data.values().end(),
              out.data.data() + i * c * kWindowSamples);
    segments[i].data = Tensor();
  }
  out.rows = std::move(segments);
  return out;
}

void write_dataset(const fs::path& dir, const std::string& name, const SegmentDataset& dataset,
                   const nlohmann::json& extra) {
  fs::create_directories(dir);
  save_tensor(dir / (name + ".egmt"), dataset.data);
  json rows = json::array();
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const Segment& s = dataset.rows[i];
    rows.push_back({{"index", i},
                    {"patient_id", s.patient_id},
                    {"source_recording_id", s.source_recording_id},
                    {"window_index", s.window_index},
                    {"rotational", s.labels.rotational},
                    {"focal", s.labels.focal},
                    {"entanglement", s.labels.entanglement}});
  }
  json manifest = extra;
  manifest["polarity"] = std::string(to_string(dataset.polarity));
  manifest["segments"] = rows;
  write_json(dir / (name + ".labels.json"), manifest);
}

nlohmann::json read_dataset_manifest(const fs::path& dir, const std::string& name) {
  return read_json(dir / (name + ".labels.json"));
}

SegmentDataset read_dataset(const fs::path& dir, const std::string& name) {
  const json manifest = read_dataset_manifest(dir, name);
  const fs::path tensor_path = dir / (name + ".egmt");
  require_file(tensor_path);
  SegmentDataset out;
  try {
    out.polarity = polarity_from_string(manifest.at("polarity").get<std::string>());
    for (const auto& r : manifest.at("segments")) {
      Segment s;
      s.patient_id = r.at("patient_id").get<std::string>();
      s.source_recording_id = r.value("source_recording_id", "");
      s.window_index = r.value("window_index", std::size_t(0));
      s.labels.rotational = r.at("rotational").get<bool>();
      s.labels.focal = r.at("focal").get<bool>();
      s.labels.entanglement = r.at("entanglement").get<bool>();
      out.rows.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, (dir / name).string() + " manifest: " + e.what());
  }
  out.data = load_tensor(tensor_path);
  const Shape want{out.rows.size(), channel_count(out.polarity), kWindowSamples};
  if (out.data.shape() != want) {
    throw Error(ErrorKind::Corruption, tensor_path.string() + " has shape " + shape_string(out.data.shape()) +
                                           ", manifest implies " + shape_string(want));
  }
  return out;
}

nlohmann::json normalization_to_json(const NormalizationParams& p) {
  return {{"polarity", std::string(to_string(p.polarity))}, {"p_low", p.p_low}, {"p_high", p.p_high}};
}

NormalizationParams normalization_from_json(const nlohmann::json& j) {
  try {
    NormalizationParams p;
    p.polarity = polarity_from_string(j.at("polarity").get<std::string>());
    p.p_low = j.at("p_low").get<float>();
    p.p_high = j.at("p_high").get<float>();
    if (!(p.p_low < p.p_high)) throw Error(ErrorKind::DegenerateData, "stored p_low >= p_high");
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, std::string("normalization params: ") + e.what());
  }
}

void require_file(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingArtifact, "missing artifact: " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

}  // namespace egmlatent::data
