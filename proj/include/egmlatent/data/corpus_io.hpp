#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "egmlatent/data/preprocess.hpp"
#include "egmlatent/data/recording.hpp"

namespace egmlatent::data {

namespace fs = std::filesystem;

struct RecordingFile {
  EgmRecording recording;
  std::vector<DriverAnnotation> annotations;
};

nlohmann::json annotation_to_json(const DriverAnnotation& a);
DriverAnnotation annotation_from_json(const nlohmann::json& j);

/// Writes <stem>.egmt and <stem>.json under dir, stem = patient_acquisition_polarity.
/// Returns the sidecar path.
fs::path write_recording(const fs::path& dir, const EgmRecording& recording,
                         const std::vector<DriverAnnotation>& annotations);
/// Reads a sidecar and its tensor. Annotations outside the recording are a corruption error.
RecordingFile read_recording(const fs::path& sidecar);
std::string recording_stem(const EgmRecording& recording);

/// A split of one polarity: N x C x 250 values plus per-row metadata.
struct SegmentDataset {
  Polarity polarity = Polarity::Bipolar;
  Tensor data;
  std::vector<Segment> rows;  // rows[i].data is left empty; values live in `data`

  std::size_t size() const { return rows.size(); }
  std::vector<std::uint8_t> labels(DriverKind kind) const;
  std::vector<std::string> patient_ids() const;
  /// Row i as a C x 250 tensor.
  Tensor segment(std::size_t i) const;
};

/// Stacks segments (which must share a shape) into a dataset.
SegmentDataset make_dataset(Polarity polarity, std::vector<Segment> segments);

/// Writes <name>.egmt and <name>.labels.json. `extra` is merged into the manifest.
void write_dataset(const fs::path& dir, const std::string& name, const SegmentDataset& dataset,
                   const nlohmann::json& extra = nlohmann::json::object());
SegmentDataset read_dataset(const fs::path& dir, const std::string& name);
/// The manifest object written alongside a dataset.
nlohmann::json read_dataset_manifest(const fs::path& dir, const std::string& name);

nlohmann::json normalization_to_json(const NormalizationParams& p);
NormalizationParams normalization_from_json(const nlohmann::json& j);

nlohmann::json read_json(const fs::path& path);
/// Pretty-printed, key-sorted JSON with a trailing newline, written atomically.
void write_json(const fs::path& path, const nlohmann::json& j);
/// Raises a missing-artifact error naming the file when it does not exist.
void require_file(const fs::path& path);

}  // namespace egmlatent::data
