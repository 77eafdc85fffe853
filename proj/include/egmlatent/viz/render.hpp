#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "egmlatent/cae/trainer.hpp"
#include "egmlatent/classify/metrics.hpp"
#include "egmlatent/core/tensor.hpp"

namespace egmlatent::viz {

namespace fs = std::filesystem;

// Every renderer writes <stem>.svg plus a data sidecar. A non-empty provenance
// object goes into the SVG <metadata>, a "provenance" JSON field, or a leading
// "# provenance {...}" line in CSV sidecars.

/// C x T original and reconstruction, one stacked trace per channel (original
/// solid blue, reconstruction dashed red). CSV: channel,time_index,original,reconstructed.
/// Unequal shapes are a dimension error.
void render_overlay(const fs::path& stem, const Tensor& original, const Tensor& reconstruction,
                    const nlohmann::json& provenance = nlohmann::json::object());

struct AnnotationWindow {
  std::size_t window_index, start_sample, end_sample;
  double probability;
  bool flagged;
};

/// C x T signal split into consecutive windows of `window` samples; one
/// probability per whole window (dimension error otherwise). Windows with
/// probability >= threshold are shaded. JSON: {"windows": [...]}.
std::vector<AnnotationWindow> render_annotations(const fs::path& stem, const Tensor& signal,
                                                 std::span<const double> probabilities, double threshold,
                                                 std::size_t window = 250,
                                                 const nlohmann::json& provenance = nlohmann::json::object());

/// Train and validation curves. CSV: epoch,train_loss,val_loss.
void render_loss_curve(const fs::path& stem, const std::vector<cae::EpochReport>& history,
                       const nlohmann::json& provenance = nlohmann::json::object());

struct RocSeries {
  std::string name;
  std::vector<classify::RocPoint> points;
  double auc = 0.0;
};
/// One curve per series plus the chance diagonal. CSV: series,threshold,fpr,tpr.
void render_roc(const fs::path& stem, const std::vector<RocSeries>& series,
                const nlohmann::json& provenance = nlohmann::json::object());

/// N x 2 scatter, label 1 red and 0 blue. CSV: index,x,y,label.
void render_scatter(const fs::path& stem, const Tensor& coords, std::span<const std::uint8_t> labels,
                    const std::string& title, const nlohmann::json& provenance = nlohmann::json::object());

}  // namespace egmlatent::viz
