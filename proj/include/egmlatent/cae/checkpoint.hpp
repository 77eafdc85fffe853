#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "egmlatent/cae/model.hpp"
#include "egmlatent/cae/trainer.hpp"
#include "egmlatent/data/corpus_io.hpp"
#include "egmlatent/data/preprocess.hpp"

namespace egmlatent::cae {

// "EGMC" file: magic, u16 version, u32 length + JSON header (config,
// normalization, training metadata), u32 record count, then per record a
// u16 name length, the name, and an EGMT tensor.
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CaeCheckpoint {
  CaeModel model;
  data::NormalizationParams normalization;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EpochReport> history;
  nlohmann::json provenance = nlohmann::json::object();
};

CaeCheckpoint make_checkpoint(TrainResult result, const data::NormalizationParams& normalization);

void write_checkpoint(std::ostream& out, const CaeCheckpoint& checkpoint);
/// Bad magic or truncation is a corruption error; another format version is a version error.
CaeCheckpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const CaeCheckpoint& checkpoint);
CaeCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Eval-mode latent codes in manifest row order. A dataset of the other
/// polarity is a configuration error.
Tensor embed_dataset(const CaeCheckpoint& checkpoint, const data::SegmentDataset& dataset);

/// epoch,train_loss,val_loss with 17 significant digits.
std::string loss_history_csv(const std::vector<EpochReport>& history);

}  // namespace egmlatent::cae
