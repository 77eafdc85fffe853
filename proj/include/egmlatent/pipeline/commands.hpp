#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "egmlatent/cae/checkpoint.hpp"
#include "egmlatent/classify/features.hpp"
#include "egmlatent/classify/metrics.hpp"
#include "egmlatent/classify/models.hpp"
#include "egmlatent/core/error.hpp"
#include "egmlatent/pipeline/run_config.hpp"

namespace egmlatent::pipeline {

/// A resolved run configuration plus its hash and log sink.
class Context {
 public:
  Context(RunConfig config, std::ostream& log);

  const RunConfig& config() const noexcept { return config_; }
  const std::string& hash() const noexcept { return hash_; }
  std::ostream& log() const noexcept { return *log_; }
  /// {"config_hash", "seed", "stage"} attached to every output.
  nlohmann::json provenance(std::string_view stage) const;

  fs::path corpus_dir() const { return config_.paths.resolve(config_.paths.corpus); }
  fs::path dataset_dir() const { return config_.paths.resolve(config_.paths.dataset); }
  fs::path checkpoint_path(data::Polarity p) const;
  fs::path embeddings_dir() const { return config_.paths.resolve(config_.paths.embeddings); }
  fs::path models_dir(data::DriverKind task) const;
  fs::path reports_dir() const { return config_.paths.resolve(config_.paths.reports); }
  fs::path figures_dir() const { return config_.paths.resolve(config_.paths.figures); }

 private:
  RunConfig config_;
  std::string hash_;
  std::ostream* log_;
};

/// Exclusive lock file <dir>/.egmlatent.lock for the lifetime of the object.
/// An existing lock is an I/O error.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  fs::path path_;
};

std::string dataset_name(data::Split split, data::Polarity polarity);

struct SynthSummary {
  std::size_t patients = 0, recordings = 0;
  std::map<std::string, std::size_t> episodes;  // per driver kind
};
SynthSummary cmd_synth(const Context& ctx);

struct PreprocessSummary {
  std::map<std::string, std::size_t> segments;  // per dataset name
  std::map<std::string, std::size_t> patients;  // per split
};
PreprocessSummary cmd_preprocess(const Context& ctx);

struct TrainCaeSummary {
  std::size_t epochs_run = 0, best_epoch = 0;
  double best_val_loss = 0.0, test_mse = 0.0, untrained_test_mse = 0.0;
};
TrainCaeSummary cmd_train_cae(const Context& ctx, data::Polarity polarity);

/// Embeddings for every split of one polarity.
void cmd_embed(const Context& ctx, data::Polarity polarity);

/// Embeddings of one split with the labels of one task.
classify::EmbeddingSet load_embedding_set(const Context& ctx, data::Split split, data::DriverKind task);

struct TrainClfSummary {
  classify::Family selected = classify::Family::Logistic;
  std::map<std::string, double> cv_auc;  // best mean CV AUC per family
  std::size_t training_rows = 0;
};
TrainClfSummary cmd_train_clf(const Context& ctx, data::DriverKind task);

/// Metrics of the selected classifier on the test split.
classify::MetricsReport cmd_eval(const Context& ctx, data::DriverKind task);

/// Number of projected points.
std::size_t cmd_tsne(const Context& ctx, data::DriverKind task);

/// Flagged window count per annotated test recording.
std::map<std::string, std::size_t> cmd_annotate(const Context& ctx, data::DriverKind task,
                                                const std::string& recording = {});

/// The trained online path of one task: checkpoint, standardization and the
/// selected classifier, loaded once.
struct OnlineModel {
  cae::CaeCheckpoint checkpoint;
  classify::StandardizationParams standardization;
  classify::ClassifierModel classifier;
};
OnlineModel load_online_model(const Context& ctx, data::DriverKind task);

struct StageSeconds {
  double preprocess = 0.0, encode = 0.0, classify = 0.0;
};
/// Per-window probabilities for one recording at its native rate.
std::vector<double> classify_recording(const OnlineModel& model, const data::EgmRecording& recording,
                                       StageSeconds* seconds = nullptr);

struct BenchReport {
  std::size_t signals_timed = 0;
  double mean_seconds = 0.0, p95_seconds = 0.0;
  StageSeconds stage_mean;
};
inline constexpr double kReferenceSecondsPerSignal = 0.0064;
BenchReport cmd_bench(const Context& ctx, std::size_t signals);

/// Process exit status for an error: 2 configuration, 3 missing artifact,
/// 4 degenerate data, 5 divergence, 1 anything else.
int exit_code(ErrorKind kind) noexcept;

/// Keeps large freed blocks on the heap (glibc) so per-segment buffers are not
/// returned to the kernel and faulted back in on every call. Call once at startup.
void tune_allocator();

}  // namespace egmlatent::pipeline
