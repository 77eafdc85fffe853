#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "egmlatent/cae/config.hpp"
#include "egmlatent/classify/models.hpp"
#include "egmlatent/core/rng.hpp"
#include "egmlatent/data/preprocess.hpp"
#include "egmlatent/data/synth.hpp"
#include "egmlatent/viz/tsne.hpp"

namespace egmlatent::pipeline {

namespace fs = std::filesystem;

struct RunPaths {
  fs::path out = "run";
  // Relative entries resolve against `out`.
  fs::path corpus = "corpus", dataset = "dataset", checkpoints = "checkpoints", embeddings = "embeddings",
           models = "models", reports = "reports", figures = "figures";

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : out / p; }
};

struct ClassifierSettings {
  std::vector<double> logistic_C{0.1, 1.0, 10.0};
  std::vector<std::size_t> knn_k{3, 5, 7, 11, 13, 15};
  std::vector<std::size_t> gbdt_estimators{100, 200};
  std::vector<std::size_t> gbdt_depth{3, 6, 9};
  std::vector<double> gbdt_shrinkage{0.1};
  std::size_t folds = 5;
  double threshold = 0.5;

  std::vector<classify::Hyperparams> grid(classify::Family family) const;
};

struct TsneSettings {
  viz::TsneConfig tsne;  // seed is derived from the run seed
  std::size_t per_class = 500;
};

struct AnnotateSettings {
  double threshold = 0.5;
  std::size_t max_recordings = 2;
};

struct BenchSettings {
  std::size_t signals = 20;
  double duration_s = 30.0;
};

struct RunConfig {
  RunPaths paths;
  std::uint64_t seed = 1;
  data::SynthConfig synth;  // seed is derived from the run seed
  cae::CaeConfig cae;       // polarity is chosen per command
  data::SplitFractions split;
  ClassifierSettings classifiers;
  TsneSettings tsne;
  AnnotateSettings annotate;
  BenchSettings bench;

  /// Fails with a configuration error on invalid nested sections.
  void validate() const;
  /// Seed of a named stochastic stage; every stage derives from `seed`.
  std::uint64_t stage_seed(std::string_view stage) const;
  data::SynthConfig synth_config() const;
  cae::CaeConfig cae_config(data::Polarity polarity) const;
};

nlohmann::json synth_config_to_json(const data::SynthConfig& c);
data::SynthConfig synth_config_from_json(const nlohmann::json& j, data::SynthConfig base = {});

/// Everything except the paths section.
nlohmann::json experiment_json(const RunConfig& c);
nlohmann::json run_config_to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are a configuration error.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const fs::path& path);

/// 16 hex digits of FNV-1a over the canonical experiment JSON. Output
/// locations are excluded, so reruns into another directory hash the same.
std::string config_hash(const RunConfig& c);

}  // namespace egmlatent::pipeline
