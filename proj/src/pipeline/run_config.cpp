#include "egmlatent/pipeline/run_config.hpp"

#include <cstdio>
#include <set>

#include "egmlatent/core/error.hpp"
#include "egmlatent/data/corpus_io.hpp"

namespace egmlatent::pipeline {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& section) {
  if (!j.is_object()) throw Error(ErrorKind::Configuration, section + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorKind::Configuration, "unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::vector<classify::Hyperparams> ClassifierSettings::grid(classify::Family family) const {
  std::vector<classify::Hyperparams> out;
  classify::Hyperparams h;
  h.family = family;
  switch (family) {
    case classify::Family::Logistic:
      for (double c : logistic_C) {
        h.C = c;
        out.push_back(h);
      }
      break;
    case classify::Family::Knn:
      for (std::size_t k : knn_k) {
        h.k = k;
        out.push_back(h);
      }
      break;
    case classify::Family::Gbdt:
      for (std::size_t e : gbdt_estimators)
        for (std::size_t d : gbdt_depth)
          for (double s : gbdt_shrinkage) {
            h.n_estimators = e;
            h.max_depth = d;
            h.shrinkage = s;
            out.push_back(h);
          }
      break;
  }
  return out;
}

void RunConfig::validate() const {
  synth_config().validate();
  cae_config(data::Polarity::Bipolar).validate();
  cae_config(data::Polarity::Unipolar).validate();
  if (!(split.train > 0 && split.validation > 0 && split.test > 0) ||
      std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::Configuration, "split fractions must be positive and sum to 1");
  }
  const auto& k = classifiers;
  if (k.folds < 2) throw Error(ErrorKind::Configuration, "classifiers.folds must be >= 2");
  if (k.logistic_C.empty() || k.knn_k.empty() || k.gbdt_estimators.empty() || k.gbdt_depth.empty() ||
      k.gbdt_shrinkage.empty()) {
    throw Error(ErrorKind::Configuration, "every classifier grid needs at least one value");
  }
  for (double c : k.logistic_C)
    if (!(c > 0)) throw Error(ErrorKind::Configuration, "logistic C must be positive");
  for (std::size_t v : k.knn_k)
    if (v < 1) throw Error(ErrorKind::Configuration, "knn k must be >= 1");
  for (std::size_t v : k.gbdt_depth)
    if (v < 1) throw Error(ErrorKind::Configuration, "gbdt depth must be >= 1");
  for (double s : k.gbdt_shrinkage)
    if (!(s > 0 && s <= 1)) throw Error(ErrorKind::Configuration, "gbdt shrinkage must be in (0, 1]");
  if (tsne.tsne.iterations < 250 || !(tsne.tsne.perplexity > 0) || tsne.per_class < 1) {
    throw Error(ErrorKind::Configuration, "tsne needs iterations >= 250, perplexity > 0, per_class >= 1");
  }
  if (bench.signals < 1 || !(bench.duration_s >= 1.0)) {
    throw Error(ErrorKind::Configuration, "bench needs signals >= 1 and duration_s >= 1");
  }
}

std::uint64_t RunConfig::stage_seed(std::string_view stage) const { return Rng(seed).fork(stage).next_u64(); }

data::SynthConfig RunConfig::synth_config() const {
  data::SynthConfig c = synth;
  c.seed = stage_seed("synth");
  return c;
}

cae::CaeConfig RunConfig::cae_config(data::Polarity polarity) const {
  cae::CaeConfig c = cae;
  c.polarity = polarity;
  return c;
}

json synth_config_to_json(const data::SynthConfig& c) {
  return {{"patients", c.patients},
          {"recordings_per_patient", c.recordings_per_patient},
          {"min_duration_s", c.min_duration_s},
          {"max_duration_s", c.max_duration_s},
          {"sample_rate_hz", c.sample_rate_hz},
          {"min_cycle_ms", c.min_cycle_ms},
          {"max_cycle_ms", c.max_cycle_ms},
          {"cycle_jitter", c.cycle_jitter},
          {"noise_mv", c.noise_mv},
          {"p_focal", c.p_focal},
          {"p_rotational", c.p_rotational},
          {"p_entanglement", c.p_entanglement},
          {"min_episode_s", c.min_episode_s},
          {"max_episode_s", c.max_episode_s},
          {"qs_depth_mv", c.qs_depth_mv},
          {"focal_rate_factor", c.focal_rate_factor},
          {"staircase_span", c.staircase_span},
          {"rotor_rate_factor", c.rotor_rate_factor},
          {"fragmentation_density", c.fragmentation_density},
          {"cl_shortening_factor", c.cl_shortening_factor}};
}

data::SynthConfig synth_config_from_json(const json& j, data::SynthConfig c) {
  std::set<std::string> known;
  const json defaults = synth_config_to_json(c);
  for (const auto& [key, value] : defaults.items()) known.insert(key);
  reject_unknown(j, known, "synth");
  read(j, "patients", c.patients);
  read(j, "recordings_per_patient", c.recordings_per_patient);
  read(j, "min_duration_s", c.min_duration_s);
  read(j, "max_duration_s", c.max_duration_s);
  read(j, "sample_rate_hz", c.sample_rate_hz);
  read(j, "min_cycle_ms", c.min_cycle_ms);
  read(j, "max_cycle_ms", c.max_cycle_ms);
  read(j, "cycle_jitter", c.cycle_jitter);
  read(j, "noise_mv", c.noise_mv);
  read(j, "p_focal", c.p_focal);
  read(j, "p_rotational", c.p_rotational);
  read(j, "p_entanglement", c.p_entanglement);
  read(j, "min_episode_s", c.min_episode_s);
  read(j, "max_episode_s", c.max_episode_s);
  read(j, "qs_depth_mv", c.qs_depth_mv);
  read(j, "focal_rate_factor", c.focal_rate_factor);
  read(j, "staircase_span", c.staircase_span);
  read(j, "rotor_rate_factor", c.rotor_rate_factor);
  read(j, "fragmentation_density", c.fragmentation_density);
  read(j, "cl_shortening_factor", c.cl_shortening_factor);
  return c;
}

json experiment_json(const RunConfig& c) {
  json cae = cae::config_to_json(c.cae);
  cae.erase("polarity");
  const auto& k = c.classifiers;
  const auto& t = c.tsne.tsne;
  return {{"seed", c.seed},
          {"synth", synth_config_to_json(c.synth)},
          {"cae", cae},
          {"split", {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}}},
          {"classifiers",
           {{"logistic", {{"C", k.logistic_C}}},
            {"knn", {{"k", k.knn_k}}},
            {"gbdt", {{"n_estimators", k.gbdt_estimators}, {"max_depth", k.gbdt_depth}, {"shrinkage", k.gbdt_shrinkage}}},
            {"folds", k.folds},
            {"threshold", k.threshold}}},
          {"tsne",
           {{"perplexity", t.perplexity},
            {"iterations", t.iterations},
            {"learning_rate", t.learning_rate},
            {"per_class", c.tsne.per_class}}},
          {"annotate", {{"threshold", c.annotate.threshold}, {"max_recordings", c.annotate.max_recordings}}},
          {"bench", {{"signals", c.bench.signals}, {"duration_s", c.bench.duration_s}}}};
}

json run_config_to_json(const RunConfig& c) {
  json j = experiment_json(c);
  const auto& p = c.paths;
  j["paths"] = {{"out", p.out.string()},           {"corpus", p.corpus.string()},
                {"dataset", p.dataset.string()},   {"checkpoints", p.checkpoints.string()},
                {"embeddings", p.embeddings.string()}, {"models", p.models.string()},
                {"reports", p.reports.string()},   {"figures", p.figures.string()}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j, {"seed", "paths", "synth", "cae", "split", "classifiers", "tsne", "annotate", "bench"}, "run config");
    read(j, "seed", c.seed);
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      reject_unknown(p, {"out", "corpus", "dataset", "checkpoints", "embeddings", "models", "reports", "figures"}, "paths");
      auto path = [&](const char* key, fs::path& field) {
        if (p.contains(key)) field = p.at(key).get<std::string>();
      };
      path("out", c.paths.out);
      path("corpus", c.paths.corpus);
      path("dataset", c.paths.dataset);
      path("checkpoints", c.paths.checkpoints);
      path("embeddings", c.paths.embeddings);
      path("models", c.paths.models);
      path("reports", c.paths.reports);
      path("figures", c.paths.figures);
    }
    if (j.contains("synth")) c.synth = synth_config_from_json(j.at("synth"), c.synth);
    if (j.contains("cae")) {
      json cae = cae::config_to_json(c.cae);
      cae.update(j.at("cae"));
      c.cae = cae::config_from_json(cae);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      reject_unknown(s, {"train", "validation", "test"}, "split");
      read(s, "train", c.split.train);
      read(s, "validation", c.split.validation);
      read(s, "test", c.split.test);
    }
    if (j.contains("classifiers")) {
      const json& k = j.at("classifiers");
      reject_unknown(k, {"logistic", "knn", "gbdt", "folds", "threshold"}, "classifiers");
      read(k, "folds", c.classifiers.folds);
      read(k, "threshold", c.classifiers.threshold);
      if (k.contains("logistic")) {
        reject_unknown(k.at("logistic"), {"C"}, "classifiers.logistic");
        read(k.at("logistic"), "C", c.classifiers.logistic_C);
      }
      if (k.contains("knn")) {
        reject_unknown(k.at("knn"), {"k"}, "classifiers.knn");
        read(k.at("knn"), "k", c.classifiers.knn_k);
      }
      if (k.contains("gbdt")) {
        const json& g = k.at("gbdt");
        reject_unknown(g, {"n_estimators", "max_depth", "shrinkage"}, "classifiers.gbdt");
        read(g, "n_estimators", c.classifiers.gbdt_estimators);
        read(g, "max_depth", c.classifiers.gbdt_depth);
        read(g, "shrinkage", c.classifiers.gbdt_shrinkage);
      }
    }
    if (j.contains("tsne")) {
      const json& t = j.at("tsne");
      reject_unknown(t, {"perplexity", "iterations", "learning_rate", "per_class"}, "tsne");
      read(t, "perplexity", c.tsne.tsne.perplexity);
      read(t, "iterations", c.tsne.tsne.iterations);
      read(t, "learning_rate", c.tsne.tsne.learning_rate);
      read(t, "per_class", c.tsne.per_class);
    }
    if (j.contains("annotate")) {
      const json& a = j.at("annotate");
      reject_unknown(a, {"threshold", "max_recordings"}, "annotate");
      read(a, "threshold", c.annotate.threshold);
      read(a, "max_recordings", c.annotate.max_recordings);
    }
    if (j.contains("bench")) {
      const json& b = j.at("bench");
      reject_unknown(b, {"signals", "duration_s"}, "bench");
      read(b, "signals", c.bench.signals);
      read(b, "duration_s", c.bench.duration_s);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Configuration, std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::Configuration, "config file " + path.string() + " does not exist");
  json j;
  try {
    j = data::read_json(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::Configuration, e.what());
  }
  return run_config_from_json(j);
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(experiment_json(c).dump())));
  return buf;
}

}  // namespace egmlatent::pipeline
