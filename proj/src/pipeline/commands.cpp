#include "egmlatent/pipeline/commands.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <optional>
#include <set>

#include "egmlatent/cae/trainer.hpp"
#include "egmlatent/classify/cv.hpp"
#include "egmlatent/core/error.hpp"
#include "egmlatent/core/parallel.hpp"
#include "egmlatent/core/tensor_io.hpp"
#include "egmlatent/data/corpus_io.hpp"
#include "egmlatent/viz/render.hpp"
#include "egmlatent/viz/subsample.hpp"

namespace egmlatent::pipeline {

using nlohmann::json;
using data::DriverKind;
using data::Polarity;
using data::Split;

namespace {

constexpr DriverKind kTasks[] = {DriverKind::Rotational, DriverKind::Focal, DriverKind::Entanglement};
constexpr Split kSplits[] = {Split::Train, Split::Validation, Split::Test};
constexpr classify::Family kFamilies[] = {classify::Family::Logistic, classify::Family::Knn, classify::Family::Gbdt};

std::string str(auto v) { return std::string(to_string(v)); }

std::vector<std::string> unique_sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::vector<fs::path> recording_sidecars(const fs::path& corpus, std::optional<Polarity> polarity = {}) {
  data::require_file(corpus / "manifest.json");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(corpus)) {
    const auto& p = entry.path();
    if (p.extension() != ".json" || p.filename() == "manifest.json") continue;
    if (polarity && p.stem().string().find("_" + str(*polarity)) == std::string::npos) continue;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorKind::MissingArtifact, "no recordings in " + corpus.string());
  return out;
}

data::SplitAssignment read_split(const Context& ctx) {
  const json j = data::read_json(ctx.dataset_dir() / "split.json");
  data::SplitAssignment s;
  for (const auto& [patient, split] : j.at("patients").items()) {
    s.by_patient[patient] = data::split_from_string(split.get<std::string>());
  }
  return s;
}

data::NormalizationParams read_normalization(const Context& ctx, Polarity polarity) {
  return data::normalization_from_json(
      data::read_json(ctx.dataset_dir() / ("normalization_" + str(polarity) + ".json")));
}

Tensor stack_rows(const std::vector<Tensor>& windows) {
  const Shape one = windows.front().shape();
  Shape s{windows.size()};
  s.insert(s.end(), one.begin(), one.end());
  Tensor out(s);
  const std::size_t stride = windows.front().size();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    std::copy(windows[i].values().begin(), windows[i].values().end(), out.data() + i * stride);
  }
  return out;
}

fs::path embedding_stem(const Context& ctx, Split split, Polarity polarity) {
  return ctx.embeddings_dir() / dataset_name(split, polarity);
}

json read_selection(const Context& ctx, DriverKind task) {
  return data::read_json(ctx.models_dir(task) / "selection.json");
}

}  // namespace

// ---------------------------------------------------------------- context

Context::Context(RunConfig config, std::ostream& log) : config_(std::move(config)), log_(&log) {
  config_.validate();
  hash_ = config_hash(config_);
}

json Context::provenance(std::string_view stage) const {
  return {{"config_hash", hash_}, {"seed", config_.seed}, {"stage", std::string(stage)}};
}

fs::path Context::checkpoint_path(Polarity p) const {
  return config_.paths.resolve(config_.paths.checkpoints) / ("cae_" + str(p) + ".egmc");
}

fs::path Context::models_dir(DriverKind task) const { return config_.paths.resolve(config_.paths.models) / str(task); }

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".egmlatent.lock") {
  fs::create_directories(dir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw Error(ErrorKind::Io, "output directory is locked by another command (" + path_.string() +
                                   "); remove the file if no command is running");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string dataset_name(Split split, Polarity polarity) { return str(split) + "_" + str(polarity); }

// ---------------------------------------------------------------- synth

SynthSummary cmd_synth(const Context& ctx) {
  const data::SynthConfig cfg = ctx.config().synth_config();
  cfg.validate();
  const fs::path dir = ctx.corpus_dir();
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!fs::exists(dir / "manifest.json")) {
      throw Error(ErrorKind::Configuration, "refusing to overwrite " + dir.string() + ": not a synthetic corpus");
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);

  SynthSummary summary;
  summary.patients = cfg.patients;
  for (DriverKind k : kTasks) summary.episodes[str(k)] = 0;
  const json prov = ctx.provenance("synth");
  const Rng root(cfg.seed);
  json files = json::array();
  for (std::size_t p = 0; p < cfg.patients; ++p) {
    for (std::size_t a = 0; a < cfg.recordings_per_patient; ++a) {
      const std::string patient = data::patient_name(p), acquisition = data::acquisition_name(a);
      Rng rng = root.fork(patient + "/" + acquisition);
      const data::SynthRecording rec = data::synth_recording(cfg, patient, acquisition, rng);
      for (const auto* r : {&rec.unipolar, &rec.bipolar}) {
        const fs::path sidecar = data::write_recording(dir, *r, rec.annotations);
        json j = data::read_json(sidecar);
        j["provenance"] = prov;
        data::write_json(sidecar, j);
        files.push_back(sidecar.filename().string());
      }
      for (const auto& ann : rec.annotations) ++summary.episodes[str(ann.kind)];
      ++summary.recordings;
    }
  }
  data::write_json(dir / "manifest.json", {{"patients", summary.patients},
                                           {"recordings", summary.recordings},
                                           {"files", files},
                                           {"episodes", summary.episodes},
                                           {"synth", synth_config_to_json(cfg)},
                                           {"synth_seed", cfg.seed},
                                           {"provenance", prov}});
  ctx.log() << "synth: " << summary.recordings << " acquisitions of " << summary.patients << " patients -> "
            << dir.string() << '\n';
  return summary;
}

// ---------------------------------------------------------------- preprocess

PreprocessSummary cmd_preprocess(const Context& ctx) {
  const fs::path corpus = ctx.corpus_dir(), out = ctx.dataset_dir();
  const json manifest = data::read_json(corpus / "manifest.json");
  std::vector<std::string> patients;
  for (const auto& f : recording_sidecars(corpus)) {
    patients.push_back(data::read_json(f).at("patient_id").get<std::string>());
  }
  patients = unique_sorted(patients);
  const data::SplitAssignment split =
      data::patient_split(patients, ctx.config().split, ctx.config().stage_seed("split"));
  fs::create_directories(out);

  PreprocessSummary summary;
  json split_json = {{"patients", json::object()}, {"provenance", ctx.provenance("preprocess")}};
  for (const auto& [patient, s] : split.by_patient) split_json["patients"][patient] = str(s);
  for (Split s : kSplits) {
    summary.patients[str(s)] = split.patients(s).size();
    split_json["counts"][str(s)] = split.patients(s).size();
  }
  data::write_json(out / "split.json", split_json);

  for (Polarity pol : {Polarity::Bipolar, Polarity::Unipolar}) {
    std::map<Split, std::vector<data::Segment>> by_split;
    std::vector<std::string> training_recordings;
    for (const auto& sidecar : recording_sidecars(corpus, pol)) {
      const data::RecordingFile file = data::read_recording(sidecar);
      const Split s = split.of(file.recording.patient_id);
      auto segments = data::extract_segments(file.recording, file.annotations);
      if (s == Split::Train) training_recordings.push_back(data::recording_stem(file.recording));
      for (auto& seg : segments) by_split[s].push_back(std::move(seg));
    }
    std::vector<Tensor> train_raw;
    for (const auto& seg : by_split[Split::Train]) train_raw.push_back(seg.data);
    const data::NormalizationParams norm = data::compute_clip_params(train_raw, pol);
    train_raw.clear();

    json nj = data::normalization_to_json(norm);
    nj["provenance"] = ctx.provenance("preprocess");
    nj["provenance"]["fit_split"] = "train";
    nj["provenance"]["training_recordings"] = training_recordings;
    nj["provenance"]["training_patients"] = split.patients(Split::Train);
    data::write_json(out / ("normalization_" + str(pol) + ".json"), nj);

    for (Split s : kSplits) {
      auto& segs = by_split[s];
      for (auto& seg : segs) seg.data = data::clip_and_scale(seg.data, norm);
      const std::string name = dataset_name(s, pol);
      summary.segments[name] = segs.size();
      if (segs.empty()) throw Error(ErrorKind::DegenerateData, name + " has no segments");
      data::write_dataset(out, name, data::make_dataset(pol, std::move(segs)),
                          {{"provenance", ctx.provenance("preprocess")}, {"split", str(s)}});
    }
  }
  for (const auto& [name, n] : summary.segments) ctx.log() << "preprocess: " << name << " " << n << " segments\n";
  return summary;
}

// ---------------------------------------------------------------- train-cae

TrainCaeSummary cmd_train_cae(const Context& ctx, Polarity polarity) {
  const fs::path dir = ctx.dataset_dir();
  const data::SegmentDataset train = data::read_dataset(dir, dataset_name(Split::Train, polarity));
  const data::SegmentDataset val = data::read_dataset(dir, dataset_name(Split::Validation, polarity));
  const data::SegmentDataset test = data::read_dataset(dir, dataset_name(Split::Test, polarity));
  const data::NormalizationParams norm = read_normalization(ctx, polarity);
  const cae::CaeConfig cfg = ctx.config().cae_config(polarity);
  const std::uint64_t seed = ctx.config().stage_seed("cae/" + str(polarity));

  TrainCaeSummary summary;
  {
    Rng init = Rng(seed).fork("init");
    const cae::CaeModel untrained(cfg, init);
    summary.untrained_test_mse = cae::evaluate_mse(untrained, test.data);
  }
  ctx.log() << "train-cae " << str(polarity) << ": " << train.size() << " train / " << val.size()
            << " validation segments\n";
  cae::TrainResult result = cae::train_cae(cfg, train.data, val.data, seed, [&](const cae::EpochReport& e) {
    ctx.log() << "  epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << std::endl;
  });
  summary.epochs_run = result.history.size();
  summary.best_epoch = result.best_epoch;
  summary.best_val_loss = result.best_val_loss;
  summary.test_mse = cae::evaluate_mse(result.model, test.data);

  const json prov = ctx.provenance("train-cae");
  cae::CaeCheckpoint ckpt = cae::make_checkpoint(std::move(result), norm);
  ckpt.provenance = prov;
  cae::save_checkpoint(ctx.checkpoint_path(polarity), ckpt);
  write_text(ctx.reports_dir() / ("loss_" + str(polarity) + ".csv"),
             "# provenance " + prov.dump() + "\n" + cae::loss_history_csv(ckpt.history));
  data::write_json(ctx.reports_dir() / ("cae_" + str(polarity) + ".json"),
                   {{"polarity", str(polarity)},
                    {"epochs_run", summary.epochs_run},
                    {"best_epoch", summary.best_epoch},
                    {"best_val_loss", summary.best_val_loss},
                    {"test_mse", summary.test_mse},
                    {"untrained_test_mse", summary.untrained_test_mse},
                    {"train_segments", train.size()},
                    {"test_segments", test.size()},
                    {"config", cae::config_to_json(cfg)},
                    {"provenance", prov}});
  viz::render_loss_curve(ctx.figures_dir() / ("loss_" + str(polarity)), ckpt.history, prov);
  const Tensor first = test.segment(0);
  const Tensor recon = ckpt.model.reconstruct(first.reshaped(Shape{1, first.dim(0), first.dim(1)}));
  viz::render_overlay(ctx.figures_dir() / ("overlay_" + str(polarity)), first,
                      recon.reshaped(Shape{first.dim(0), first.dim(1)}), prov);
  ctx.log() << "train-cae " << str(polarity) << ": best epoch " << summary.best_epoch << " of "
            << summary.epochs_run << ", test MSE " << summary.test_mse << " (untrained "
            << summary.untrained_test_mse << ")\n";
  return summary;
}

// ---------------------------------------------------------------- embed

void cmd_embed(const Context& ctx, Polarity polarity) {
  const fs::path ckpt_path = ctx.checkpoint_path(polarity);
  data::require_file(ckpt_path);
  const cae::CaeCheckpoint ckpt = cae::load_checkpoint(ckpt_path);
  fs::create_directories(ctx.embeddings_dir());
  for (Split s : kSplits) {
    const std::string name = dataset_name(s, polarity);
    const data::SegmentDataset ds = data::read_dataset(ctx.dataset_dir(), name);
    const Tensor z = cae::embed_dataset(ckpt, ds);
    const fs::path stem = embedding_stem(ctx, s, polarity);
    save_tensor(stem.string() + ".egmt", z);
    json labels = json::object();
    for (DriverKind k : kTasks) labels[str(k)] = ds.labels(k);
    std::vector<std::string> recordings;
    std::vector<std::size_t> windows;
    for (const auto& r : ds.rows) {
      recordings.push_back(r.source_recording_id);
      windows.push_back(r.window_index);
    }
    data::write_json(stem.string() + ".json", {{"dataset", name},
                                               {"split", str(s)},
                                               {"polarity", str(polarity)},
                                               {"rows", ds.size()},
                                               {"patient_ids", ds.patient_ids()},
                                               {"source_recording_id", recordings},
                                               {"window_index", windows},
                                               {"labels", labels},
                                               {"provenance", ctx.provenance("embed")}});
    ctx.log() << "embed: " << name << " " << z.dim(0) << " x " << z.dim(1) << '\n';
  }
}

classify::EmbeddingSet load_embedding_set(const Context& ctx, Split split, DriverKind task) {
  const fs::path stem = embedding_stem(ctx, split, data::task_polarity(task));
  const json meta = data::read_json(stem.string() + ".json");
  data::require_file(stem.string() + ".egmt");
  classify::EmbeddingSet set;
  set.features = load_tensor(stem.string() + ".egmt");
  try {
    set.labels = meta.at("labels").at(str(task)).get<std::vector<std::uint8_t>>();
    set.patient_ids = meta.at("patient_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, stem.string() + ".json: " + e.what());
  }
  set.validate();
  return set;
}

// ---------------------------------------------------------------- train-clf

TrainClfSummary cmd_train_clf(const Context& ctx, DriverKind task) {
  const RunConfig& rc = ctx.config();
  const std::string tname = str(task);
  const classify::EmbeddingSet train = load_embedding_set(ctx, Split::Train, task);
  const data::SplitAssignment split = read_split(ctx);
  for (const auto& p : train.patient_ids) {
    if (split.of(p) != Split::Train) throw Error(ErrorKind::Corruption, "training embeddings contain patient " + p);
  }

  const classify::StandardizationParams stdp = classify::standardize_fit(train.features);
  Rng us = Rng(rc.stage_seed("undersample/" + tname));
  const std::vector<std::size_t> rows = data::undersample(train.labels, us);
  classify::EmbeddingSet fit = train.subset(rows);
  fit.features = classify::standardize_apply(fit.features, stdp);

  TrainClfSummary summary;
  summary.training_rows = fit.size();
  const std::uint64_t cv_seed = rc.stage_seed("cv/" + tname);
  const fs::path dir = ctx.models_dir(task);
  fs::create_directories(dir);
  const json prov = ctx.provenance("train-clf");

  json families = json::object();
  std::vector<std::vector<std::string>> fold_patients;
  double best_auc = -1.0;
  for (classify::Family f : kFamilies) {
    const classify::CvResult cv = classify::cross_validate(fit.features, fit.labels, rc.classifiers.grid(f),
                                                           rc.classifiers.folds, cv_seed);
    if (fold_patients.empty()) {
      fold_patients.resize(rc.classifiers.folds);
      for (std::size_t i = 0; i < fit.size(); ++i) fold_patients[cv.fold_of[i]].push_back(fit.patient_ids[i]);
      for (auto& fp : fold_patients) fp = unique_sorted(fp);
    }
    json grid = json::array();
    for (const auto& g : cv.grid) {
      grid.push_back({{"params", classify::hyperparams_to_json(g.params)},
                      {"fold_auc", g.fold_auc},
                      {"mean_auc", g.mean_auc}});
    }
    const double auc = cv.grid[cv.best].mean_auc;
    summary.cv_auc[str(f)] = auc;
    if (auc > best_auc) {
      best_auc = auc;
      summary.selected = f;
    }
    const classify::ClassifierModel model = classify::train_classifier(fit.features, fit.labels, cv.best_params());
    classify::save_classifier(dir / str(f), model, prov);
    families[str(f)] = {{"best_params", classify::hyperparams_to_json(cv.best_params())},
                        {"cv_mean_auc", auc},
                        {"grid", grid}};
    ctx.log() << "train-clf " << tname << ": " << str(f) << " CV AUC " << auc << '\n';
  }

  json sel = {{"task", tname},
              {"polarity", str(data::task_polarity(task))},
              {"selected_family", str(summary.selected)},
              {"families", families},
              {"standardization", classify::standardization_to_json(stdp)},
              {"provenance", prov}};
  sel["standardization"]["fit_split"] = "train";
  sel["standardization"]["fit_patients"] = unique_sorted(train.patient_ids);
  sel["undersampling"] = {{"rows", rows.size()}, {"positives", fit.positives()},
                          {"patients", unique_sorted(fit.patient_ids)}};
  sel["cv"] = {{"folds", rc.classifiers.folds}, {"seed", cv_seed}, {"fold_patients", fold_patients}};
  data::write_json(dir / "selection.json", sel);
  ctx.log() << "train-clf " << tname << ": selected " << str(summary.selected) << '\n';
  return summary;
}

// ---------------------------------------------------------------- eval

classify::MetricsReport cmd_eval(const Context& ctx, DriverKind task) {
  const std::string tname = str(task);
  const json sel = read_selection(ctx, task);
  const classify::StandardizationParams stdp = classify::standardization_from_json(sel.at("standardization"));
  const classify::EmbeddingSet test = load_embedding_set(ctx, Split::Test, task);
  const Tensor x = classify::standardize_apply(test.features, stdp);
  const std::string selected = sel.at("selected_family").get<std::string>();
  const double threshold = ctx.config().classifiers.threshold;

  json families = json::object();
  classify::MetricsReport chosen;
  std::vector<viz::RocSeries> curves;
  for (classify::Family f : kFamilies) {
    const fs::path stem = ctx.models_dir(task) / str(f);
    data::require_file(stem.string() + ".json");
    const classify::ClassifierModel model = classify::load_classifier(stem);
    const std::vector<double> p = classify::predict_proba(model, x);
    classify::MetricsReport m = classify::confusion_metrics(p, test.labels, threshold);
    m.task = tname;
    families[str(f)] = classify::metrics_to_json(m);
    curves.push_back({str(f), classify::roc_curve(p, test.labels), m.auc});
    if (str(f) == selected) chosen = m;
  }
  const json prov = ctx.provenance("eval");
  json out = classify::metrics_to_json(chosen);
  out["selected_family"] = selected;
  out["polarity"] = str(data::task_polarity(task));
  out["families"] = families;
  out["inputs"] = {{"embeddings", dataset_name(Split::Test, data::task_polarity(task))},
                   {"labels_split", "test"},
                   {"test_patients", unique_sorted(test.patient_ids)}};
  out["provenance"] = prov;
  data::write_json(ctx.reports_dir() / ("metrics_" + tname + ".json"), out);
  viz::render_roc(ctx.figures_dir() / ("roc_" + tname), curves, prov);
  ctx.log() << "eval " << tname << " (" << selected << "): AUC " << chosen.auc << " sensitivity "
            << chosen.sensitivity << " specificity " << chosen.specificity << " accuracy " << chosen.accuracy
            << '\n';
  return chosen;
}

// ---------------------------------------------------------------- tsne

std::size_t cmd_tsne(const Context& ctx, DriverKind task) {
  const std::string tname = str(task);
  // Fig.-style latent map over every split; standardized with training parameters only.
  const classify::EmbeddingSet train = load_embedding_set(ctx, Split::Train, task);
  const classify::StandardizationParams stdp = classify::standardize_fit(train.features);
  classify::EmbeddingSet pool = train;
  for (Split s : {Split::Validation, Split::Test}) {
    const classify::EmbeddingSet part = load_embedding_set(ctx, s, task);
    Tensor merged(Shape{pool.size() + part.size(), pool.dims()});
    std::copy(pool.features.values().begin(), pool.features.values().end(), merged.data());
    std::copy(part.features.values().begin(), part.features.values().end(), merged.data() + pool.features.size());
    pool.features = std::move(merged);
    pool.labels.insert(pool.labels.end(), part.labels.begin(), part.labels.end());
    pool.patient_ids.insert(pool.patient_ids.end(), part.patient_ids.begin(), part.patient_ids.end());
  }
  const auto& ts = ctx.config().tsne;
  const viz::BalancedSubsample sub = viz::subsample_balanced(pool, ts.per_class, ctx.config().stage_seed("tsne/subsample/" + tname));
  for (const auto& w : sub.warnings) ctx.log() << "tsne " << tname << ": warning: " << w << '\n';
  viz::TsneConfig tc = ts.tsne;
  tc.seed = ctx.config().stage_seed("tsne/" + tname);
  const viz::Projection2D proj = viz::tsne(classify::standardize_apply(sub.set.features, stdp), tc);

  json prov = ctx.provenance("tsne");
  prov["tsne"] = viz::tsne_config_to_json(tc);
  prov["input"] = "standardized embeddings (training-split parameters)";
  const fs::path stem = ctx.figures_dir() / ("tsne_" + tname);
  viz::render_scatter(stem, proj.coords, sub.set.labels, "t-SNE of latent space: " + tname, prov);
  data::write_json(stem.string() + ".json", {{"points", sub.set.size()},
                                             {"positives", sub.set.positives()},
                                             {"warnings", sub.warnings},
                                             {"kl_final", proj.kl_history.back()},
                                             {"provenance", prov}});
  ctx.log() << "tsne " << tname << ": " << sub.set.size() << " points, final KL " << proj.kl_history.back() << '\n';
  return sub.set.size();
}

// ---------------------------------------------------------------- online path

OnlineModel load_online_model(const Context& ctx, DriverKind task) {
  const fs::path ckpt = ctx.checkpoint_path(data::task_polarity(task));
  data::require_file(ckpt);
  const json sel = read_selection(ctx, task);
  const fs::path stem = ctx.models_dir(task) / sel.at("selected_family").get<std::string>();
  data::require_file(stem.string() + ".json");
  return {cae::load_checkpoint(ckpt), classify::standardization_from_json(sel.at("standardization")),
          classify::load_classifier(stem)};
}

std::vector<double> classify_recording(const OnlineModel& model, const data::EgmRecording& recording,
                                       StageSeconds* seconds) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  const Tensor signal = data::resample_to_250(recording.samples, recording.sample_rate_hz);
  std::vector<Tensor> windows = data::segment_windows(signal);
  for (auto& w : windows) w = data::clip_and_scale(w, model.checkpoint.normalization);
  const Tensor batch = stack_rows(windows);
  auto t1 = clock::now();
  const Tensor z = cae::embed(model.checkpoint.model, batch);
  auto t2 = clock::now();
  const std::vector<double> p =
      classify::predict_proba(model.classifier, classify::standardize_apply(z, model.standardization));
  auto t3 = clock::now();
  if (seconds) {
    seconds->preprocess = std::chrono::duration<double>(t1 - t0).count();
    seconds->encode = std::chrono::duration<double>(t2 - t1).count();
    seconds->classify = std::chrono::duration<double>(t3 - t2).count();
  }
  return p;
}

// ---------------------------------------------------------------- annotate

std::map<std::string, std::size_t> cmd_annotate(const Context& ctx, DriverKind task, const std::string& recording) {
  const std::string tname = str(task);
  const Polarity pol = data::task_polarity(task);
  const OnlineModel model = load_online_model(ctx, task);
  const data::SplitAssignment split = read_split(ctx);

  // Test recordings only; those containing an episode of the task come first.
  std::vector<std::pair<int, fs::path>> candidates;
  for (const auto& sidecar : recording_sidecars(ctx.corpus_dir(), pol)) {
    const json j = data::read_json(sidecar);
    const std::string stem = sidecar.stem().string();
    if (!recording.empty()) {
      if (stem == recording || stem == recording + "_" + str(pol)) candidates.push_back({0, sidecar});
      continue;
    }
    if (split.of(j.at("patient_id").get<std::string>()) != Split::Test) continue;
    bool has = false;
    for (const auto& a : j.at("annotations")) has = has || a.at("kind").get<std::string>() == tname;
    candidates.push_back({has ? 0 : 1, sidecar});
  }
  if (candidates.empty()) throw Error(ErrorKind::MissingArtifact, "no recording to annotate for " + tname);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t count = recording.empty() ? std::min(candidates.size(), ctx.config().annotate.max_recordings) : 1;

  std::map<std::string, std::size_t> flagged;
  const json prov = ctx.provenance("annotate");
  for (std::size_t i = 0; i < count; ++i) {
    const data::RecordingFile file = data::read_recording(candidates[i].second);
    const std::vector<double> p = classify_recording(model, file.recording);
    const Tensor signal = data::resample_to_250(file.recording.samples, file.recording.sample_rate_hz);
    const std::string stem = data::recording_stem(file.recording);
    const auto windows = viz::render_annotations(ctx.figures_dir() / ("annotate_" + tname + "_" + stem), signal, p,
                                                 ctx.config().annotate.threshold, 250, prov);
    std::size_t n = 0;
    for (const auto& w : windows) n += w.flagged;
    flagged[stem] = n;
    ctx.log() << "annotate " << tname << ": " << stem << " " << n << " of " << windows.size()
              << " windows flagged\n";
  }
  return flagged;
}

// ---------------------------------------------------------------- bench

BenchReport cmd_bench(const Context& ctx, std::size_t signals) {
  if (signals == 0) throw Error(ErrorKind::Configuration, "bench needs at least one signal");
  const OnlineModel model = load_online_model(ctx, DriverKind::Entanglement);
  data::SynthConfig sc = ctx.config().synth_config();
  sc.min_duration_s = sc.max_duration_s = ctx.config().bench.duration_s;
  const Rng root(ctx.config().stage_seed("bench"));

  // One untimed pass warms caches and the allocator.
  {
    Rng rng = root.fork("warmup");
    classify_recording(model, data::synth_recording(sc, "B0000", "A01", rng).bipolar);
  }
  std::vector<double> total(signals);
  BenchReport report;
  for (std::size_t i = 0; i < signals; ++i) {
    Rng rng = root.fork("signal/" + std::to_string(i));
    const data::EgmRecording rec = data::synth_recording(sc, "B" + std::to_string(i), "A01", rng).bipolar;
    StageSeconds s;
    classify_recording(model, rec, &s);
    total[i] = s.preprocess + s.encode + s.classify;
    report.stage_mean.preprocess += s.preprocess / double(signals);
    report.stage_mean.encode += s.encode / double(signals);
    report.stage_mean.classify += s.classify / double(signals);
  }
  report.signals_timed = signals;
  for (double t : total) report.mean_seconds += t / double(signals);
  std::vector<double> sorted = total;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t rank = std::max<std::size_t>(1, std::size_t(std::ceil(0.95 * double(signals))));
  report.p95_seconds = sorted[rank - 1];

  data::write_json(ctx.reports_dir() / "bench.json",
                   {{"signals_timed", report.signals_timed},
                    {"signal_duration_s", sc.max_duration_s},
                    {"mean_seconds", report.mean_seconds},
                    {"p95_seconds", report.p95_seconds},
                    {"stages_mean_seconds",
                     {{"preprocess", report.stage_mean.preprocess},
                      {"encode", report.stage_mean.encode},
                      {"classify", report.stage_mean.classify}}},
                    {"reference_seconds", kReferenceSecondsPerSignal},
                    {"workers", worker_count()},
                    {"provenance", ctx.provenance("bench")}});
  return report;
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Configuration:
    case ErrorKind::UnsupportedRate:
      return 2;
    case ErrorKind::MissingArtifact:
      return 3;
    case ErrorKind::DegenerateData:
    case ErrorKind::DegenerateBatch:
    case ErrorKind::TaskInfeasible:
    case ErrorKind::Stratification:
    case ErrorKind::UndefinedAuc:
    case ErrorKind::TooShort:
      return 4;
    case ErrorKind::Divergence:
      return 5;
    default:
      return 1;
  }
}

void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
}

}  // namespace egmlatent::pipeline
