#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "egmlatent/core/error.hpp"
#include "egmlatent/pipeline/commands.hpp"

using namespace egmlatent;
using namespace egmlatent::pipeline;

namespace {

std::vector<data::DriverKind> tasks_from(const std::string& name) {
  if (name == "all") return {data::DriverKind::Rotational, data::DriverKind::Focal, data::DriverKind::Entanglement};
  return {data::driver_from_string(name)};
}

std::vector<data::Polarity> polarities_from(const std::string& name) {
  if (name == "both") return {data::Polarity::Bipolar, data::Polarity::Unipolar};
  return {data::polarity_from_string(name)};
}

}  // namespace

int main(int argc, char** argv) {
  egmlatent::pipeline::tune_allocator();
  CLI::App app{"Latent representations of intracardiac electrograms: synthesis, autoencoder, driver classifiers"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Global seed (overrides the config)");
  app.add_option("--out", out_dir, "Output root (overrides paths.out)");

  std::string task = "all", polarity = "both", recording;
  std::size_t signals = 0;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  auto* preprocess = app.add_subcommand("preprocess", "Split patients, resample, window and normalize");
  auto* train_cae = app.add_subcommand("train-cae", "Train the convolutional autoencoder");
  train_cae->add_option("--polarity", polarity, "bipolar, unipolar or both")->check(CLI::IsMember({"bipolar", "unipolar", "both"}));
  auto* embed = app.add_subcommand("embed", "Write latent embeddings for every split");
  embed->add_option("--polarity", polarity, "bipolar, unipolar or both")->check(CLI::IsMember({"bipolar", "unipolar", "both"}));
  const auto task_check = CLI::IsMember({"rotational", "focal", "entanglement", "all"});
  auto* train_clf = app.add_subcommand("train-clf", "Cross-validate and fit driver classifiers");
  train_clf->add_option("--task", task, "rotational, focal, entanglement or all")->check(task_check);
  auto* eval = app.add_subcommand("eval", "Evaluate classifiers on the test split");
  eval->add_option("--task", task, "rotational, focal, entanglement or all")->check(task_check);
  auto* tsne = app.add_subcommand("tsne", "t-SNE map of the latent space");
  tsne->add_option("--task", task, "rotational, focal, entanglement or all")->check(task_check);
  auto* annotate = app.add_subcommand("annotate", "Shade windows flagged by a classifier");
  annotate->add_option("--task", task, "rotational, focal, entanglement or all")->check(task_check);
  annotate->add_option("--recording", recording, "Recording stem (default: test recordings)");
  auto* bench = app.add_subcommand("bench", "Time the online path on synthetic 30 s bipolar signals");
  bench->add_option("--signals", signals, "Number of signals (default: bench.signals)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.paths.out = out_dir;
    const Context ctx(cfg, std::cerr);
    OutputLock lock(cfg.paths.out);

    if (synth->parsed()) {
      const SynthSummary s = cmd_synth(ctx);
      for (const auto& [kind, n] : s.episodes) std::cout << kind << " episodes: " << n << '\n';
    } else if (preprocess->parsed()) {
      cmd_preprocess(ctx);
    } else if (train_cae->parsed()) {
      for (auto p : polarities_from(polarity)) cmd_train_cae(ctx, p);
    } else if (embed->parsed()) {
      for (auto p : polarities_from(polarity)) cmd_embed(ctx, p);
    } else if (train_clf->parsed()) {
      for (auto t : tasks_from(task)) cmd_train_clf(ctx, t);
    } else if (eval->parsed()) {
      for (auto t : tasks_from(task)) {
        const auto m = cmd_eval(ctx, t);
        std::printf("%-13s AUC %.4f  sensitivity %.4f  specificity %.4f  accuracy %.4f\n", m.task.c_str(), m.auc,
                    m.sensitivity, m.specificity, m.accuracy);
      }
    } else if (tsne->parsed()) {
      for (auto t : tasks_from(task)) cmd_tsne(ctx, t);
    } else if (annotate->parsed()) {
      for (auto t : tasks_from(task)) cmd_annotate(ctx, t, recording);
    } else if (bench->parsed()) {
      const BenchReport r = cmd_bench(ctx, signals ? signals : cfg.bench.signals);
      std::printf("signals timed: %zu\n", r.signals_timed);
      std::printf("mean %.4f s  p95 %.4f s per %.0f s signal (preprocess %.4f, encode %.4f, classify %.4f)\n",
                  r.mean_seconds, r.p95_seconds, cfg.bench.duration_s, r.stage_mean.preprocess, r.stage_mean.encode,
                  r.stage_mean.classify);
      std::printf("paper comparison: measured mean %.4f s vs 0.0064 s reference (%.1fx)\n", r.mean_seconds,
                  r.mean_seconds / kReferenceSecondsPerSignal);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
