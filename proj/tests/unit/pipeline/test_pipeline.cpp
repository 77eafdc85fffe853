#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "egmlatent/core/error.hpp"
#include "egmlatent/pipeline/commands.hpp"
#include "test_support.hpp"

using namespace egmlatent;
using namespace egmlatent::pipeline;
using nlohmann::json;
using testing::scratch_dir;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EGM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run config json round trip") {
  RunConfig c;
  c.seed = 99;
  c.paths.out = "/tmp/somewhere";
  c.synth.patients = 7;
  c.cae.max_epochs = 3;
  c.classifiers.knn_k = {1, 9};
  c.tsne.per_class = 40;
  const RunConfig back = run_config_from_json(run_config_to_json(c));
  CHECK(run_config_to_json(back) == run_config_to_json(c));
  CHECK(back.seed == 99);
  CHECK(back.paths.out == "/tmp/somewhere");
  CHECK(back.synth.patients == 7);
  CHECK(back.cae.max_epochs == 3);
  CHECK(back.classifiers.knn_k == std::vector<std::size_t>{1, 9});
}

TEST_CASE("missing keys keep defaults") {
  const RunConfig c = run_config_from_json(json::parse(R"({"seed": 4, "cae": {"max_epochs": 2}})"));
  CHECK(c.seed == 4);
  CHECK(c.cae.max_epochs == 2);
  CHECK(c.cae.filters == 64);
  CHECK(c.cae.latent_dim == 16);
  CHECK(c.classifiers.folds == 5);
}

TEST_CASE("unknown or invalid keys are configuration errors") {
  for (const char* text : {R"({"sed": 1})", R"({"cae": {"filterz": 3}})", R"({"paths": {"outt": "x"}})",
                           R"({"synth": {"patients": "many"}})", R"({"cae": {"kernel": 4}})"}) {
    CAPTURE(text);
    CHECK(kind_of([&] { run_config_from_json(json::parse(text)); }) == ErrorKind::Configuration);
  }
}

TEST_CASE("config hash ignores paths and follows the experiment") {
  RunConfig a, b;
  b.paths.out = "elsewhere";
  b.paths.figures = "figs";
  CHECK(config_hash(a) == config_hash(b));
  b.seed = a.seed + 1;
  CHECK(config_hash(a) != config_hash(b));
  RunConfig c;
  c.classifiers.threshold = 0.6;
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("stage seeds are distinct and stable") {
  RunConfig c;
  c.seed = 3;
  CHECK(c.stage_seed("split") == c.stage_seed("split"));
  CHECK(c.stage_seed("split") != c.stage_seed("synth"));
  CHECK(c.stage_seed("cv/focal") != c.stage_seed("cv/rotational"));
  RunConfig d;
  d.seed = 4;
  CHECK(c.stage_seed("split") != d.stage_seed("split"));
}

TEST_CASE("provenance names hash, seed and stage") {
  RunConfig c;
  c.seed = 12;
  std::ostringstream log;
  const Context ctx(c, log);
  const json p = ctx.provenance("eval");
  CHECK(p.at("config_hash") == config_hash(c));
  CHECK(p.at("seed") == 12);
  CHECK(p.at("stage") == "eval");
}

TEST_CASE("output lock is exclusive and released") {
  const auto dir = scratch_dir("pipeline_lock");
  {
    OutputLock lock(dir);
    CHECK(std::filesystem::exists(dir / ".egmlatent.lock"));
    CHECK(kind_of([&] { OutputLock second(dir); }) == ErrorKind::Io);
  }
  CHECK_FALSE(std::filesystem::exists(dir / ".egmlatent.lock"));
  OutputLock again(dir);
}

TEST_CASE("stages without upstream artifacts are missing-artifact errors") {
  const auto dir = scratch_dir("pipeline_missing");
  RunConfig c;
  c.paths.out = dir;
  std::ostringstream log;
  const Context ctx(c, log);
  CHECK(kind_of([&] { cmd_preprocess(ctx); }) == ErrorKind::MissingArtifact);
  CHECK(kind_of([&] { cmd_train_cae(ctx, data::Polarity::Bipolar); }) == ErrorKind::MissingArtifact);
  CHECK(kind_of([&] { cmd_embed(ctx, data::Polarity::Bipolar); }) == ErrorKind::MissingArtifact);
  CHECK(kind_of([&] { cmd_train_clf(ctx, data::DriverKind::Focal); }) == ErrorKind::MissingArtifact);
  CHECK(kind_of([&] { cmd_eval(ctx, data::DriverKind::Entanglement); }) == ErrorKind::MissingArtifact);
  CHECK(kind_of([&] { cmd_bench(ctx, 2); }) == ErrorKind::MissingArtifact);
}

TEST_CASE("exit codes are distinct per error family") {
  CHECK(exit_code(ErrorKind::Configuration) == 2);
  CHECK(exit_code(ErrorKind::UnsupportedRate) == 2);
  CHECK(exit_code(ErrorKind::MissingArtifact) == 3);
  for (auto k : {ErrorKind::DegenerateData, ErrorKind::DegenerateBatch, ErrorKind::TaskInfeasible,
                 ErrorKind::Stratification, ErrorKind::UndefinedAuc, ErrorKind::TooShort}) {
    CHECK(exit_code(k) == 4);
  }
  CHECK(exit_code(ErrorKind::Divergence) == 5);
  CHECK(exit_code(ErrorKind::Corruption) == 1);
  CHECK(exit_code(ErrorKind::Io) == 1);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch_dir("pipeline_cli");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("--bogus synth") == 2);
  {
    std::ofstream(dir / "bad.json") << R"({"cae": {"latent_dim": 0}})";
  }
  CHECK(run_cli("--config " + (dir / "bad.json").string() + " --out " + (dir / "a").string() + " synth") == 2);
  CHECK(run_cli("--config " + (dir / "missing.json").string() + " synth") == 2);
  CHECK(run_cli("--out " + (dir / "b").string() + " train-cae --polarity bipolar") == 3);
  CHECK(run_cli("--out " + (dir / "b").string() + " eval --task nonsense") == 2);
}
