#include <doctest.h>

#include <fstream>
#include <sstream>

#include "egmlatent/cae/checkpoint.hpp"
#include "egmlatent/core/error.hpp"
#include "test_support.hpp"

using namespace egmlatent;
using namespace egmlatent::cae;
using testing::random_tensor;
using testing::scratch_dir;

namespace {

CaeCheckpoint trained_checkpoint() {
  CaeConfig c;
  c.filters = 3;
  c.latent_dim = 16;
  c.batch_size = 4;
  c.max_epochs = 2;
  Rng rng(1);
  const Tensor tr = random_tensor(Shape{8, 15, 250}, rng), va = random_tensor(Shape{3, 15, 250}, rng);
  auto ck = make_checkpoint(train_cae(c, tr, va, 5), {-0.7f, 0.9f, data::Polarity::Bipolar});
  ck.provenance = {{"seed", 5}};
  return ck;
}

std::string bytes_of(const CaeCheckpoint& ck) {
  std::ostringstream out;
  write_checkpoint(out, ck);
  return out.str();
}

ErrorKind read_kind(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_checkpoint(in);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  CaeCheckpoint ck = trained_checkpoint();
  const std::string bytes = bytes_of(ck);
  std::istringstream in(bytes);
  CaeCheckpoint back = read_checkpoint(in);
  CHECK(back.model.config() == ck.model.config());
  CHECK(back.normalization.p_low == ck.normalization.p_low);
  CHECK(back.normalization.p_high == ck.normalization.p_high);
  CHECK(back.epochs_run == 2);
  CHECK(back.best_epoch == ck.best_epoch);
  CHECK(back.best_val_loss == ck.best_val_loss);
  REQUIRE(back.history.size() == ck.history.size());
  for (std::size_t i = 0; i < ck.history.size(); ++i) {
    CHECK(back.history[i].train_loss == ck.history[i].train_loss);
    CHECK(back.history[i].val_loss == ck.history[i].val_loss);
  }
  CHECK(back.provenance == ck.provenance);
  auto a = ck.model.state(), b = back.model.state();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].tensor == *b[i].tensor);
  CHECK(bytes_of(back) == bytes);
}

TEST_CASE("save, load, save gives identical files and embeddings") {
  const auto dir = scratch_dir("checkpoint");
  CaeCheckpoint ck = trained_checkpoint();
  save_checkpoint(dir / "a.egmc", ck);
  CaeCheckpoint back = load_checkpoint(dir / "a.egmc");
  save_checkpoint(dir / "b.egmc", back);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.egmc") == slurp(dir / "b.egmc"));
  CHECK_FALSE(std::filesystem::exists(dir / "a.egmc.tmp"));

  Rng rng(3);
  const Tensor x = random_tensor(Shape{6, 15, 250}, rng);
  CHECK(embed(ck.model, x) == embed(back.model, x));
  CHECK(ck.model.reconstruct(x) == back.model.reconstruct(x));
}

TEST_CASE("truncated or mangled checkpoints are corruption errors") {
  const std::string bytes = bytes_of(trained_checkpoint());
  for (std::size_t cut : {std::size_t(0), std::size_t(3), std::size_t(5), std::size_t(40), bytes.size() / 2,
                          bytes.size() - 1}) {
    CAPTURE(cut);
    CHECK(read_kind(bytes.substr(0, cut)) == ErrorKind::Corruption);
  }
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK(read_kind(bad) == ErrorKind::Corruption);
}

TEST_CASE("other format versions are version errors") {
  std::string bytes = bytes_of(trained_checkpoint());
  bytes[4] = static_cast<char>(kCheckpointVersion + 1);
  CHECK(read_kind(bytes) == ErrorKind::Version);
}

TEST_CASE("missing checkpoint file is a missing-artifact error") {
  const auto dir = scratch_dir("checkpoint_missing");
  try {
    load_checkpoint(dir / "nope.egmc");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingArtifact);
  }
}

TEST_CASE("embed_dataset checks polarity") {
  CaeCheckpoint ck = trained_checkpoint();
  data::SegmentDataset ds;
  ds.polarity = data::Polarity::Unipolar;
  ds.data = Tensor(Shape{2, 20, 250});
  try {
    embed_dataset(ck, ds);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
  Rng rng(4);
  ds.polarity = data::Polarity::Bipolar;
  ds.data = random_tensor(Shape{3, 15, 250}, rng);
  const Tensor z = embed_dataset(ck, ds);
  CHECK(z.shape() == Shape{3, 16});
}

TEST_CASE("loss history csv") {
  std::vector<EpochReport> h{{1, 0.5, 0.25}, {2, 0.1, 1.0 / 3.0}};
  CHECK(loss_history_csv(h) == "epoch,train_loss,val_loss\n1,0.5,0.25\n2,0.10000000000000001,0.33333333333333331\n");
}

TEST_CASE("config json round trip and validation") {
  CaeConfig c;
  c.polarity = data::Polarity::Unipolar;
  c.loss = LossKind::RegMse;
  c.lambda_reg = 0.5;
  CHECK(config_from_json(config_to_json(c)) == c);
  auto kind = [](const nlohmann::json& j) {
    try {
      config_from_json(j);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind({{"filterz", 3}}) == ErrorKind::Configuration);
  CHECK(kind({{"latent_dim", 0}}) == ErrorKind::Configuration);
  CHECK(kind({{"dropout_p", 1.0}}) == ErrorKind::Configuration);
  CHECK(kind({{"min_delta", 0.0}}) == ErrorKind::Configuration);
  CHECK(kind({{"kernel", 4}}) == ErrorKind::Configuration);
  CHECK(kind({{"conv_blocks", 9}}) == ErrorKind::Configuration);
  CHECK(kind({{"polarity", "tripolar"}}) == ErrorKind::Configuration);
  CHECK(kind({{"loss", "l1"}}) == ErrorKind::Configuration);
  CHECK(config_from_json(nlohmann::json::object()) == CaeConfig{});
}
