#include "egmlatent/cae/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/tensor_io.hpp"
#include "egmlatent/data/corpus_io.hpp"

namespace egmlatent::cae {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'E', 'G', 'M', 'C'};

json history_to_json(const std::vector<EpochReport>& h) {
  json out = json::array();
  for (const auto& r : h) out.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}});
  return out;
}

std::string read_exact(std::istream& in, std::size_t n, const char* what) {
  std::string s(n, '\0');
  in.read(s.data(), std::streamsize(n));
  if (std::size_t(in.gcount()) != n) throw Error(ErrorKind::Corruption, std::string("checkpoint truncated in ") + what);
  return s;
}

}  // namespace

CaeCheckpoint make_checkpoint(TrainResult result, const data::NormalizationParams& normalization) {
  CaeCheckpoint c{std::move(result.model), normalization, result.history.size(), result.best_epoch,
                  result.best_val_loss, std::move(result.history), json::object()};
  return c;
}

void write_checkpoint(std::ostream& out, const CaeCheckpoint& checkpoint) {
  const json header = {{"config", config_to_json(checkpoint.model.config())},
                       {"normalization", data::normalization_to_json(checkpoint.normalization)},
                       {"epochs_run", checkpoint.epochs_run},
                       {"best_epoch", checkpoint.best_epoch},
                       {"best_val_loss", checkpoint.best_val_loss},
                       {"history", history_to_json(checkpoint.history)},
                       {"provenance", checkpoint.provenance}};
  const std::string text = header.dump();
  out.write(kMagic, 4);
  le::put_u16(out, kCheckpointVersion);
  le::put_u32(out, std::uint32_t(text.size()));
  out.write(text.data(), std::streamsize(text.size()));
  auto state = const_cast<CaeModel&>(checkpoint.model).state();
  le::put_u32(out, std::uint32_t(state.size()));
  for (const auto& [name, tensor] : state) {
    le::put_u16(out, std::uint16_t(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_tensor(out, *tensor);
  }
  if (!out) throw Error(ErrorKind::Io, "checkpoint write failed");
}

CaeCheckpoint read_checkpoint(std::istream& in) {
  if (read_exact(in, 4, "magic") != std::string(kMagic, 4)) {
    throw Error(ErrorKind::Corruption, "not a checkpoint (bad magic)");
  }
  std::uint16_t version;
  std::uint32_t header_len;
  try {
    version = le::get_u16(in);
    if (version != kCheckpointVersion) {
      throw Error(ErrorKind::Version, "checkpoint format version " + std::to_string(version) + ", expected " +
                                          std::to_string(kCheckpointVersion));
    }
    header_len = le::get_u32(in);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Version) throw;
    throw Error(ErrorKind::Corruption, std::string("checkpoint header: ") + e.what());
  }
  json header;
  try {
    header = json::parse(read_exact(in, header_len, "header"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, std::string("checkpoint header: ") + e.what());
  }

  CaeConfig config;
  data::NormalizationParams norm;
  std::vector<EpochReport> history;
  try {
    config = config_from_json(header.at("config"));
    norm = data::normalization_from_json(header.at("normalization"));
    for (const auto& r : header.at("history")) {
      history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                         r.at("val_loss").get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, std::string("checkpoint header: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::Corruption, std::string("checkpoint header: ") + e.what());
  }

  Rng unused(0);
  CaeCheckpoint ck{CaeModel(config, unused), norm, header.value("epochs_run", std::size_t(0)),
                   header.value("best_epoch", std::size_t(0)), header.value("best_val_loss", 0.0),
                   std::move(history), header.value("provenance", json::object())};
  auto state = ck.model.state();
  std::uint32_t count = 0;
  try {
    count = le::get_u32(in);
  } catch (const Error& e) {
    throw Error(ErrorKind::Corruption, std::string("checkpoint records: ") + e.what());
  }
  if (count != state.size()) {
    throw Error(ErrorKind::Corruption, "checkpoint has " + std::to_string(count) + " tensors, model needs " +
                                           std::to_string(state.size()));
  }
  for (auto& [name, tensor] : state) {
    std::string got;
    Tensor t;
    try {
      const std::uint16_t len = le::get_u16(in);
      got = read_exact(in, len, "record name");
      t = read_tensor(in);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Version) throw;
      throw Error(ErrorKind::Corruption, "checkpoint record " + name + ": " + e.what());
    }
    if (got != name) throw Error(ErrorKind::Corruption, "checkpoint record '" + got + "', expected '" + name + "'");
    if (t.shape() != tensor->shape()) {
      throw Error(ErrorKind::Corruption, "checkpoint record " + name + " has shape " + shape_string(t.shape()));
    }
    *tensor = std::move(t);
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const CaeCheckpoint& checkpoint) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    write_checkpoint(out, checkpoint);
  }
  std::filesystem::rename(tmp, path);
}

CaeCheckpoint load_checkpoint(const std::filesystem::path& path) {
  data::require_file(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_checkpoint(in);
}

std::string loss_history_csv(const std::vector<EpochReport>& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  char buf[96];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.train_loss, r.val_loss);
    out += buf;
  }
  return out;
}

Tensor embed_dataset(const CaeCheckpoint& checkpoint, const data::SegmentDataset& dataset) {
  const data::Polarity want = checkpoint.model.config().polarity;
  if (dataset.polarity != want) {
    throw Error(ErrorKind::Configuration, "checkpoint was trained on " + std::string(data::to_string(want)) +
                                              " segments, dataset is " +
                                              std::string(data::to_string(dataset.polarity)));
  }
  return embed(checkpoint.model, dataset.data);
}

}  // namespace egmlatent::cae
