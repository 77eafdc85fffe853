#include "egmlatent/cae/config.hpp"

#include <set>

#include "egmlatent/core/error.hpp"

namespace egmlatent::cae {

using nlohmann::json;

void CaeConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Configuration, "cae config: " + what); };
  if (conv_blocks < 1) fail("conv_blocks must be >= 1");
  if (filters < 1) fail("filters must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) fail("kernel must be odd");
  if (!(dropout_p >= 0.0f && dropout_p < 1.0f)) fail("dropout_p must be in [0, 1)");
  if (latent_dim < 1) fail("latent_dim must be >= 1");
  if (!(learning_rate > 0.0f)) fail("learning_rate must be positive");
  if (batch_size < 2) fail("batch_size must be >= 2 (train-mode batchnorm)");
  if (patience < 1) fail("patience must be >= 1");
  if (!(min_delta > 0.0)) fail("min_delta must be positive");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (!(lambda_reg >= 0.0) || !(tau >= 0.0) || !(eta > 0.0)) fail("regmse needs lambda >= 0, tau >= 0, eta > 0");
  // "Same" padding keeps the extent; each pool halves it with a floor of 1.
  std::size_t h = input_height(), w = input_width();
  for (std::size_t b = 0; b < conv_blocks; ++b) {
    if (h < 2 && w < 2) fail("spatial extent exhausted after " + std::to_string(b) + " blocks");
    h = std::max<std::size_t>(1, h / 2);
    w = std::max<std::size_t>(1, w / 2);
  }
}

std::string_view to_string(LossKind kind) noexcept { return kind == LossKind::Mse ? "mse" : "regmse"; }

LossKind loss_from_string(std::string_view name) {
  if (name == "mse") return LossKind::Mse;
  if (name == "regmse") return LossKind::RegMse;
  throw Error(ErrorKind::Configuration, "unknown loss '" + std::string(name) + "'");
}

json config_to_json(const CaeConfig& c) {
  return {{"conv_blocks", c.conv_blocks},   {"filters", c.filters},
          {"kernel", c.kernel},             {"dropout_p", c.dropout_p},
          {"latent_dim", c.latent_dim},     {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},     {"patience", c.patience},
          {"min_delta", c.min_delta},       {"max_epochs", c.max_epochs},
          {"polarity", std::string(data::to_string(c.polarity))},
          {"loss", std::string(to_string(c.loss))},
          {"lambda_reg", c.lambda_reg},     {"tau", c.tau},
          {"eta", c.eta}};
}

CaeConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Configuration, "cae config must be a JSON object");
  static const std::set<std::string> known{"conv_blocks", "filters",    "kernel",     "dropout_p",
                                           "latent_dim",  "learning_rate", "batch_size", "patience",
                                           "min_delta",   "max_epochs", "polarity",   "loss",
                                           "lambda_reg",  "tau",        "eta"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorKind::Configuration, "unknown cae config key '" + key + "'");
  }
  CaeConfig c;
  try {
    c.conv_blocks = j.value("conv_blocks", c.conv_blocks);
    c.filters = j.value("filters", c.filters);
    c.kernel = j.value("kernel", c.kernel);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.patience = j.value("patience", c.patience);
    c.min_delta = j.value("min_delta", c.min_delta);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    if (j.contains("polarity")) c.polarity = data::polarity_from_string(j.at("polarity").get<std::string>());
    if (j.contains("loss")) c.loss = loss_from_string(j.at("loss").get<std::string>());
    c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
    c.tau = j.value("tau", c.tau);
    c.eta = j.value("eta", c.eta);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Configuration, std::string("cae config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace egmlatent::cae
