#pragma once

#include <cstddef>
#include <string>

#include "json.hpp"
#include "egmlatent/data/recording.hpp"

namespace egmlatent::cae {

enum class LossKind { Mse, RegMse };

struct CaeConfig {
  std::size_t conv_blocks = 2;
  std::size_t filters = 64;
  std::size_t kernel = 3;
  float dropout_p = 0.25f;
  std::size_t latent_dim = 16;
  float learning_rate = 1e-3f;
  std::size_t batch_size = 128;
  std::size_t patience = 5;
  double min_delta = 0.00025;
  std::size_t max_epochs = 100;
  data::Polarity polarity = data::Polarity::Bipolar;
  LossKind loss = LossKind::Mse;
  double lambda_reg = 1.0;
  double tau = 0.1;
  double eta = 1e-8;

  std::size_t input_height() const { return data::channel_count(polarity); }
  std::size_t input_width() const { return 250; }
  /// Throws a configuration error when a field is out of range or the
  /// geometry leaves no spatial extent.
  void validate() const;

  friend bool operator==(const CaeConfig&, const CaeConfig&) = default;
};

std::string_view to_string(LossKind kind) noexcept;
LossKind loss_from_string(std::string_view name);

nlohmann::json config_to_json(const CaeConfig& c);
/// Missing keys keep their defaults; unknown keys are a configuration error.
CaeConfig config_from_json(const nlohmann::json& j);

}  // namespace egmlatent::cae
