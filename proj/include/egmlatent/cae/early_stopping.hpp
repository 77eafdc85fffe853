#pragma once

#include <cstddef>
#include <limits>

namespace egmlatent::cae {

/// Validation-loss stopping rule. The reference is the lowest loss seen so
/// far. An epoch counts as an improvement only if it beats that reference by
/// at least min_delta; smaller decreases still lower the reference and become
/// the retained epoch but do not reset the wait counter. Training stops once
/// `patience` consecutive epochs pass without an improvement.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta);

  struct Decision {
    bool new_best = false;  // retain this epoch's weights
    bool stop = false;
  };
  /// Epochs are numbered from 1 in call order.
  Decision observe(double val_loss);

  std::size_t best_epoch() const noexcept { return best_epoch_; }
  double best_loss() const noexcept { return best_; }
  std::size_t wait() const noexcept { return wait_; }
  std::size_t epochs_seen() const noexcept { return epoch_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t wait_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace egmlatent::cae
