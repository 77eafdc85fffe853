#include "egmlatent/cae/early_stopping.hpp"

#include "egmlatent/core/error.hpp"

namespace egmlatent::cae {

EarlyStopping::EarlyStopping(std::size_t patience, double min_delta)
    : patience_(patience), min_delta_(min_delta) {
  if (patience < 1 || !(min_delta > 0.0)) {
    throw Error(ErrorKind::Configuration, "early stopping needs patience >= 1 and min_delta > 0");
  }
}

EarlyStopping::Decision EarlyStopping::observe(double val_loss) {
  ++epoch_;
  Decision d;
  if (epoch_ == 1 || best_ - val_loss >= min_delta_) {
    wait_ = 0;
  } else {
    ++wait_;
  }
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    d.new_best = true;
  }
  d.stop = wait_ >= patience_;
  return d;
}

}  // namespace egmlatent::cae
