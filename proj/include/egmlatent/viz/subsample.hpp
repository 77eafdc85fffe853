#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "egmlatent/classify/features.hpp"

namespace egmlatent::viz {

struct BalancedSubsample {
  classify::EmbeddingSet set;
  std::vector<std::size_t> rows;  // source rows, ascending
  std::vector<std::string> warnings;
};

/// Up to per_class rows of each label, drawn uniformly with the seed. A class
/// with fewer rows is kept whole and reported in `warnings`.
BalancedSubsample subsample_balanced(const classify::EmbeddingSet& set, std::size_t per_class,
                                     std::uint64_t seed);

}  // namespace egmlatent::viz
