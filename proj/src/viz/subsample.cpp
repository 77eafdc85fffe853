#include "egmlatent/viz/subsample.hpp"

#include <algorithm>

#include "egmlatent/core/rng.hpp"

namespace egmlatent::viz {

BalancedSubsample subsample_balanced(const classify::EmbeddingSet& set, std::size_t per_class, std::uint64_t seed) {
  BalancedSubsample out;
  Rng rng = Rng(seed).fork("subsample");
  for (std::uint8_t label : {std::uint8_t(1), std::uint8_t(0)}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < set.size(); ++i)
      if (set.labels[i] == label) members.push_back(i);
    if (members.size() < per_class) {
      out.warnings.push_back("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                             " rows, fewer than " + std::to_string(per_class) + "; keeping all");
    } else {
      rng.shuffle(members);
      members.resize(per_class);
    }
    out.rows.insert(out.rows.end(), members.begin(), members.end());
  }
  std::sort(out.rows.begin(), out.rows.end());
  out.set = set.subset(out.rows);
  return out;
}

}  // namespace egmlatent::viz
