#include <algorithm>
#include <cmath>
#include <numeric>

#include "egmlatent/classify/models.hpp"
#include "egmlatent/core/error.hpp"
#include "internal.hpp"

namespace egmlatent::classify {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kMinHessian = 1e-6;
constexpr int kMaxHalvings = 30;

double mean_logloss(std::span<const double> f, std::span<const std::uint8_t> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += detail::softplus(f[i]) - (y[i] ? f[i] : 0.0);
  return s / double(f.size());
}

struct Split {
  double gain = kMinGain;
  int feature = -1;
  double threshold = 0.0;
};

// Level-wise exact greedy tree on residuals r with hessians h. Rows are
// scanned in per-feature presorted order, so each level costs O(N * D).
RegressionTree fit_tree(const Tensor& x, const std::vector<std::vector<std::size_t>>& sorted,
                        const std::vector<double>& r, const std::vector<double>& h, std::size_t max_depth) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<int> node_of(n, 0);  // -1 once the row's leaf is final
  std::vector<int> active{0};
  auto value_at = [&](std::size_t i, std::size_t f) { return double(x.data()[i * d + f]); };

  for (std::size_t depth = 0; depth <= max_depth && !active.empty(); ++depth) {
    const std::size_t nodes = tree.nodes.size();
    std::vector<double> sum_r(nodes, 0.0), sum_h(nodes, 0.0);
    std::vector<std::size_t> count(nodes, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (node_of[i] < 0) continue;
      sum_r[node_of[i]] += r[i];
      sum_h[node_of[i]] += h[i];
      ++count[node_of[i]];
    }
    std::vector<Split> best(nodes);
    if (depth < max_depth) {
      std::vector<double> left_r(nodes), last(nodes);
      std::vector<std::size_t> left_n(nodes);
      for (std::size_t f = 0; f < d; ++f) {
        std::fill(left_r.begin(), left_r.end(), 0.0);
        std::fill(left_n.begin(), left_n.end(), 0);
        for (std::size_t i : sorted[f]) {
          const int a = node_of[i];
          if (a < 0) continue;
          const double v = value_at(i, f);
          if (left_n[a] > 0 && v > last[a]) {
            const double sl = left_r[a], sr = sum_r[a] - sl;
            const double nl = double(left_n[a]), nr = double(count[a] - left_n[a]);
            const double gain = sl * sl / nl + sr * sr / nr - sum_r[a] * sum_r[a] / double(count[a]);
            if (gain > best[a].gain) best[a] = {gain, int(f), 0.5 * (last[a] + v)};
          }
          left_r[a] += r[i];
          ++left_n[a];
          last[a] = v;
        }
      }
    }
    std::vector<int> next;
    for (int a : active) {
      if (best[a].feature < 0) {
        tree.nodes[a].leaf_value = sum_r[a] / std::max(sum_h[a], kMinHessian);
        continue;
      }
      const int left = int(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[a].feature = best[a].feature;
      tree.nodes[a].threshold = best[a].threshold;
      tree.nodes[a].left = left;
      tree.nodes[a].right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const int a = node_of[i];
      if (a < 0) continue;
      const TreeNode& node = tree.nodes[a];
      if (node.feature < 0) {
        node_of[i] = -1;
      } else {
        node_of[i] = value_at(i, std::size_t(node.feature)) <= node.threshold ? node.left : node.right;
      }
    }
    active = std::move(next);
  }
  return tree;
}

}  // namespace

double RegressionTree::predict(std::span<const float> x) const {
  std::size_t at = 0;
  while (nodes[at].feature >= 0) {
    at = std::size_t(double(x[std::size_t(nodes[at].feature)]) <= nodes[at].threshold ? nodes[at].left
                                                                                       : nodes[at].right);
  }
  return nodes[at].leaf_value;
}

GbdtModel gbdt_train(const Tensor& x, std::span<const std::uint8_t> y, std::size_t n_estimators,
                     std::size_t max_depth, double shrinkage) {
  detail::check_training_inputs(x, y, "gradient boosting");
  if (max_depth < 1 || !(shrinkage > 0.0)) {
    throw Error(ErrorKind::Configuration, "gradient boosting needs max_depth >= 1 and shrinkage > 0");
  }
  const std::size_t n = x.dim(0), d = x.dim(1);
  GbdtModel m;
  m.n_estimators = n_estimators;
  m.max_depth = max_depth;
  m.shrinkage = shrinkage;
  std::size_t pos = 0;
  for (auto v : y) pos += v ? 1 : 0;
  const double rate = double(pos) / double(n);
  m.prior = std::log(rate / (1.0 - rate));

  std::vector<std::vector<std::size_t>> sorted(d, std::vector<std::size_t>(n));
  for (std::size_t f = 0; f < d; ++f) {
    std::iota(sorted[f].begin(), sorted[f].end(), 0);
    std::stable_sort(sorted[f].begin(), sorted[f].end(),
                     [&](std::size_t a, std::size_t b) { return x.data()[a * d + f] < x.data()[b * d + f]; });
  }

  std::vector<double> f(n, m.prior), r(n), h(n), stage(n), trial(n);
  double loss = mean_logloss(f, y);
  m.train_logloss.push_back(loss);
  for (std::size_t t = 0; t < n_estimators; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = detail::sigmoid(f[i]);
      r[i] = (y[i] ? 1.0 : 0.0) - p;
      h[i] = p * (1.0 - p);
    }
    RegressionTree tree = fit_tree(x, sorted, r, h, max_depth);
    for (std::size_t i = 0; i < n; ++i) stage[i] = tree.predict(std::span<const float>(x.data() + i * d, d));
    // Halve the stage until the training loss does not rise.
    double scale = shrinkage, trial_loss = 0.0;
    for (int k = 0; k <= kMaxHalvings; ++k, scale *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = f[i] + scale * stage[i];
      trial_loss = mean_logloss(trial, y);
      if (trial_loss <= loss) break;
    }
    if (trial_loss > loss) {
      scale = 0.0;
      trial_loss = loss;
    } else {
      f.swap(trial);
    }
    for (auto& node : tree.nodes) node.leaf_value *= scale;
    m.trees.push_back(std::move(tree));
    loss = trial_loss;
    m.train_logloss.push_back(loss);
  }
  return m;
}

double gbdt_proba(const GbdtModel& m, std::span<const float> x) {
  double f = m.prior;
  for (const auto& t : m.trees) f += t.predict(x);
  return detail::sigmoid(f);
}

}  // namespace egmlatent::classify
