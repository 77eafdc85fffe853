#include "egmlatent/classify/models.hpp"

#include "egmlatent/core/error.hpp"
#include "egmlatent/core/tensor_io.hpp"
#include "egmlatent/data/corpus_io.hpp"

namespace egmlatent::classify {

using nlohmann::json;

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Logistic: return "logistic";
    case Family::Knn: return "knn";
    case Family::Gbdt: return "gbdt";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  if (name == "logistic") return Family::Logistic;
  if (name == "knn") return Family::Knn;
  if (name == "gbdt") return Family::Gbdt;
  throw Error(ErrorKind::Configuration, "unknown classifier family '" + std::string(name) + "'");
}

json hyperparams_to_json(const Hyperparams& h) {
  json j = {{"family", std::string(to_string(h.family))}};
  switch (h.family) {
    case Family::Logistic: j["C"] = h.C; break;
    case Family::Knn: j["k"] = h.k; break;
    case Family::Gbdt:
      j["n_estimators"] = h.n_estimators;
      j["max_depth"] = h.max_depth;
      j["shrinkage"] = h.shrinkage;
      break;
  }
  return j;
}

Hyperparams hyperparams_from_json(const json& j) {
  try {
    Hyperparams h;
    h.family = family_from_string(j.at("family").get<std::string>());
    h.C = j.value("C", h.C);
    h.k = j.value("k", h.k);
    h.n_estimators = j.value("n_estimators", h.n_estimators);
    h.max_depth = j.value("max_depth", h.max_depth);
    h.shrinkage = j.value("shrinkage", h.shrinkage);
    return h;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Configuration, std::string("classifier hyperparameters: ") + e.what());
  }
}

ClassifierModel train_classifier(const Tensor& x, std::span<const std::uint8_t> y, const Hyperparams& h) {
  switch (h.family) {
    case Family::Logistic: return logreg_train(x, y, h.C);
    case Family::Knn: return knn_fit(x, y, h.k);
    case Family::Gbdt: return gbdt_train(x, y, h.n_estimators, h.max_depth, h.shrinkage);
  }
  throw Error(ErrorKind::Configuration, "unknown classifier family");
}

double predict_proba(const ClassifierModel& m, std::span<const float> x) {
  return std::visit(
      [&](const auto& model) -> double {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LogisticModel>) return logreg_proba(model, x);
        if constexpr (std::is_same_v<T, KnnModel>) return knn_proba(model, x);
        if constexpr (std::is_same_v<T, GbdtModel>) return gbdt_proba(model, x);
      },
      m);
}

std::vector<double> predict_proba(const ClassifierModel& m, const Tensor& x) {
  if (x.rank() != 2) throw Error(ErrorKind::Dimension, "predict_proba expects N x D, got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = predict_proba(m, std::span<const float>(x.data() + i * d, d));
  return out;
}

Family family_of(const ClassifierModel& m) noexcept {
  switch (m.index()) {
    case 0: return Family::Logistic;
    case 1: return Family::Knn;
    default: return Family::Gbdt;
  }
}

void save_classifier(const std::filesystem::path& stem, const ClassifierModel& m, const json& provenance) {
  json j = {{"family", std::string(to_string(family_of(m)))}, {"provenance", provenance}};
  if (const auto* lr = std::get_if<LogisticModel>(&m)) {
    j["C"] = lr->C;
    j["weights"] = lr->weights;
    j["bias"] = lr->bias;
    j["iterations"] = lr->iterations;
    j["gradient_norm"] = lr->gradient_norm;
  } else if (const auto* knn = std::get_if<KnnModel>(&m)) {
    const std::string file = stem.filename().string() + ".knn.egmt";
    save_tensor(stem.parent_path() / file, knn->features);
    j["k"] = knn->k;
    j["features_file"] = file;
    j["labels"] = knn->labels;
  } else {
    const auto& g = std::get<GbdtModel>(m);
    j["n_estimators"] = g.n_estimators;
    j["max_depth"] = g.max_depth;
    j["shrinkage"] = g.shrinkage;
    j["prior"] = g.prior;
    j["train_logloss"] = g.train_logloss;
    json trees = json::array();
    for (const auto& t : g.trees) {
      json nodes = json::array();
      for (const auto& nd : t.nodes) {
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", nd.threshold},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"leaf_value", nd.leaf_value}});
      }
      trees.push_back(nodes);
    }
    j["trees"] = trees;
  }
  data::write_json(stem.string() + ".json", j);
}

ClassifierModel load_classifier(const std::filesystem::path& stem) {
  const json j = data::read_json(stem.string() + ".json");
  try {
    switch (family_from_string(j.at("family").get<std::string>())) {
      case Family::Logistic: {
        LogisticModel m;
        m.C = j.at("C").get<double>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        m.iterations = j.value("iterations", std::size_t(0));
        m.gradient_norm = j.value("gradient_norm", 0.0);
        return m;
      }
      case Family::Knn: {
        KnnModel m;
        m.k = j.at("k").get<std::size_t>();
        m.labels = j.at("labels").get<std::vector<std::uint8_t>>();
        const auto path = stem.parent_path() / j.at("features_file").get<std::string>();
        data::require_file(path);
        m.features = load_tensor(path);
        if (m.features.rank() != 2 || m.features.dim(0) != m.labels.size() || m.k < 1 || m.k > m.labels.size()) {
          throw Error(ErrorKind::Corruption, "knn model " + stem.string() + " is inconsistent");
        }
        return m;
      }
      case Family::Gbdt: {
        GbdtModel m;
        m.n_estimators = j.at("n_estimators").get<std::size_t>();
        m.max_depth = j.at("max_depth").get<std::size_t>();
        m.shrinkage = j.at("shrinkage").get<double>();
        m.prior = j.at("prior").get<double>();
        m.train_logloss = j.value("train_logloss", std::vector<double>{});
        for (const auto& tj : j.at("trees")) {
          RegressionTree t;
          for (const auto& nj : tj) {
            t.nodes.push_back({nj.at("feature").get<int>(), nj.at("threshold").get<double>(), nj.at("left").get<int>(),
                               nj.at("right").get<int>(), nj.at("leaf_value").get<double>()});
          }
          const int count = int(t.nodes.size());
          for (const auto& nd : t.nodes) {
            if (nd.feature >= 0 && (nd.left <= 0 || nd.right <= 0 || nd.left >= count || nd.right >= count)) {
              throw Error(ErrorKind::Corruption, "gbdt model " + stem.string() + " has a dangling child");
            }
          }
          if (t.nodes.empty()) throw Error(ErrorKind::Corruption, "gbdt model has an empty tree");
          m.trees.push_back(std::move(t));
        }
        return m;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Corruption, stem.string() + ": " + e.what());
  }
  throw Error(ErrorKind::Corruption, stem.string() + ": unknown family");
}

}  // namespace egmlatent::classify
