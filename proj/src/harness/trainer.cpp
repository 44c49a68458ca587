#include "sgf/harness/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "sgf/common/error.hpp"
#include "sgf/metrics/metrics.hpp"

namespace sgf {

nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j{{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_loss", e.val_loss},
                   {"val_accuracy", e.val_accuracy}};
  j["val_auroc"] = e.val_auroc ? nlohmann::json(*e.val_auroc) : nlohmann::json(nullptr);
  return j;
}

namespace {

bool both_classes(const Eigen::VectorXd& y) {
  return (y.array() > 0.5).any() && (y.array() < 0.5).any();
}

}  // namespace

TrainResult train(Classifier& model, const FeatureSet& train_set, const FeatureSet& val_set,
                  const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (train_set.size() == 0) throw ConfigError("training split is empty");
  if (val_set.size() == 0) throw ConfigError("validation split is empty");
  if (!both_classes(train_set.labels)) throw ConfigError("training split contains a single class");

  Head& head = model.head();
  Adam<double> adam(head.parameter_count(), config.learning_rate);
  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd xb;
  Eigen::VectorXd yb;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto nb = static_cast<Eigen::Index>(end - start);
      xb.resize(train_set.features.rows(), nb);
      yb.resize(nb);
      for (Eigen::Index k = 0; k < nb; ++k) {
        xb.col(k) = train_set.features.col(order[start + static_cast<std::size_t>(k)]);
        yb(k) = train_set.labels(order[start + static_cast<std::size_t>(k)]);
      }
      const double loss = head.loss_and_gradient(xb, yb, &grad);
      if (!std::isfinite(loss) || !grad.allFinite())
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * double(nb);
      adam.step(head.parameters(), grad);
    }

    EpochLog e;
    e.epoch = epoch;
    e.train_loss = loss_sum / double(train_set.size());
    e.val_loss = head.loss_and_gradient(val_set.features, val_set.labels, nullptr);
    if (!std::isfinite(e.val_loss)) throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    const Eigen::ArrayXd p = model.probabilities(val_set.features).array();
    const Eigen::ArrayXi y = (val_set.labels.array() > 0.5).cast<int>();
    e.val_accuracy = metrics::accuracy(y, (p >= 0.5).cast<int>());
    if (both_classes(val_set.labels)) e.val_auroc = metrics::auroc(y, p);
    result.history.push_back(e);
    if (log) *log << to_json(e).dump() << '\n' << std::flush;

    if (e.val_loss < result.best_val_loss) {
      result.best_val_loss = e.val_loss;
      result.best_epoch = epoch;
      result.best_parameters = head.parameters();
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
  }
  head.parameters() = result.best_parameters;
  return result;
}

}  // namespace sgf
