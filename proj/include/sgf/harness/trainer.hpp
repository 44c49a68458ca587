#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sgf/harness/model.hpp"

namespace sgf {

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::optional<double> val_auroc;  // unset when validation has one class
};

nlohmann::json to_json(const EpochLog& e);

struct TrainResult {
  Eigen::VectorXd best_parameters;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
  std::vector<EpochLog> history;
};

// Mini-batch Adam on the head only, mean BCE on logits. After each epoch the
// validation loss is measured; training stops once it has not improved for
// `early_stop_patience` epochs and the head is reset to the best epoch.
// Throws ConfigError for a single-class training set and TrainingError when
// the loss becomes non-finite. Each epoch is appended to `log` as one JSON line.
TrainResult train(Classifier& model, const FeatureSet& train_set, const FeatureSet& val_set,
                  const TrainConfig& config, std::ostream* log = nullptr);

}  // namespace sgf
