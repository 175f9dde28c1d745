#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nobox/data/image.hpp"
#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"
#include "nobox/training/losses.hpp"

namespace nobox::training {

struct TrainConfig {
  Mechanism mechanism = Mechanism::kPrototypical;
  int max_iterations = 15000;
  double learning_rate = 1e-3;
  int batch = 0;  // 0 = full batch
  std::uint64_t seed = 0;
  int plateau_patience = 10;
  double plateau_tolerance = 1e-4;  // relative improvement of the smoothed loss
  int check_interval = 100;
  double smoothing = 0.99;
  // naive_supervised only
  double weight_decay = 5e-4;
  AugmentOptions augmentation{};

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct TrainLog {
  std::vector<double> loss;            // one entry per iteration run
  std::vector<double> train_accuracy;  // per iteration (full batch = one epoch); empty for chaos/naive_ae
  int stopped_at = 0;                  // number of iterations run
  bool early_stopped = false;
  int best_iteration = 0;              // iteration count at the returned snapshot
  double best_smoothed_loss = 0.0;
  std::vector<double> smoothed_at_checks;

  /// Columns: iteration, loss[, train_acc].
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct SubstituteTrainResult {
  model::SubstituteModel model;
  TrainLog log;
  std::optional<data::PrototypeBank> bank;  // prototypical only
};

/// Adam with a fixed learning rate; returns the best smoothed-loss snapshot.
/// Throws std::invalid_argument when the mechanism is incompatible with the model.
SubstituteTrainResult train_substitute(model::SubstituteModel model, const data::AuxiliarySet& aux,
                                       const TrainConfig& config);

struct ClassifierTrainResult {
  model::ClassifierNet net;
  TrainLog log;
};

/// The naive supervised substitute: cross-entropy, weight decay, dropout, augmentation.
ClassifierTrainResult train_naive_supervised(model::ClassifierNet net, const data::AuxiliarySet& aux,
                                             const TrainConfig& config);

/// Minibatch training for larger labelled sets (used for victim models).
struct FitOptions {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 5e-4;
  AugmentOptions augmentation{};
  std::uint64_t seed = 0;
};

ClassifierTrainResult fit_classifier(model::ClassifierNet net, std::span<const data::LabeledImage> examples,
                                     const FitOptions& options);

}  // namespace nobox::training
