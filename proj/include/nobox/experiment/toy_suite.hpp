#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nobox/attack/attack.hpp"
#include "nobox/data/toy.hpp"
#include "nobox/evaluation/report.hpp"
#include "nobox/evaluation/victim.hpp"
#include "nobox/model/substitute.hpp"
#include "nobox/training/trainer.hpp"

namespace nobox::experiment {

/// Desk-scale transfer setup. Victims classify every class in `victim_classes`;
/// substitutes only ever see disjoint two-class auxiliary sets drawn from
/// class0 and class1.
struct SuiteConfig {
  data::ToyShape class0 = data::ToyShape::kRing;
  data::ToyShape class1 = data::ToyShape::kCross;
  std::vector<data::ToyShape> victim_classes{data::ToyShape::kDisk,  data::ToyShape::kSquare,
                                             data::ToyShape::kTriangle, data::ToyShape::kCross,
                                             data::ToyShape::kRing,  data::ToyShape::kBar};
  // Low positional variance keeps the two-class problem learnable from n = 20.
  data::ToyStyle style{.distractors = 0, .position_jitter = 0.2};
  std::uint64_t data_seed = 1;

  int victim_train_per_class = 800;
  int victim_test_per_class = 200;
  int victim_width = 12;
  double victim_dropout = 0.25;
  training::FitOptions victim_fit{.epochs = 30, .augmentation = {.noise = 0.03}};

  int n = 20;             // auxiliary set size
  int sets_per_seed = 1;  // every member of every set is attacked
  int substitute_width = 8;
  int residual_blocks = 2;
  int supervised_width = 16;
  model::ClassifierArch supervised_arch = model::ClassifierArch::kVgg;
  training::TrainConfig train{.max_iterations = 1000};
  attack::AttackConfig attack{};

  model::ImageShape image_shape() const { return {style.channels, style.size, style.size}; }
  /// Victim label of auxiliary label 0 or 1. Throws when the class is not in the zoo.
  int victim_label(int aux_label) const;
};

struct VictimZoo {
  std::vector<eval::LocalVictim> victims;
  std::vector<double> benign_accuracy;  // on the held-out victim test split
};

/// Trains vgg, resnet and wide victims. With a cache directory, trained victims
/// are stored as checkpoints keyed by the configuration and reused.
VictimZoo build_victim_zoo(const SuiteConfig& config, const std::filesystem::path& cache_dir = {});

struct Method {
  std::string name;
  training::Mechanism mechanism = training::Mechanism::kPrototypical;
  int decoders = 1;
};

/// Attack targets for one seed: n * sets_per_seed images, half per class,
/// shared by every method at that seed.
std::vector<data::AuxiliarySet> auxiliary_sets(const SuiteConfig& config, std::uint64_t seed);

struct SeedOutcome {
  eval::EvalReport report;
  // Labels are victim labels.
  std::vector<data::LabeledImage> benign;
  std::vector<data::LabeledImage> adversarial;
  std::vector<attack::CraftRecord> records;
  std::vector<training::TrainLog> logs;
  double train_seconds = 0.0;
  double craft_seconds = 0.0;
};

SeedOutcome run_method(const SuiteConfig& config, const VictimZoo& zoo, const Method& method, std::uint64_t seed);

/// Labelled evaluation of adversarial examples against every victim.
eval::EvalReport evaluate(const VictimZoo& zoo, std::span<const data::LabeledImage> examples,
                          const std::string& method);

/// Train and test accuracy of a substitute cast as a classifier: the prototype
/// classifier for prototypical models, argmax for the supervised one.
struct GapMeasurement {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double gap() const { return train_accuracy - test_accuracy; }
};

GapMeasurement measure_gap(const SuiteConfig& config, training::Mechanism mechanism, std::uint64_t seed,
                           int test_per_class);

}  // namespace nobox::experiment
