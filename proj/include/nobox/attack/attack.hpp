#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nobox/attack/budget.hpp"
#include "nobox/attack/losses.hpp"
#include "nobox/attack/objective.hpp"
#include "nobox/data/image.hpp"
#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"

namespace nobox::attack {

enum class Baseline { kIfgsm, kPgd, kNone };

std::string to_string(Baseline baseline);
Baseline baseline_from_string(const std::string& name);
std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct AttackConfig {
  Budget budget{};
  Baseline baseline = Baseline::kIfgsm;
  int baseline_iters = 200;
  int ila_iters = 100;
  double lambda = 1.0;
  /// Unset: 1 opposite-class image for reconstruction substitutes, K prototypes for prototypical ones.
  std::optional<int> num_negatives;
  LossKind loss_kind = LossKind::kEuclidean;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  std::string to_json() const;
  static AttackConfig from_json(const std::string& text);
  std::string hash() const;
};

/// Maximizes the objective with sign-gradient steps projected onto the budget.
/// ifgsm starts at x0, pgd at a uniform random point of the ball; none returns
/// `natural_guide` untouched. `losses`, when non-null, receives the objective at
/// every iterate (starting point included).
data::ImageTensor run_baseline(const Objective& objective, const data::ImageTensor& x0,
                               const data::ImageTensor& natural_guide, const AttackConfig& config,
                               std::vector<double>* losses = nullptr);

struct IlaResult {
  data::ImageTensor image;
  bool zero_direction = false;    // the guide did not move the features; image is the guide
  std::vector<double> objective;  // projection value at every iterate
};

/// Maximizes <f(x) - f(x0), f(guide) - f(x0)> from x0 for ila_iters steps.
IlaResult run_ila(const FeatureMap& features, const data::ImageTensor& x0, const data::ImageTensor& guide,
                  const AttackConfig& config);

struct CraftRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<double> baseline_losses;
  std::vector<double> ila_objective;
  double final_loss = 0.0;  // objective at the crafted example
  bool zero_direction = false;
  bool used_guide = false;  // crafted example is the projected guide
  double linf = 0.0;
  double l2 = 0.0;

  std::string to_json() const;
};

struct CraftResult {
  data::ImageTensor image;
  CraftRecord record;
};

/// Guide sets for the target, one per decoder. With a prototype bank the positive is
/// the target-class prototype and negatives are opposite-class prototypes; otherwise
/// the positive is the target itself and negatives are opposite-class aux images.
std::vector<GuideSet> build_guides(const model::SubstituteModel& model, const data::AuxiliarySet& aux,
                                   const data::PrototypeBank* bank, const AttackConfig& config);

/// Baseline followed by ILA on the encoder output. Throws std::logic_error if the
/// result is infeasible.
CraftResult craft(const model::SubstituteModel& model, const data::AuxiliarySet& aux,
                  const data::PrototypeBank* bank, const AttackConfig& config);

/// Supervised substitute: cross-entropy baseline, ILA at the classifier's feature tap.
CraftResult craft(const model::ClassifierNet& net, const data::AuxiliarySet& aux, const AttackConfig& config);

/// Shared pipeline over any objective and feature map.
CraftResult craft(const Objective& objective, const FeatureMap& features, const data::ImageTensor& x0,
                  const data::ImageTensor& natural_guide, const AttackConfig& config);

}  // namespace nobox::attack
