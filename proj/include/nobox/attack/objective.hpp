#pragma once

#include <span>
#include <vector>

#include "nobox/attack/losses.hpp"
#include "nobox/data/image.hpp"
#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"

namespace nobox::attack {

/// A scalar loss to maximize over the input image.
class Objective {
 public:
  virtual ~Objective() = default;
  /// When grad is non-null it is resized and receives dL/dx.
  virtual double evaluate(const data::ImageTensor& x, std::vector<double>* grad) const = 0;
};

/// The intermediate representation ILA operates on.
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual std::vector<double> features(const data::ImageTensor& x) const = 0;
  /// Gradient of <features(x), v> with respect to x; `features`, when non-null,
  /// receives features(x) from the same forward pass.
  virtual std::vector<double> vjp(const data::ImageTensor& x, std::span<const double> v,
                                  std::vector<double>* features) const = 0;
};

/// Prototype-softmax loss averaged over decoders; guides[k] belongs to decoder k.
class SubstituteObjective final : public Objective {
 public:
  SubstituteObjective(const model::SubstituteModel& model, std::vector<GuideSet> guides, double lambda,
                      LossKind kind);
  double evaluate(const data::ImageTensor& x, std::vector<double>* grad) const override;

 private:
  const model::SubstituteModel& model_;
  std::vector<GuideSet> guides_;
  double lambda_;
  LossKind kind_;
  // Per decoder: positive embedding first, then negatives (cosine only).
  std::vector<std::vector<std::vector<double>>> embeddings_;
};

/// Encoder output of an auto-encoding substitute.
class EncoderFeatures final : public FeatureMap {
 public:
  explicit EncoderFeatures(const model::SubstituteModel& model) : model_(model) {}
  std::vector<double> features(const data::ImageTensor& x) const override;
  std::vector<double> vjp(const data::ImageTensor& x, std::span<const double> v,
                          std::vector<double>* features) const override;

 private:
  const model::SubstituteModel& model_;
};

/// Cross-entropy of the true label on a supervised substitute.
class ClassifierObjective final : public Objective {
 public:
  ClassifierObjective(const model::ClassifierNet& net, int label) : net_(net), label_(label) {}
  double evaluate(const data::ImageTensor& x, std::vector<double>* grad) const override;

 private:
  const model::ClassifierNet& net_;
  int label_;
};

/// Activation at a classifier layer boundary (default: its feature tap).
class ClassifierFeatures final : public FeatureMap {
 public:
  explicit ClassifierFeatures(const model::ClassifierNet& net);
  ClassifierFeatures(const model::ClassifierNet& net, std::size_t tap) : net_(net), tap_(tap) {}
  std::vector<double> features(const data::ImageTensor& x) const override;
  std::vector<double> vjp(const data::ImageTensor& x, std::span<const double> v,
                          std::vector<double>* features) const override;

 private:
  const model::ClassifierNet& net_;
  std::size_t tap_;
};

}  // namespace nobox::attack
