#pragma once

#include <span>
#include <string>
#include <vector>

#include "nobox/data/image.hpp"
#include "nobox/model/classifier.hpp"

namespace nobox::eval {

struct VictimInfo {
  std::string name;
  std::string train_set_id;
};

/// A model under attack. predict must be deterministic and side-effect free.
class VictimClassifier {
 public:
  virtual ~VictimClassifier() = default;
  virtual std::vector<int> predict(std::span<const data::ImageTensor> batch) const = 0;
  virtual int num_classes() const = 0;
  virtual VictimInfo info() const = 0;
};

/// An in-process classifier network.
class LocalVictim final : public VictimClassifier {
 public:
  LocalVictim(model::ClassifierNet net, VictimInfo info) : net_(std::move(net)), info_(std::move(info)) {}

  std::vector<int> predict(std::span<const data::ImageTensor> batch) const override { return net_.predict(batch); }
  int num_classes() const override { return net_.spec().num_classes; }
  VictimInfo info() const override { return info_; }
  const model::ClassifierNet& net() const { return net_; }

 private:
  model::ClassifierNet net_;
  VictimInfo info_;
};

struct AccuracyCount {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

/// Throws std::invalid_argument on an empty list.
AccuracyCount count_correct(const VictimClassifier& victim, std::span<const data::LabeledImage> examples);
double accuracy_on(const VictimClassifier& victim, std::span<const data::LabeledImage> examples);

}  // namespace nobox::eval
