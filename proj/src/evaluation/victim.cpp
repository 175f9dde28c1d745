#include "nobox/evaluation/victim.hpp"

#include <stdexcept>

namespace nobox::eval {

AccuracyCount count_correct(const VictimClassifier& victim, std::span<const data::LabeledImage> examples) {
  if (examples.empty()) throw std::invalid_argument("accuracy_on: no examples");
  std::vector<data::ImageTensor> images;
  images.reserve(examples.size());
  for (const auto& ex : examples) images.push_back(ex.image);
  const auto predicted = victim.predict(images);
  if (predicted.size() != examples.size()) {
    throw std::runtime_error("victim " + victim.info().name + " returned " + std::to_string(predicted.size()) +
                             " labels for " + std::to_string(examples.size()) + " images");
  }
  AccuracyCount count{0, examples.size()};
  for (std::size_t i = 0; i < examples.size(); ++i) count.correct += predicted[i] == examples[i].label ? 1 : 0;
  return count;
}

double accuracy_on(const VictimClassifier& victim, std::span<const data::LabeledImage> examples) {
  return count_correct(victim, examples).accuracy();
}

}  // namespace nobox::eval
