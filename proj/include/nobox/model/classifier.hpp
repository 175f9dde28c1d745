#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nobox/core/tensor.hpp"
#include "nobox/data/image.hpp"
#include "nobox/model/substitute.hpp"
#include "nobox/nn/layers.hpp"

namespace nobox::model {

/// Small softmax CNN families. kVgg and kResNet back the supervised baseline;
/// all of them (plus kWide) serve as toy victims.
enum class ClassifierArch { kVgg, kResNet, kWide };

std::string to_string(ClassifierArch arch);
ClassifierArch classifier_arch_from_string(const std::string& name);

struct ClassifierSpec {
  ImageShape input_shape;
  ClassifierArch arch = ClassifierArch::kVgg;
  int width = 16;
  int num_classes = 2;
  double dropout = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
  static ClassifierSpec from_json(const std::string& text);
  std::string hash() const;
};

class ClassifierNet {
 public:
  struct Pass {
    Tensor output;
    nn::Tape tape;
    std::size_t end = 0;
  };

  static ClassifierNet build(const ClassifierSpec& spec);

  ClassifierNet(const ClassifierNet& other);
  ClassifierNet& operator=(const ClassifierNet& other);
  ClassifierNet(ClassifierNet&&) noexcept = default;
  ClassifierNet& operator=(ClassifierNet&&) noexcept = default;

  const ClassifierSpec& spec() const { return spec_; }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Layer boundary used as the intermediate feature tap (mid network).
  std::size_t feature_tap() const { return feature_tap_; }
  /// Layer boundary before the final linear layer.
  std::size_t penultimate_tap() const { return net_.size() - 1; }
  std::size_t layer_count() const { return net_.size(); }

  /// Forward over layers [0, end).
  Pass forward(const Tensor& batch, const nn::Context& ctx = {},
               std::size_t end = static_cast<std::size_t>(-1)) const;
  /// Backward from the pass's end to the input.
  Tensor backward(const Pass& pass, const Tensor& grad_out, std::span<double> grad_params,
                  bool need_input_grad) const;

  Tensor logits(const Tensor& batch) const;
  std::vector<int> predict(std::span<const data::ImageTensor> images) const;
  std::vector<double> penultimate(const data::ImageTensor& image) const;

  std::string describe() const { return net_.describe(); }

 private:
  ClassifierNet() = default;
  void assemble();

  ClassifierSpec spec_;
  nn::Sequential net_;
  std::size_t feature_tap_ = 0;
  std::vector<double> params_;
};

}  // namespace nobox::model
