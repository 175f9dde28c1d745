#include "nobox/model/classifier.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

#include "nobox/core/hash.hpp"
#include "nobox/nn/functional.hpp"

namespace nobox::model {

using nlohmann::json;

std::string to_string(ClassifierArch arch) {
  switch (arch) {
    case ClassifierArch::kVgg: return "vgg";
    case ClassifierArch::kResNet: return "resnet";
    case ClassifierArch::kWide: return "wide";
  }
  return "unknown";
}

ClassifierArch classifier_arch_from_string(const std::string& name) {
  if (name == "vgg") return ClassifierArch::kVgg;
  if (name == "resnet") return ClassifierArch::kResNet;
  if (name == "wide") return ClassifierArch::kWide;
  throw std::invalid_argument("unknown classifier architecture '" + name + "' (expected vgg|resnet|wide)");
}

void ClassifierSpec::validate() const {
  if (input_shape.height % 4 != 0 || input_shape.width % 4 != 0 || input_shape.height <= 0) {
    throw std::invalid_argument("classifier spec: input height and width must be divisible by 4");
  }
  if (width < 4) throw std::invalid_argument("classifier spec: width must be >= 4");
  if (num_classes < 2) throw std::invalid_argument("classifier spec: num_classes must be >= 2");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("classifier spec: dropout must be in [0, 1)");
}

std::string ClassifierSpec::to_json() const {
  json j = {{"input_shape", {input_shape.channels, input_shape.height, input_shape.width}},
            {"arch", to_string(arch)},
            {"width", width},
            {"num_classes", num_classes},
            {"dropout", dropout},
            {"seed", seed}};
  return j.dump();
}

ClassifierSpec ClassifierSpec::from_json(const std::string& text) {
  const auto j = json::parse(text);
  ClassifierSpec s;
  const auto shape = j.at("input_shape");
  s.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
  s.arch = classifier_arch_from_string(j.at("arch").get<std::string>());
  s.width = j.at("width").get<int>();
  s.num_classes = j.at("num_classes").get<int>();
  s.dropout = j.at("dropout").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

std::string ClassifierSpec::hash() const { return sha256_hex(to_json()); }

ClassifierNet ClassifierNet::build(const ClassifierSpec& spec) {
  spec.validate();
  ClassifierNet net;
  net.spec_ = spec;
  net.assemble();
  net.params_.assign(net.net_.param_count(), 0.0);
  Rng rng(spec.seed);
  net.net_.init_params(net.params_, rng);
  return net;
}

void ClassifierNet::assemble() {
  using namespace nn;
  const int c = spec_.input_shape.channels, w = spec_.width, k = spec_.num_classes;
  const int h4 = spec_.input_shape.height / 4, w4 = spec_.input_shape.width / 4;
  net_ = Sequential();
  net_.emplace<Affine>(0.5, 4.0);  // [0, 1] -> roughly zero-mean, unit-range inputs
  switch (spec_.arch) {
    case ClassifierArch::kVgg:
      net_.emplace<Conv2d>(c, w, 3, 1, 1).emplace<ReLU>().emplace<Conv2d>(w, w, 3, 1, 1).emplace<ReLU>();
      net_.emplace<MaxPool2x2>();
      feature_tap_ = net_.size();
      net_.emplace<Conv2d>(w, 2 * w, 3, 1, 1).emplace<ReLU>().emplace<Conv2d>(2 * w, 2 * w, 3, 1, 1);
      net_.emplace<ReLU>().emplace<MaxPool2x2>().emplace<Flatten>();
      net_.emplace<Dropout>(spec_.dropout).emplace<Linear>(2 * w * h4 * w4, 4 * w).emplace<ReLU>();
      net_.emplace<Dropout>(spec_.dropout).emplace<Linear>(4 * w, k);
      break;
    case ClassifierArch::kResNet:
      net_.emplace<Conv2d>(c, w, 3, 1, 1).emplace<ReLU>();
      net_.emplace<Conv2d>(w, 2 * w, 3, 2, 1).emplace<ReLU>().add(make_residual_block(2 * w));
      net_.emplace<ReLU>();
      feature_tap_ = net_.size();
      net_.emplace<Conv2d>(2 * w, 4 * w, 3, 2, 1).emplace<ReLU>().add(make_residual_block(4 * w));
      net_.emplace<ReLU>().emplace<GlobalAvgPool>().emplace<Flatten>();
      net_.emplace<Dropout>(spec_.dropout).emplace<Linear>(4 * w, k);
      break;
    case ClassifierArch::kWide:
      net_.emplace<Conv2d>(c, 3 * w, 5, 1, 2).emplace<ReLU>().emplace<AvgPool2x2>();
      feature_tap_ = net_.size();
      net_.emplace<Conv2d>(3 * w, 3 * w, 3, 1, 1).emplace<ReLU>().emplace<AvgPool2x2>();
      net_.emplace<Flatten>().emplace<Dropout>(spec_.dropout).emplace<Linear>(3 * w * h4 * w4, k);
      break;
  }
}

ClassifierNet::ClassifierNet(const ClassifierNet& other) : spec_(other.spec_), params_(other.params_) {
  assemble();
}

ClassifierNet& ClassifierNet::operator=(const ClassifierNet& other) {
  if (this != &other) {
    spec_ = other.spec_;
    params_ = other.params_;
    assemble();
  }
  return *this;
}

ClassifierNet::Pass ClassifierNet::forward(const Tensor& batch, const nn::Context& ctx, std::size_t end) const {
  const auto& in = spec_.input_shape;
  const auto& s = batch.shape();
  if (s.c != in.channels || s.h != in.height || s.w != in.width) {
    throw std::invalid_argument("classifier: input shape " + s.str() + " does not match the network");
  }
  Pass pass;
  pass.end = std::min(end, net_.size());
  pass.output = net_.forward(params_, batch, pass.tape, ctx, 0, pass.end);
  return pass;
}

Tensor ClassifierNet::backward(const Pass& pass, const Tensor& grad_out, std::span<double> grad_params,
                               bool need_input_grad) const {
  return net_.backward(params_, pass.tape, grad_out, grad_params, need_input_grad, 0, pass.end);
}

Tensor ClassifierNet::logits(const Tensor& batch) const { return forward(batch).output; }

std::vector<int> ClassifierNet::predict(std::span<const data::ImageTensor> images) const {
  std::vector<int> labels;
  labels.reserve(images.size());
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < images.size(); start += kChunk) {
    const auto chunk = images.subspan(start, std::min(kChunk, images.size() - start));
    const Tensor out = logits(data::stack(chunk));
    for (int i = 0; i < out.shape().n; ++i) labels.push_back(nn::argmax(out.sample(i)));
  }
  return labels;
}

std::vector<double> ClassifierNet::penultimate(const data::ImageTensor& image) const {
  return forward(image.as_tensor(), {}, penultimate_tap()).output.vector();
}

}  // namespace nobox::model
