#include "nobox/model/substitute.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

#include "nobox/core/hash.hpp"
#include "nobox/core/rng.hpp"

namespace nobox::model {

using nlohmann::json;

void ModelSpec::validate() const {
  if (input_shape.channels != 1 && input_shape.channels != 3) {
    throw std::invalid_argument("model spec: channels must be 1 or 3");
  }
  if (input_shape.height <= 0 || input_shape.width <= 0 || input_shape.height % 4 != 0 ||
      input_shape.width % 4 != 0) {
    throw std::invalid_argument("model spec: input height and width must be divisible by 4 (total stride)");
  }
  if (decoders < 1) throw std::invalid_argument("model spec: decoder count K must be >= 1");
  if (base_width < 8) throw std::invalid_argument("model spec: base_width must be >= 8");
  if (num_residual_blocks < 1) throw std::invalid_argument("model spec: num_residual_blocks must be >= 1");
  if (embedding_tap_from_end < 1 || embedding_tap_from_end > 9) {
    throw std::invalid_argument("model spec: embedding_tap_from_end must be in [1, 9]");
  }
}

std::string ModelSpec::to_json() const {
  json j = {{"input_shape", {input_shape.channels, input_shape.height, input_shape.width}},
            {"base_width", base_width},
            {"num_residual_blocks", num_residual_blocks},
            {"decoders", decoders},
            {"seed", seed},
            {"embedding_tap_from_end", embedding_tap_from_end}};
  return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
  const auto j = json::parse(text);
  ModelSpec s;
  const auto shape = j.at("input_shape");
  s.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
  s.base_width = j.at("base_width").get<int>();
  s.num_residual_blocks = j.at("num_residual_blocks").get<int>();
  s.decoders = j.at("decoders").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.embedding_tap_from_end = j.at("embedding_tap_from_end").get<int>();
  return s;
}

std::string ModelSpec::hash() const { return sha256_hex(to_json()); }

SubstituteModel SubstituteModel::build(const ModelSpec& spec) {
  spec.validate();
  SubstituteModel m;
  m.spec_ = spec;
  m.assemble();
  m.params_.assign(m.encoder_.param_count() + spec.decoders * m.decoder_.param_count(), 0.0);
  Rng rng(spec.seed);
  m.encoder_.init_params(std::span<double>(m.params_).subspan(0, m.encoder_.param_count()), rng);
  for (int k = 0; k < spec.decoders; ++k) {
    m.decoder_.init_params(std::span<double>(m.params_).subspan(m.decoder_offset(k), m.decoder_.param_count()),
                           rng);
  }
  return m;
}

void SubstituteModel::assemble() {
  using namespace nn;
  const int c = spec_.input_shape.channels, w = spec_.base_width;
  encoder_ = Sequential();
  encoder_.emplace<Conv2d>(c, w, 3, 1, 1).emplace<InstanceNorm2d>(w).emplace<ReLU>();
  encoder_.emplace<Conv2d>(w, 2 * w, 3, 2, 1).emplace<InstanceNorm2d>(2 * w).emplace<ReLU>();
  encoder_.emplace<Conv2d>(2 * w, 4 * w, 3, 2, 1).emplace<InstanceNorm2d>(4 * w).emplace<ReLU>();
  for (int i = 0; i < spec_.num_residual_blocks; ++i) encoder_.add(make_residual_block(4 * w));

  decoder_ = Sequential();
  decoder_.emplace<Upsample2x>().emplace<Conv2d>(4 * w, 2 * w, 3, 1, 1).emplace<InstanceNorm2d>(2 * w);
  decoder_.emplace<ReLU>();
  decoder_.emplace<Upsample2x>().emplace<Conv2d>(2 * w, w, 3, 1, 1).emplace<InstanceNorm2d>(w);
  decoder_.emplace<ReLU>();
  decoder_.emplace<Conv2d>(w, c, 3, 1, 1).emplace<Sigmoid>();

  code_shape_ = encoder_.output_shape(spec_.input_shape.batch(1));
}

SubstituteModel::SubstituteModel(const SubstituteModel& other) : spec_(other.spec_), params_(other.params_) {
  assemble();
}

SubstituteModel& SubstituteModel::operator=(const SubstituteModel& other) {
  if (this != &other) {
    spec_ = other.spec_;
    params_ = other.params_;
    assemble();
  }
  return *this;
}

std::size_t SubstituteModel::decoder_offset(int k) const {
  return encoder_.param_count() + static_cast<std::size_t>(k) * decoder_.param_count();
}

void SubstituteModel::check_decoder(int k) const {
  if (k < 0 || k >= spec_.decoders) {
    throw std::out_of_range("decoder index " + std::to_string(k) + " outside [0, " +
                            std::to_string(spec_.decoders) + ")");
  }
}

void SubstituteModel::check_input(const Shape& s) const {
  const auto& in = spec_.input_shape;
  if (s.c != in.channels || s.h != in.height || s.w != in.width) {
    throw std::invalid_argument("substitute model: input shape " + s.str() + " does not match model input [" +
                                std::to_string(in.channels) + "," + std::to_string(in.height) + "," +
                                std::to_string(in.width) + "]");
  }
}

std::size_t SubstituteModel::embedding_size() const {
  const auto end = decoder_.size() - static_cast<std::size_t>(spec_.embedding_tap_from_end);
  return decoder_.output_shape(code_shape_, end).sample_size();
}

SubstituteModel::EncoderPass SubstituteModel::encode_pass(const Tensor& batch, const nn::Context& ctx) const {
  check_input(batch.shape());
  EncoderPass pass;
  pass.code = encoder_.forward(std::span<const double>(params_).subspan(0, encoder_.param_count()), batch,
                               pass.tape, ctx);
  return pass;
}

SubstituteModel::DecoderPass SubstituteModel::decode_pass(const Tensor& code, int k, const nn::Context& ctx) const {
  check_decoder(k);
  DecoderPass pass;
  pass.end = decoder_.size();
  pass.output = decoder_.forward(std::span<const double>(params_).subspan(decoder_offset(k), decoder_.param_count()),
                                 code, pass.tape, ctx);
  return pass;
}

SubstituteModel::DecoderPass SubstituteModel::embedding_pass(const Tensor& code, int k,
                                                             const nn::Context& ctx) const {
  check_decoder(k);
  DecoderPass pass;
  pass.end = decoder_.size() - static_cast<std::size_t>(spec_.embedding_tap_from_end);
  pass.output = decoder_.forward(std::span<const double>(params_).subspan(decoder_offset(k), decoder_.param_count()),
                                 code, pass.tape, ctx, 0, pass.end);
  return pass;
}

Tensor SubstituteModel::decoder_backward(int k, const DecoderPass& pass, const Tensor& grad_out,
                                         std::span<double> grad_params) const {
  check_decoder(k);
  auto slice = grad_params.empty() ? grad_params : grad_params.subspan(decoder_offset(k), decoder_.param_count());
  return decoder_.backward(std::span<const double>(params_).subspan(decoder_offset(k), decoder_.param_count()),
                           pass.tape, grad_out, slice, true, 0, pass.end);
}

Tensor SubstituteModel::encoder_backward(const EncoderPass& pass, const Tensor& grad_code,
                                         std::span<double> grad_params, bool need_input_grad) const {
  auto slice = grad_params.empty() ? grad_params : grad_params.subspan(0, encoder_.param_count());
  return encoder_.backward(std::span<const double>(params_).subspan(0, encoder_.param_count()), pass.tape,
                           grad_code, slice, need_input_grad);
}

CodeTensor SubstituteModel::encode(const data::ImageTensor& x) const {
  return {encode_pass(x.as_tensor()).code};
}

data::ImageTensor SubstituteModel::decode(const CodeTensor& code, int k) const {
  if (code.shape() != code_shape_) {
    throw std::invalid_argument("decode: code shape " + code.shape().str() + " does not match " + code_shape_.str());
  }
  auto pass = decode_pass(code.values, k);
  return data::ImageTensor::from_tensor(pass.output);
}

data::ImageTensor SubstituteModel::reconstruct(const data::ImageTensor& x, int k) const {
  return decode(encode(x), k);
}

std::vector<double> SubstituteModel::embedding(const data::ImageTensor& x, int k) const {
  auto code = encode_pass(x.as_tensor()).code;
  auto pass = embedding_pass(code, k);
  return pass.output.vector();
}

std::string SubstituteModel::describe() const {
  return "encoder: " + encoder_.describe() + "\ndecoder (x" + std::to_string(spec_.decoders) +
         "): " + decoder_.describe();
}

}  // namespace nobox::model
