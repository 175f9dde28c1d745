#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nobox/core/tensor.hpp"
#include "nobox/data/image.hpp"
#include "nobox/nn/layers.hpp"

namespace nobox::model {

struct ImageShape {
  int channels = 3;
  int height = 32;
  int width = 32;

  Shape batch(int n) const { return {n, channels, height, width}; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Auto-encoder hyperparameters. The encoder downsamples 4x (two stride-2
/// stages) and holds the residual blocks; each decoder upsamples back.
struct ModelSpec {
  ImageShape input_shape;
  int base_width = 16;
  int num_residual_blocks = 4;
  int decoders = 1;
  std::uint64_t seed = 0;
  /// Embedding tap: the activation this many layers before the decoder output.
  int embedding_tap_from_end = 2;

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
  std::string to_json() const;
  static ModelSpec from_json(const std::string& text);
  std::string hash() const;
};

/// Spatial bottleneck code produced by the encoder, shape [1, C', H', W'].
struct CodeTensor {
  Tensor values;
  const Shape& shape() const { return values.shape(); }
};

/// Shared encoder, K independent decoders, all parameters in one flat vector
/// laid out as [encoder | decoder 0 | ... | decoder K-1].
class SubstituteModel {
 public:
  struct EncoderPass {
    Tensor code;
    nn::Tape tape;
  };
  struct DecoderPass {
    Tensor output;
    nn::Tape tape;
    std::size_t end = 0;
  };

  /// Deterministic in spec.seed. Throws when the input is not divisible by 4.
  static SubstituteModel build(const ModelSpec& spec);

  SubstituteModel(const SubstituteModel& other);
  SubstituteModel& operator=(const SubstituteModel& other);
  SubstituteModel(SubstituteModel&&) noexcept = default;
  SubstituteModel& operator=(SubstituteModel&&) noexcept = default;

  const ModelSpec& spec() const { return spec_; }
  int decoder_count() const { return spec_.decoders; }
  Shape code_shape() const { return code_shape_; }
  std::size_t embedding_size() const;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  std::size_t encoder_param_count() const { return encoder_.param_count(); }

  CodeTensor encode(const data::ImageTensor& x) const;
  /// Throws std::out_of_range for k outside [0, K).
  data::ImageTensor decode(const CodeTensor& code, int k) const;
  data::ImageTensor reconstruct(const data::ImageTensor& x, int k = 0) const;
  /// Flattened decoder activation at the embedding tap.
  std::vector<double> embedding(const data::ImageTensor& x, int k) const;

  // Differentiable passes over [N, C, H, W] batches. grad_params, when non-empty,
  // spans the whole flat parameter vector.
  EncoderPass encode_pass(const Tensor& batch, const nn::Context& ctx = {}) const;
  DecoderPass decode_pass(const Tensor& code, int k, const nn::Context& ctx = {}) const;
  DecoderPass embedding_pass(const Tensor& code, int k, const nn::Context& ctx = {}) const;
  Tensor decoder_backward(int k, const DecoderPass& pass, const Tensor& grad_out,
                          std::span<double> grad_params) const;
  Tensor encoder_backward(const EncoderPass& pass, const Tensor& grad_code, std::span<double> grad_params,
                          bool need_input_grad) const;

  std::string describe() const;

 private:
  SubstituteModel() = default;
  void assemble();
  void check_decoder(int k) const;
  void check_input(const Shape& s) const;
  std::size_t decoder_offset(int k) const;

  ModelSpec spec_;
  nn::Sequential encoder_;
  nn::Sequential decoder_;  // one architecture, K parameter slices
  Shape code_shape_{};
  std::vector<double> params_;
};

}  // namespace nobox::model
