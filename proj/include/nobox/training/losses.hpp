#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nobox/core/rng.hpp"
#include "nobox/data/image.hpp"
#include "nobox/data/transforms.hpp"
#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"

namespace nobox::training {

enum class Mechanism { kRotation, kJigsaw, kPrototypical, kNaiveAe, kNaiveSupervised };

std::string to_string(Mechanism mechanism);
/// Throws std::invalid_argument naming the accepted values.
Mechanism mechanism_from_string(const std::string& name);
bool is_autoencoder(Mechanism mechanism);

/// Loss value plus, optionally, the reconstructions (one [N,C,H,W] tensor per decoder).
struct LossResult {
  double value = 0.0;
  std::vector<Tensor> outputs;
};

/// (1/K) sum_k (1/N) sum_i ||Dec_k(Enc(x_i)) - t_{k,i}||^2.
/// `targets` holds one [N,C,H,W] tensor per decoder. When grad_params is
/// non-empty it spans all model parameters and receives the gradient (accumulated).
LossResult reconstruction_loss(const model::SubstituteModel& model, const Tensor& inputs,
                               const std::vector<Tensor>& targets, std::span<double> grad_params = {},
                               bool keep_outputs = false);

/// Rotation / jigsaw reconstruction with one transform per image sampled from `seed`.
/// Throws std::invalid_argument for a multi-decoder model.
double loss_chaos(const model::SubstituteModel& model, std::span<const data::ImageTensor> batch,
                  data::ChaosKind kind, std::uint64_t seed, std::span<double> grad_params = {});

/// Same objective with caller-fixed transforms (one descriptor per image).
double loss_chaos(const model::SubstituteModel& model, std::span<const data::ImageTensor> batch,
                  std::span<const data::ChaosDescriptor> transforms, std::span<double> grad_params = {});

double loss_naive_ae(const model::SubstituteModel& model, std::span<const data::ImageTensor> batch,
                     std::span<double> grad_params = {});

/// Every input is mapped to its class prototype, one pair per decoder.
/// Throws std::invalid_argument when bank and model disagree on K or a label is not 0/1.
LossResult loss_prototypical(const model::SubstituteModel& model, std::span<const data::LabeledImage> batch,
                             const data::PrototypeBank& bank, std::span<double> grad_params = {},
                             bool keep_outputs = false);

struct AugmentOptions {
  bool flip = true;
  int crop_padding = 2;  // 0 disables cropping
  double noise = 0.0;    // uniform additive noise amplitude, clamped to [0, 1]
};

data::ImageTensor augment(const data::ImageTensor& image, const AugmentOptions& options, Rng& rng);

/// Mean cross-entropy with optional augmentation and dropout. `rng` drives both;
/// pass nullptr for a deterministic eval-mode loss. `correct`, when non-null,
/// receives the number of argmax hits on the (augmented) batch.
double loss_naive_supervised(const model::ClassifierNet& net, std::span<const data::LabeledImage> batch,
                             const AugmentOptions* augmentation, Rng* rng, std::span<double> grad_params = {},
                             int* correct = nullptr);

}  // namespace nobox::training
