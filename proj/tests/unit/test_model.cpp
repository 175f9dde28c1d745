#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nobox/model/checkpoint.hpp"
#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"
#include "nobox/nn/functional.hpp"
#include "nobox/nn/layers.hpp"
#include "nobox/nn/optim.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace nobox;

namespace {

model::ModelSpec small_spec(int decoders = 1, std::uint64_t seed = 3) {
  model::ModelSpec spec;
  spec.input_shape = {3, 8, 8};
  spec.base_width = 8;
  spec.num_residual_blocks = 1;
  spec.decoders = decoders;
  spec.seed = seed;
  return spec;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks parameter and input gradients of <net(x), r> against central differences.
void check_sequential(const nn::Sequential& net, Shape in_shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> params(net.param_count());
  net.init_params(params, rng);
  // Move norm affine parameters away from their identity initialization.
  for (auto& p : params) p += 0.1 * std::uniform_real_distribution<double>(-1, 1)(rng);
  Tensor x(in_shape, test::random_vector(in_shape.numel(), seed + 1));
  const auto out_shape = net.output_shape(in_shape);
  const auto r = test::random_vector(out_shape.numel(), seed + 2);

  auto objective = [&](const std::vector<double>& p, const Tensor& input) {
    nn::Tape tape;
    const auto out = net.forward(p, input, tape, {});
    return dot(out.values(), r);
  };

  nn::Tape tape;
  const auto out = net.forward(params, x, tape, {});
  ASSERT_EQ(out.shape(), out_shape);
  std::vector<double> grad(params.size(), 0.0);
  const auto gin = net.backward(params, tape, Tensor(out_shape, r), grad, true);

  Rng pick(seed + 3);
  const double h = 1e-5;
  for (int probe = 0; probe < 10 && !params.empty(); ++probe) {
    const auto i = std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(pick);
    const double num = test::central_difference([&](const std::vector<double>& p) { return objective(p, x); },
                                                params, i, h);
    EXPECT_LT(test::relative_error(grad[i], num), 1e-4) << net.describe() << " param " << i;
  }
  for (int probe = 0; probe < 10; ++probe) {
    const auto i = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(pick);
    const double num = test::central_difference(
        [&](const std::vector<double>& v) { return objective(params, Tensor(in_shape, v)); }, x.vector(), i, h);
    EXPECT_LT(test::relative_error(gin[i], num), 1e-4) << net.describe() << " input " << i;
  }
}

}  // namespace

TEST(Layers, GradientsMatchFiniteDifferences) {
  {
    nn::Sequential net;
    net.emplace<nn::Conv2d>(2, 3, 3, 1, 1);
    check_sequential(net, {2, 2, 6, 6}, 1);
  }
  {
    nn::Sequential net;
    net.emplace<nn::Conv2d>(2, 4, 3, 2, 1).emplace<nn::InstanceNorm2d>(4).emplace<nn::ReLU>();
    check_sequential(net, {2, 2, 8, 8}, 2);
  }
  {
    nn::Sequential net;
    net.emplace<nn::Upsample2x>().emplace<nn::Conv2d>(2, 2, 3, 1, 1).emplace<nn::Sigmoid>();
    check_sequential(net, {1, 2, 3, 3}, 3);
  }
  {
    nn::Sequential net;
    net.emplace<nn::MaxPool2x2>().emplace<nn::AvgPool2x2>().emplace<nn::Flatten>().emplace<nn::Linear>(3, 2);
    check_sequential(net, {2, 3, 4, 4}, 4);
  }
  {
    nn::Sequential net;
    net.emplace<nn::Affine>(0.5, 4.0).emplace<nn::GlobalAvgPool>().emplace<nn::Linear>(2, 3);
    check_sequential(net, {2, 2, 4, 4}, 5);
  }
  {
    nn::Sequential net;
    net.add(nn::make_residual_block(3));
    check_sequential(net, {1, 3, 4, 4}, 6);
  }
}

TEST(Layers, ResultsIndependentOfBufferAlignment) {
  nn::Sequential net;
  net.emplace<nn::Conv2d>(3, 5, 3, 1, 1).emplace<nn::ReLU>().emplace<nn::Flatten>().emplace<nn::Linear>(5 * 6 * 6, 3);
  const Shape in{2, 3, 6, 6};
  Rng rng(1);
  std::vector<double> padded(net.param_count() + 8);
  net.init_params(std::span<double>(padded).subspan(0, net.param_count()), rng);
  const auto r = test::random_vector(6, 2);

  auto run = [&](std::size_t offset, const Tensor& x) {
    // Same values at a shifted address.
    std::vector<double> params(padded.size());
    std::copy_n(padded.begin(), net.param_count(), params.begin() + static_cast<std::ptrdiff_t>(offset));
    const std::span<const double> p(params.data() + offset, net.param_count());
    nn::Tape tape;
    auto out = net.forward(p, x, tape, {}).vector();
    std::vector<double> grad(net.param_count(), 0.0);
    const auto gin = net.backward(p, tape, Tensor({2, 3, 1, 1}, r), grad, true);
    out.insert(out.end(), grad.begin(), grad.end());
    out.insert(out.end(), gin.vector().begin(), gin.vector().end());
    return out;
  };
  const auto values = test::random_vector(in.numel(), 3);
  const auto reference = run(0, Tensor(in, values));
  for (std::size_t offset = 1; offset < 8; ++offset) {
    // Tensors land at whatever address the allocator hands out; several tries
    // cover both 16- and 32-byte boundaries.
    std::vector<Tensor> keep;
    for (int t = 0; t < 4; ++t) keep.emplace_back(in, values);
    for (const auto& x : keep) EXPECT_EQ(run(offset, x), reference) << "offset " << offset;
  }
}

TEST(Layers, DropoutIsIdentityInEval) {
  nn::Sequential net;
  net.emplace<nn::Dropout>(0.5);
  Tensor x({1, 1, 4, 4}, test::random_vector(16, 1));
  nn::Tape tape;
  EXPECT_EQ(net.forward({}, x, tape, {}).vector(), x.vector());
  Rng rng(1);
  const auto train = net.forward({}, x, tape, {nn::Mode::kTrain, &rng});
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_TRUE(train[i] == 0.0 || std::abs(train[i] - 2 * x[i]) < 1e-15);
}

TEST(Functional, SoftmaxCrossEntropy) {
  // Uniform logits over two classes give ln 2.
  Tensor uniform({1, 2, 1, 1}, std::vector<double>{0.3, 0.3});
  std::vector<int> label{1};
  EXPECT_NEAR(nn::softmax_cross_entropy(uniform, label, nullptr), std::log(2.0), 1e-15);
  // One sample, logits (2, -1), label 0: -log(e^2 / (e^2 + e^-1)).
  Tensor fixed({1, 2, 1, 1}, std::vector<double>{2.0, -1.0});
  std::vector<int> zero{0};
  Tensor grad;
  EXPECT_NEAR(nn::softmax_cross_entropy(fixed, zero, &grad), 0.048587351573742, 1e-12);
  EXPECT_NEAR(grad[0] + grad[1], 0.0, 1e-15);
  // Confident correct logits drive the loss to zero.
  Tensor confident({1, 2, 1, 1}, std::vector<double>{60.0, -60.0});
  EXPECT_LT(nn::softmax_cross_entropy(confident, zero, nullptr), 1e-30);
  EXPECT_EQ(nn::argmax(std::vector<double>{1.0, 3.0, 3.0}), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  nn::Adam adam(2, {.learning_rate = 0.1});
  std::vector<double> p{1.0, -1.0};
  const std::vector<double> g{0.5, -2.0};
  adam.step(p, g);
  EXPECT_NEAR(p[0], 0.9, 1e-7);
  EXPECT_NEAR(p[1], -0.9, 1e-7);
}

TEST(Substitute, ShapesAndDecoderCount) {
  auto spec = small_spec();
  spec.input_shape = {3, 32, 32};
  const auto m = model::SubstituteModel::build(spec);
  const auto x = test::random_image(3, 32, 32, 1);
  const auto r = m.reconstruct(x);
  EXPECT_EQ(r.channels(), 3);
  EXPECT_EQ(r.height(), 32);
  EXPECT_EQ(m.encode(x).shape().h, 8);
  EXPECT_EQ(m.encode(x).shape().w, 8);

  const auto many = model::SubstituteModel::build(small_spec(20));
  EXPECT_EQ(many.decoder_count(), 20);
  const auto one = model::SubstituteModel::build(small_spec(1));
  EXPECT_EQ(many.encoder_param_count(), one.encoder_param_count());
  EXPECT_EQ(many.param_count() - many.encoder_param_count(), 20 * (one.param_count() - one.encoder_param_count()));
}

TEST(Substitute, DeterministicInitialization) {
  const auto a = model::SubstituteModel::build(small_spec(2, 9));
  const auto b = model::SubstituteModel::build(small_spec(2, 9));
  const auto c = model::SubstituteModel::build(small_spec(2, 10));
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
  const auto x = test::random_image(3, 8, 8, 2);
  EXPECT_EQ(a.encode(x).values.vector(), a.encode(x).values.vector());
}

TEST(Substitute, SpecValidation) {
  auto spec = small_spec();
  spec.input_shape = {3, 10, 10};
  EXPECT_THROW(model::SubstituteModel::build(spec), std::invalid_argument);
  spec = small_spec();
  spec.decoders = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.base_width = 4;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.num_residual_blocks = 0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  const auto m = model::SubstituteModel::build(small_spec());
  EXPECT_THROW(m.encode(test::random_image(3, 16, 16, 1)), std::invalid_argument);
}

TEST(Substitute, DecodeRangeAndErrors) {
  auto m = model::SubstituteModel::build(small_spec(2));
  // Output stays in [0, 1] even for extreme parameters.
  for (auto& p : m.parameters()) p *= 50.0;
  const auto x = test::random_image(3, 8, 8, 4);
  const auto code = m.encode(x);
  for (int k = 0; k < 2; ++k) {
    const auto out = m.decode(code, k);
    EXPECT_EQ(out.height(), 8);
    for (double v : out.pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_THROW(m.decode(code, 2), std::out_of_range);
  EXPECT_THROW(m.decode(code, -1), std::out_of_range);
  EXPECT_THROW(m.embedding(x, 2), std::out_of_range);
  const auto single = model::SubstituteModel::build(small_spec(1));
  EXPECT_EQ(single.decode(single.encode(x), 0), single.reconstruct(x));
}

TEST(Substitute, EncodeRespondsToSinglePixel) {
  const auto m = model::SubstituteModel::build(small_spec());
  const auto x = test::random_image(3, 8, 8, 5, 0.1, 0.9);
  auto px = x.vector();
  px[37] += 1e-3;
  const auto y = data::ImageTensor(3, 8, 8, px);
  const auto a = m.encode(x).values, b = m.encode(y).values;
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += std::abs(a[i] - b[i]);
  EXPECT_GT(diff, 1e-9);
}

TEST(Substitute, Embedding) {
  const auto m = model::SubstituteModel::build(small_spec());
  const auto x = test::random_image(3, 8, 8, 6);
  const auto e = m.embedding(x, 0);
  EXPECT_EQ(e.size(), m.embedding_size());
  EXPECT_EQ(m.embedding(test::random_image(3, 8, 8, 7), 0).size(), e.size());
  const double self = dot(e, e) / dot(e, e);
  EXPECT_DOUBLE_EQ(self, 1.0);
  const auto f = m.embedding(test::random_image(3, 8, 8, 8), 0);
  const double cos = dot(e, f) / std::sqrt(dot(e, e) * dot(f, f));
  EXPECT_GT(cos, -1.0);
  EXPECT_LT(cos, 1.0);
  EXPECT_EQ(cos, dot(m.embedding(x, 0), f) / std::sqrt(dot(e, e) * dot(f, f)));
}

TEST(Substitute, InputGradientMatchesFiniteDifferences) {
  auto spec = small_spec(2);
  spec.input_shape = {3, 16, 16};
  const auto m = model::SubstituteModel::build(spec);
  const auto x = test::random_image(3, 16, 16, 9, 0.1, 0.9);
  const auto r = test::random_vector(x.size(), 10);
  for (int k = 0; k < 2; ++k) {
    auto f = [&](const std::vector<double>& px) {
      const auto out = m.reconstruct(data::ImageTensor(3, 16, 16, px), k);
      return dot(out.pixels(), r);
    };
    const auto enc = m.encode_pass(x.as_tensor());
    const auto dec = m.decode_pass(enc.code, k);
    const auto gcode = m.decoder_backward(k, dec, Tensor(dec.output.shape(), r), {});
    const auto gin = m.encoder_backward(enc, gcode, {}, true);
    Rng pick(k);
    int accepted = 0, drawn = 0;
    while (accepted < 10) {
      ASSERT_LT(drawn++, 400) << "too many probes straddle a kink";
      const auto i = std::uniform_int_distribution<std::size_t>(0, x.size() - 1)(pick);
      // A tiny step stays on one linear piece, so the analytic value is exact up to rounding.
      EXPECT_LT(test::relative_error(gin[i], test::central_difference(f, x.vector(), i, 1e-6)), 1e-5) << i;
      const auto probe = test::fd_probe(f, x.vector(), i, 1e-3);
      if (!probe.smooth) continue;
      ++accepted;
      EXPECT_LT(test::relative_error(gin[i], probe.numeric), 1e-2) << i;
    }
    std::printf("decoder %d: %d of %d probes smooth at step 1e-3\n", k, accepted, drawn);
  }
}

TEST(Checkpoint, RoundTripAndRejection) {
  const auto dir = fs::temp_directory_path() / "nobox_test_ckpt";
  fs::create_directories(dir);
  const auto m = model::SubstituteModel::build(small_spec(2));
  model::save_substitute(dir / "m.ckpt", m, R"({"note":1})");
  std::string meta;
  const auto loaded = model::load_substitute(dir / "m.ckpt", m.spec().hash(), &meta);
  EXPECT_EQ(loaded.parameters(), m.parameters());
  EXPECT_EQ(loaded.spec().hash(), m.spec().hash());
  EXPECT_NE(meta.find("note"), std::string::npos);

  EXPECT_THROW(model::load_substitute(dir / "m.ckpt", std::string("deadbeef")), model::CheckpointError);
  std::ofstream(dir / "bad.ckpt") << "garbage";
  EXPECT_THROW(model::read_checkpoint(dir / "bad.ckpt"), model::CheckpointError);

  model::ClassifierSpec cs;
  cs.input_shape = {3, 8, 8};
  cs.arch = model::ClassifierArch::kResNet;
  cs.width = 8;
  const auto net = model::ClassifierNet::build(cs);
  model::save_classifier(dir / "c.ckpt", net);
  EXPECT_EQ(model::load_classifier(dir / "c.ckpt").parameters(), net.parameters());
  EXPECT_THROW(model::load_substitute(dir / "c.ckpt"), model::CheckpointError);
}

TEST(Classifier, ArchitecturesProduceLogits) {
  for (auto arch : {model::ClassifierArch::kVgg, model::ClassifierArch::kResNet, model::ClassifierArch::kWide}) {
    model::ClassifierSpec cs;
    cs.input_shape = {3, 16, 16};
    cs.arch = arch;
    cs.width = 8;
    cs.num_classes = 5;
    const auto net = model::ClassifierNet::build(cs);
    const auto x = test::random_image(3, 16, 16, 1);
    const auto logits = net.logits(x.as_tensor());
    EXPECT_EQ(logits.size(), 5u);
    EXPECT_LT(net.feature_tap(), net.layer_count());
    EXPECT_EQ(model::classifier_arch_from_string(model::to_string(arch)), arch);
    EXPECT_EQ(model::ClassifierSpec::from_json(cs.to_json()).hash(), cs.hash());
  }
}
