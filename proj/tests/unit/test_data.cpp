#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "nobox/data/image.hpp"
#include "nobox/data/io.hpp"
#include "nobox/data/sampling.hpp"
#include "nobox/data/toy.hpp"
#include "nobox/data/transforms.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace nobox;
using namespace nobox::data;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("nobox_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DataErrorKind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no DataError thrown";
  return DataErrorKind::kInvalidArgument;
}

std::vector<double> sorted(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(ImageTensor, RejectsOutOfRangeAndOddGeometry) {
  EXPECT_THROW(ImageTensor(1, 2, 2, {0.0, 0.5, 1.0, 1.5}), DataError);
  EXPECT_THROW(ImageTensor(1, 3, 2, std::vector<double>(6, 0.0)), DataError);
  EXPECT_THROW(ImageTensor(2, 2, 2, std::vector<double>(8, 0.0)), DataError);
  EXPECT_THROW(ImageTensor(1, 2, 2, std::vector<double>(3, 0.0)), DataError);
  EXPECT_NO_THROW(ImageTensor(3, 2, 4, std::vector<double>(24, 1.0)));
  const auto c = ImageTensor::clamped(1, 2, 2, {-1.0, 0.25, 2.0, 1.0});
  EXPECT_EQ(c.vector(), (std::vector<double>{0.0, 0.25, 1.0, 1.0}));
}

TEST(LoadClassDir, DecodesEveryPngInOrder) {
  const auto dir = scratch_dir("load");
  std::vector<ImageTensor> written;
  for (int i = 0; i < 10; ++i) {
    written.push_back(quantize_8bit(test::random_image(3, 32, 32, 100 + i)));
    write_png(dir / ("img_" + std::to_string(i) + ".png"), written.back());
  }
  const auto images = load_class_dir(dir, {3, 32, 32});
  ASSERT_EQ(images.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(images[i].channels(), 3);
    EXPECT_EQ(images[i].height(), 32);
    for (double v : images[i].pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // Lossless on the 8-bit grid.
    for (std::size_t j = 0; j < images[i].size(); ++j) EXPECT_NEAR(images[i].vector()[j], written[i].vector()[j], 1e-12);
  }
}

TEST(LoadClassDir, ResizesLargerImages) {
  const auto dir = scratch_dir("resize");
  write_png(dir / "big.png", quantize_8bit(test::random_image(3, 64, 64, 7)));
  const auto images = load_class_dir(dir, {3, 32, 32});
  ASSERT_EQ(images.size(), 1u);
  EXPECT_EQ(images[0].height(), 32);
  EXPECT_EQ(images[0].width(), 32);
  for (double v : images[0].pixels()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(LoadClassDir, DistinctErrors) {
  const auto empty = scratch_dir("empty");
  EXPECT_EQ(error_kind([&] { load_class_dir(empty, {3, 32, 32}); }), DataErrorKind::kNoImages);
  try {
    load_class_dir(empty, {3, 32, 32});
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no images found"), std::string::npos);
  }
  EXPECT_EQ(error_kind([&] { load_class_dir(empty / "missing", {3, 32, 32}); }), DataErrorKind::kMissingPath);

  const auto broken = scratch_dir("broken");
  std::ofstream(broken / "x.png") << "not a png";
  EXPECT_EQ(error_kind([&] { load_class_dir(broken, {3, 32, 32}); }), DataErrorKind::kDecodeFailure);

  const auto gray = scratch_dir("gray");
  write_png(gray / "g.png", quantize_8bit(test::random_image(1, 32, 32, 3)));
  EXPECT_EQ(error_kind([&] { load_class_dir(gray, {3, 32, 32}); }), DataErrorKind::kChannelMismatch);
}

TEST(ResizeBilinear, ConstantImageStaysConstant) {
  const auto img = ImageTensor::filled(3, 8, 8, 0.3);
  const auto out = resize_bilinear(img, 4, 6);
  for (double v : out.pixels()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(SampleAuxiliarySet, BalancedTwentyImageSet) {
  std::vector<ImageTensor> c0, c1;
  for (int i = 0; i < 10; ++i) {
    c0.push_back(test::random_image(3, 8, 8, i));
    c1.push_back(test::random_image(3, 8, 8, 50 + i));
  }
  const auto aux = sample_auxiliary_set(c0, c1, 20, {1, 4}, 0);
  EXPECT_EQ(aux.size(), 20u);
  EXPECT_EQ(aux.indices_of(0).size(), 10u);
  EXPECT_EQ(aux.indices_of(1).size(), 10u);
  EXPECT_EQ(aux.target().label, 1);
  EXPECT_EQ(aux.target().image, c1[4]);
}

TEST(SampleAuxiliarySet, MinimalSetOfTwo) {
  std::vector<ImageTensor> c0{test::random_image(1, 4, 4, 1)}, c1{test::random_image(1, 4, 4, 2)};
  const auto aux = sample_auxiliary_set(c0, c1, 2, {0, 0}, 9);
  ASSERT_EQ(aux.size(), 2u);
  EXPECT_EQ(aux.examples[0].label, 0);
  EXPECT_EQ(aux.examples[1].label, 1);
  EXPECT_EQ(aux.target_index, 0u);
}

TEST(SampleAuxiliarySet, DeterministicAndContainsTarget) {
  std::vector<ImageTensor> c0, c1;
  for (int i = 0; i < 30; ++i) {
    c0.push_back(test::random_image(1, 4, 4, i));
    c1.push_back(test::random_image(1, 4, 4, 100 + i));
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = sample_auxiliary_set(c0, c1, 10, {0, 17}, seed);
    const auto b = sample_auxiliary_set(c0, c1, 10, {0, 17}, seed);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.examples[i].image, b.examples[i].image);
    EXPECT_EQ(a.target().image, c0[17]);
  }
}

TEST(SampleAuxiliarySet, Errors) {
  std::vector<ImageTensor> c0{test::random_image(1, 4, 4, 1)}, c1{test::random_image(1, 4, 4, 2)};
  EXPECT_EQ(error_kind([&] { sample_auxiliary_set(c0, c1, 4, {0, 0}, 0); }), DataErrorKind::kInsufficientImages);
  EXPECT_EQ(error_kind([&] { sample_auxiliary_set(c0, c1, 2, {0, 3}, 0); }), DataErrorKind::kInvalidTarget);
  EXPECT_EQ(error_kind([&] { sample_auxiliary_set(c0, c1, 2, {2, 0}, 0); }), DataErrorKind::kInvalidTarget);
  EXPECT_EQ(error_kind([&] { sample_auxiliary_set(c0, c1, 3, {0, 0}, 0); }), DataErrorKind::kInvalidArgument);
  EXPECT_EQ(error_kind([&] { sample_auxiliary_set(c0, c1, 42, {0, 0}, 0); }), DataErrorKind::kInvalidArgument);
}

TEST(AuxiliarySetValidate, RejectsSingleClass) {
  AuxiliarySet aux;
  aux.examples = {{test::random_image(1, 2, 2, 1), 0}, {test::random_image(1, 2, 2, 2), 0}};
  EXPECT_THROW(aux.validate(), DataError);
}

TEST(Rotate, IdentityAndFullTurn) {
  const auto x = test::random_image(3, 6, 6, 11);
  EXPECT_EQ(rotate(x, 0), x);
  EXPECT_EQ(rotate(rotate(rotate(rotate(x, 90), 90), 90), 90), x);
  EXPECT_EQ(rotate(rotate(x, 90), 270), x);
}

TEST(Rotate, QuarterTurnOnTwoByTwo) {
  // [[a,b],[c,d]] turned counter-clockwise by 90 degrees: [[b,d],[a,c]].
  const double a = 0.1, b = 0.2, c = 0.3, d = 0.4;
  const ImageTensor x(1, 2, 2, {a, b, c, d});
  EXPECT_EQ(rotate(x, 90).vector(), (std::vector<double>{b, d, a, c}));
  EXPECT_EQ(rotate(x, 180).vector(), (std::vector<double>{d, c, b, a}));
}

TEST(Rotate, PreservesMultisetAndRejectsBadInput) {
  const auto x = test::random_image(3, 8, 8, 5);
  for (int angle : {90, 180, 270}) EXPECT_EQ(sorted(rotate(x, angle).pixels()), sorted(x.pixels()));
  const auto wide = test::random_image(1, 4, 8, 6);
  EXPECT_THROW(rotate(wide, 90), DataError);
  EXPECT_NO_THROW(rotate(wide, 180));
  EXPECT_THROW(rotate(x, 45), DataError);
}

TEST(Jigsaw, IdentityInverseAndMirror) {
  const auto x = test::random_image(3, 8, 8, 21);
  EXPECT_EQ(jigsaw(x, {0, 1, 2, 3}), x);
  for (int k = 0; k < 24; ++k) {
    const auto order = tile_order_from_index(k);
    EXPECT_EQ(jigsaw(jigsaw(x, order), inverse(order)), x);
    EXPECT_EQ(sorted(jigsaw(x, order).pixels()), sorted(x.pixels()));
  }
  // Left half black, right half white; swapping the top tiles mirrors the top row.
  std::vector<double> px(16);
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 4; ++xx) px[y * 4 + xx] = xx < 2 ? 0.0 : 1.0;
  const ImageTensor half(1, 4, 4, px);
  const auto out = jigsaw(half, {1, 0, 2, 3});
  for (int y = 0; y < 4; ++y) {
    for (int xx = 0; xx < 4; ++xx) {
      const double expected = y < 2 ? (xx < 2 ? 1.0 : 0.0) : (xx < 2 ? 0.0 : 1.0);
      EXPECT_EQ(out.at(0, y, xx), expected) << y << "," << xx;
    }
  }
  EXPECT_THROW(jigsaw(x, {0, 0, 2, 3}), DataError);
  EXPECT_THROW(jigsaw(x, {0, 1, 2, 4}), DataError);
}

TEST(Jigsaw, TileOrderEnumeration) {
  std::set<std::array<int, 4>> seen;
  for (int k = 0; k < 24; ++k) {
    const auto o = tile_order_from_index(k);
    EXPECT_TRUE(is_bijection(o));
    seen.insert(o);
  }
  EXPECT_EQ(seen.size(), 24u);
  EXPECT_EQ(tile_order_from_index(0), (TileOrder{0, 1, 2, 3}));
  EXPECT_EQ(tile_order_from_index(23), (TileOrder{3, 2, 1, 0}));
}

TEST(Chaos, SeededTransformIsReproducibleAndCoversAllAngles) {
  const auto x = test::random_image(1, 4, 4, 3);
  std::set<int> angles;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const auto a = chaos_transform(x, ChaosKind::kRotation, seed);
    const auto b = chaos_transform(x, ChaosKind::kRotation, seed);
    EXPECT_EQ(a.descriptor, b.descriptor);
    EXPECT_EQ(a.image, apply_chaos(x, a.descriptor));
    angles.insert(a.descriptor.angle);
  }
  EXPECT_EQ(angles, (std::set<int>{0, 90, 180, 270}));
}

TEST(PrototypeBank, DistinctPairsWhenPossible) {
  const auto aux = test::random_aux(5, 1, 4, 4, 1);
  const auto bank = sample_prototype_bank(aux, 20, 3);
  ASSERT_EQ(bank.decoder_count(), 20u);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& p : bank.pairs) {
    EXPECT_EQ(aux.examples[p.class0_index].label, 0);
    EXPECT_EQ(aux.examples[p.class1_index].label, 1);
    EXPECT_EQ(p.class0, aux.examples[p.class0_index].image);
    pairs.insert({p.class0_index, p.class1_index});
  }
  EXPECT_EQ(pairs.size(), 20u);
}

TEST(PrototypeBank, WithReplacementOnTinySets) {
  const auto aux = test::random_aux(1, 1, 4, 4, 1);
  const auto bank = sample_prototype_bank(aux, 5, 3);
  ASSERT_EQ(bank.decoder_count(), 5u);
  for (const auto& p : bank.pairs) {
    EXPECT_EQ(p.class0_index, 0u);
    EXPECT_EQ(p.class1_index, 1u);
  }
  EXPECT_THROW(sample_prototype_bank(aux, 0, 3), DataError);
}

TEST(Png, RoundTripOnEightBitGrid) {
  const auto x = quantize_8bit(test::random_image(3, 6, 4, 8));
  const auto bytes = encode_png(x);
  EXPECT_EQ(decode_png(bytes), x);
}

TEST(Toy, DeterministicAndInRange) {
  ToyStyle style;
  const auto a = generate_toy_dataset({ToyShape::kRing, ToyShape::kCross}, 3, style, 4);
  const auto b = generate_toy_dataset({ToyShape::kRing, ToyShape::kCross}, 3, style, 4);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.at("ring").size(), 3u);
  EXPECT_NE(a.at("ring")[0], a.at("ring")[1]);
  for (const auto& name : toy_shape_names()) EXPECT_EQ(to_string(toy_shape_from_string(name)), name);
  EXPECT_THROW(toy_shape_from_string("hexagon"), DataError);
}
