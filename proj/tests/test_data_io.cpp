#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "densehmc/data_io.hpp"
#include "densehmc/storage.hpp"
#include "support/oracles.hpp"

using namespace densehmc;

namespace {

const std::vector<std::uint8_t> kPixels{0, 255, 17, 128, 3, 4, 250, 9};

TEST(Idx, ReadsHandBuiltImageFixture) {
  oracle::TempDir dir("idx");
  oracle::write_idx(dir / "img", {2, 2, 2}, kPixels);
  const auto images = load_idx_images(dir / "img");
  EXPECT_EQ(images.count, 2u);
  EXPECT_EQ(images.height, 2u);
  EXPECT_EQ(images.width, 2u);
  EXPECT_EQ(images.pixels, kPixels);
}

TEST(Idx, ReadsLabels) {
  oracle::TempDir dir("idx");
  std::vector<std::uint8_t> digits(10);
  std::iota(digits.begin(), digits.end(), 0);
  oracle::write_idx(dir / "lab", {10}, digits);
  const auto labels = load_idx_labels(dir / "lab");
  ASSERT_EQ(labels.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(labels[static_cast<std::size_t>(i)], i);
}

IdxErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const IdxError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no IdxError thrown";
  return IdxErrorKind::Io;
}

TEST(Idx, ErrorKinds) {
  oracle::TempDir dir("idx");
  EXPECT_EQ(kind_of([&] { load_idx_images(dir / "missing"); }), IdxErrorKind::Io);

  oracle::write_idx(dir / "short", {2, 2, 2}, {1, 2, 3});
  EXPECT_EQ(kind_of([&] { load_idx_images(dir / "short"); }), IdxErrorKind::Truncated);

  oracle::write_idx(dir / "lab", {3}, {1, 2, 3});
  EXPECT_EQ(kind_of([&] { load_idx_images(dir / "lab"); }), IdxErrorKind::BadMagic);
  oracle::write_idx(dir / "img", {2, 2, 2}, kPixels);
  EXPECT_EQ(kind_of([&] { load_idx_labels(dir / "img"); }), IdxErrorKind::BadMagic);

  oracle::write_idx(dir / "huge", {0xffffffffu, 0xffffffffu, 0xffffffffu}, {});
  EXPECT_EQ(kind_of([&] { load_idx_images(dir / "huge"); }), IdxErrorKind::DimensionOverflow);

  std::ofstream(dir / "stub", std::ios::binary) << "ab";
  EXPECT_EQ(kind_of([&] { load_idx_images(dir / "stub"); }), IdxErrorKind::Truncated);
}

TEST(Idx, WriteThenLoadIsIdentity) {
  oracle::TempDir dir("idx");
  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> px(5 * 3 * 4);
  for (auto& v : px) v = static_cast<std::uint8_t>(rng());
  oracle::write_idx(dir / "img", {5, 3, 4}, px);
  const auto images = load_idx_images(dir / "img");
  EXPECT_EQ(images.pixels, px);
  EXPECT_EQ(images.height, 3u);
  EXPECT_EQ(images.width, 4u);
}

TEST(Design, MnistShapeHasInterceptColumn) {
  RawImageSet images{3, 28, 28, std::vector<std::uint8_t>(3 * 784, 0)};
  const auto x = to_design(images);
  EXPECT_EQ(x.cols(), 785u);
  EXPECT_EQ(x(0, 0), 1.0);
  for (std::size_t j = 1; j < 785; ++j) EXPECT_EQ(x(0, j), 0.0);
}

TEST(Design, MatchesHandFlattening) {
  const RawImageSet images{2, 2, 2, kPixels};
  const auto scaled = to_design(images);
  const auto raw = to_design(images, {.scale = false, .intercept = false});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(raw(i, j), kPixels[i * 4 + j]);
      EXPECT_DOUBLE_EQ(scaled(i, j + 1), kPixels[i * 4 + j] / 255.0);
      EXPECT_GE(scaled(i, j + 1), 0.0);
      EXPECT_LE(scaled(i, j + 1), 1.0);
    }
}

TEST(OneHot, Examples) {
  EXPECT_EQ(one_hot({0, 1, 2}, 3), DenseMatrix::identity(3));
  std::vector<int> labels{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
  const auto y = one_hot(labels, 10);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < 10; ++k) row += y(i, k);
    EXPECT_EQ(row, 1.0);
  }
  EXPECT_EQ(argmax_rows(y), labels);
  EXPECT_THROW(one_hot({0, 3}, 3), ContractError);
  EXPECT_THROW(one_hot({-1}, 3), ContractError);
}

TEST(Synth, ReproducibleValidAndConstrained) {
  const SynthSpec spec{.n = 300, .p = 5, .k = 4, .coef_variance = 1e-3, .seed = 8};
  const auto a = synth_generate(spec);
  const auto b = synth_generate(spec);
  EXPECT_EQ(a.data.x, b.data.x);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_EQ(a.true_b, b.true_b);
  EXPECT_NO_THROW(a.data.validate());
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(a.true_b(j, 3), 0.0);
  EXPECT_EQ(argmax_rows(a.data.y), a.labels);
}

TEST(Synth, NearZeroCoefficientsGiveUniformClasses) {
  const SynthSpec spec{.n = 10000, .p = 10, .k = 4, .coef_variance = 1e-3, .seed = 9};
  const auto s = synth_generate(spec);
  std::vector<double> count(4, 0.0);
  for (int l : s.labels) count[static_cast<std::size_t>(l)] += 1;
  const double expect = 2500.0, sigma = std::sqrt(10000 * 0.25 * 0.75);
  for (double c : count) EXPECT_LT(std::abs(c - expect), 3 * sigma);
}

TEST(Synth, RejectsSingleClass) {
  EXPECT_THROW((SynthSpec{.n = 10, .p = 2, .k = 1}.validate()), ConfigError);
  EXPECT_THROW((SynthSpec{.n = 10, .p = 2, .k = 3, .coef_variance = 0}.validate()), ConfigError);
}

TEST(Split, SizesAndOrder) {
  const Dataset tiny{DenseMatrix::from_rows({{1}, {2}}), DenseMatrix::from_rows({{1, 0}, {0, 1}})};
  const auto [a, b] = split(tiny, 1);
  EXPECT_EQ(a.n(), 1u);
  EXPECT_EQ(b.n(), 1u);

  std::mt19937_64 rng(2);
  const auto d = oracle::random_dataset(70, 3, 3, rng);
  const auto [train, test] = split(d, 60);
  EXPECT_EQ(train.n(), 60u);
  EXPECT_EQ(test.n(), 10u);
  for (std::size_t i = 0; i < 70; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_EQ(i < 60 ? train.x(i, j) : test.x(i - 60, j), d.x(i, j));
  EXPECT_THROW(split(d, 0), ContractError);
  EXPECT_THROW(split(d, 70), ContractError);
}

TEST(Split, FullMnistSizes) {
  const Dataset d{DenseMatrix(70000, 1), one_hot(std::vector<int>(70000, 1), 2)};
  const auto [train, test] = split(d, 60000);
  EXPECT_EQ(train.n(), 60000u);
  EXPECT_EQ(test.n(), 10000u);
}

TEST(Standardizer, CentersAndScalesWithoutTouchingIntercept) {
  const auto x = with_intercept(DenseMatrix::from_rows({{1, 5}, {3, 5}, {5, 5}}));
  const auto s = ColumnStandardizer::fit(x, true);
  const auto z = s.apply(x);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(z(i, 0), 1.0);
    EXPECT_EQ(z(i, 2), 0.0);
  }
  EXPECT_NEAR(z(0, 1) + z(1, 1) + z(2, 1), 0.0, 1e-15);
  EXPECT_NEAR(z(2, 1), -z(0, 1), 1e-15);
  EXPECT_THROW(s.apply(DenseMatrix(2, 2)), ContractError);
}

TEST(Csv, LoadsNamedLabelColumn) {
  oracle::TempDir dir("csv");
  std::ofstream(dir / "t.csv") << "a,label,b\n1.5,0,2\n-1,2,0.25\n3,1,4\n";
  const auto t = load_csv(dir / "t.csv", "label");
  EXPECT_EQ(t.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.labels, (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(t.features, DenseMatrix::from_rows({{1.5, 2}, {-1, 0.25}, {3, 4}}));
  EXPECT_THROW(load_csv(dir / "t.csv", "missing"), std::runtime_error);
  std::ofstream(dir / "bad.csv") << "a,label\nx,0\n";
  EXPECT_THROW(load_csv(dir / "bad.csv", "label"), std::runtime_error);
}

TEST(Storage, MatrixRoundTripBothPrecisions) {
  oracle::TempDir dir("store");
  std::mt19937_64 rng(3);
  for (const auto prec : {Precision::F64, Precision::F32}) {
    const auto m = oracle::random_matrix(4, 7, rng, 1.0, prec);
    save_matrix(dir / "m.dmat", m);
    EXPECT_EQ(load_matrix(dir / "m.dmat"), m);
  }
  save_matrix(dir / "e.dmat", DenseMatrix(0, 3));
  EXPECT_EQ(load_matrix(dir / "e.dmat"), DenseMatrix(0, 3));
}

TEST(Storage, HeaderIsSelfDescribing) {
  oracle::TempDir dir("store");
  save_matrix(dir / "m.dmat", DenseMatrix(2, 3, Precision::F32));
  std::ifstream in(dir / "m.dmat");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "densehmc-matrix 1 rows=2 cols=3 dtype=f32");
  EXPECT_EQ(std::filesystem::file_size(dir / "m.dmat"), header.size() + 1 + 6 * 4);
}

TEST(Storage, PayloadIsLittleEndian) {
  oracle::TempDir dir("store");
  save_matrix(dir / "one.dmat", DenseMatrix::from_rows({{1.0}}));
  std::ifstream in(dir / "one.dmat", std::ios::binary);
  std::string header;
  std::getline(in, header);
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  // 1.0 = 0x3FF0000000000000
  EXPECT_EQ(bytes[7], 0x3F);
  EXPECT_EQ(bytes[6], 0xF0);
  EXPECT_EQ(bytes[0], 0x00);
}

TEST(Storage, TruncationAndWrongKindAreErrors) {
  oracle::TempDir dir("store");
  std::ofstream(dir / "t.dmat", std::ios::binary) << "densehmc-matrix 1 rows=2 cols=2 dtype=f64\nabc";
  EXPECT_THROW(load_matrix(dir / "t.dmat"), std::runtime_error);
  std::ofstream(dir / "k.dmat", std::ios::binary) << "something-else 1 rows=1\n";
  EXPECT_THROW(load_matrix(dir / "k.dmat"), std::runtime_error);
  EXPECT_THROW(load_samples(dir / "nope"), std::runtime_error);
}

TEST(Storage, SamplesRoundTripWithChainLabels) {
  oracle::TempDir dir("store");
  std::mt19937_64 rng(4);
  StoredSamples s;
  for (int i = 0; i < 5; ++i) {
    s.samples.push_back(oracle::random_matrix(3, 2, rng));
    s.chains.push_back(i % 2);
  }
  save_samples(dir / "s.dsmp", s);
  const auto back = load_samples(dir / "s.dsmp");
  EXPECT_EQ(back.chains, s.chains);
  ASSERT_EQ(back.samples.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(back.samples[static_cast<std::size_t>(i)], s.samples[static_cast<std::size_t>(i)]);
  s.samples.push_back(DenseMatrix(2, 2));
  s.chains.push_back(0);
  EXPECT_THROW(save_samples(dir / "x.dsmp", s), std::runtime_error);
}

}  // namespace
