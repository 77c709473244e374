#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bmcomp/entropy_coder.hpp"
#include "bmcomp/errors.hpp"

namespace bmcomp {
namespace {

TEST(IdealCodeLength, Examples) {
  EXPECT_DOUBLE_EQ(ideal_code_length(Bits(8, 1), BitModel(8, 0.5)), 8.0);
  EXPECT_DOUBLE_EQ(ideal_code_length(Bits{1}, BitModel{1.0}), 0.0);
  EXPECT_DOUBLE_EQ(ideal_code_length(Bits{0}, BitModel{0.0}), 0.0);
  EXPECT_NEAR(ideal_code_length(Bits{1, 0}, BitModel{0.25, 0.25}), 2 - std::log2(0.75), 1e-12);
  EXPECT_NEAR(ideal_code_length(Bits{1, 0}, BitModel{0.25, 0.25}), 2.415, 0.001);
  EXPECT_EQ(ideal_code_length(Bits{}, BitModel{}), 0.0);
}

TEST(IdealCodeLength, ImpossibleBitIsAContradiction) {
  EXPECT_THROW(ideal_code_length(Bits{1}, BitModel{0.0}), ModelContradiction);
  EXPECT_THROW(ideal_code_length(Bits{0}, BitModel{1.0}), ModelContradiction);
  EXPECT_THROW(ac_encode(Bits{0, 1}, BitModel{0.5, 0.0}), ModelContradiction);
  EXPECT_THROW(ideal_code_length(Bits{0, 1}, BitModel{0.5}), InvalidParameters);
}

TEST(ArithmeticCoder, EmptyInput) {
  const auto block = ac_encode(Bits{}, BitModel{});
  EXPECT_TRUE(block.payload.empty());
  EXPECT_EQ(block.bit_count, 0u);
  EXPECT_TRUE(ac_decode(block, BitModel{}).empty());
}

TEST(ArithmeticCoder, CertainBitsCostNothing) {
  const Bits bits{1, 0, 1};
  const BitModel model{1.0, 0.0, 1.0};
  const auto block = ac_encode(bits, model);
  EXPECT_TRUE(block.payload.empty());
  EXPECT_EQ(ac_decode(block, model), bits);
}

TEST(ArithmeticCoder, FairBitsStayNearTheirCount) {
  std::mt19937_64 rng(1);
  Bits bits(10'000);
  for (auto& b : bits) b = rng() & 1;
  const BitModel model(bits.size(), 0.5);
  const auto block = ac_encode(bits, model);
  EXPECT_LE(8.0 * block.payload.size(), 10'000 + 32);
  EXPECT_GE(8.0 * block.payload.size(), 10'000 - 8);
  EXPECT_EQ(ac_decode(block, model), bits);
}

TEST(ArithmeticCoder, SkewedModelCompresses) {
  const Bits bits(10'000, 0);
  const BitModel model(bits.size(), 0.05);
  const double ideal = ideal_code_length(bits, model);
  EXPECT_NEAR(ideal, 10'000 * -std::log2(0.95), 1e-6);
  const auto block = ac_encode(bits, model);
  EXPECT_LE(8.0 * block.payload.size(), ideal + 32);
  EXPECT_LT(8.0 * block.payload.size(), 1000);
  EXPECT_EQ(ac_decode(block, model), bits);
}

TEST(ArithmeticCoder, TruncatedPayloadIsDetected) {
  std::mt19937_64 rng(2);
  Bits bits(400);
  for (auto& b : bits) b = rng() & 1;
  const BitModel model(bits.size(), 0.5);
  auto block = ac_encode(bits, model);
  block.payload.resize(block.payload.size() / 2);
  EXPECT_THROW(ac_decode(block, model), TruncatedBlock);
  block.payload.clear();
  EXPECT_THROW(ac_decode(block, model), TruncatedBlock);
}

TEST(ArithmeticCoder, BlockSerialization) {
  const CodedBlock block{300, {1, 2, 3}};
  EXPECT_EQ(serialize(block), (Bytes{0xac, 0x02, 1, 2, 3}));
  EXPECT_EQ(parse_coded_block(serialize(block)), block);
  EXPECT_THROW(parse_coded_block(Bytes{0x80}), MalformedMessage);
}

double random_probability(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  switch (rng() % 6) {
    case 0: return 0.0;
    case 1: return 1.0;
    case 2: return std::pow(10.0, -1 - 8 * u(rng));
    case 3: return 1 - std::pow(10.0, -1 - 8 * u(rng));
    default: return u(rng);
  }
}

TEST(ArithmeticCoder, RandomRoundtripsWithinOverheadBound) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 10'000; ++k) {
    const std::size_t n = rng() % (k % 10 == 0 ? 3000 : 200);
    BitModel model(n);
    Bits bits(n);
    for (std::size_t i = 0; i < n; ++i) {
      model[i] = random_probability(rng);
      bits[i] = u(rng) < model[i] ? 1 : 0;
      if (model[i] == 0.0) bits[i] = 0;
      if (model[i] == 1.0) bits[i] = 1;
    }
    const double ideal = ideal_code_length(bits, model);
    const auto block = ac_encode(bits, model);
    ASSERT_LE(8.0 * block.payload.size(), ideal + 32) << "case " << k;
    const auto parsed = parse_coded_block(serialize(block));
    ASSERT_EQ(ac_decode(parsed, model), bits) << "case " << k;
    // Replaying the integer splits tracks the ideal length closely.
    ASSERT_NEAR(quantized_code_length(bits, model), ideal,
                0.01 * ideal + 16 * static_cast<double>(n) / 1000 + 1);
  }
}

TEST(PositionModel, FreshAndCarriedPositions) {
  const auto s = SCurve::table({0.1, 0.3, 0.6, 0.8});
  // Offset 10, service point 13; previous offset 8 covered [8, 12).
  const std::vector<ChunkId> pos{10, 11, 12, 13};
  const auto m = position_model(s, pos, 10, 8);
  EXPECT_DOUBLE_EQ(m[0], (s(3) - s(1)) / (1 - s(1)));
  EXPECT_DOUBLE_EQ(m[1], (s(2) - s(0)) / (1 - s(0)));
  EXPECT_DOUBLE_EQ(m[2], s(1));
  EXPECT_DOUBLE_EQ(m[3], s(0));
  const auto fresh = position_model(s, pos, 10, std::nullopt);
  EXPECT_EQ(fresh, (BitModel{s(3), s(2), s(1), s(0)}));
  EXPECT_THROW(position_model(s, std::vector<ChunkId>{9}, 10, 8), InvalidParameters);
  EXPECT_THROW(position_model(s, std::vector<ChunkId>{14}, 10, 8), InvalidParameters);
}

}  // namespace
}  // namespace bmcomp
