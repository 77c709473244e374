#pragma once

// Model-driven coding of compressed bitmaps. A BitModel gives, for every
// position of a message, the probability that its bit is 1. Both ends derive
// the model from synchronized codec state, so nothing about it is sent.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bmcomp/bits.hpp"
#include "bmcomp/s_curve.hpp"

namespace bmcomp {

using BitModel = std::vector<double>;

struct CodedBlock {
  std::size_t bit_count = 0;
  Bytes payload;
  friend bool operator==(const CodedBlock&, const CodedBlock&) = default;
};

/// Sum of -log2 P(observed bit). Throws ModelContradiction if a bit has
/// probability 0 under the model.
double ideal_code_length(std::span<const std::uint8_t> bits, std::span<const double> model);

/// Code length under the coder's own integer interval split. This is what the
/// arithmetic coder can at best achieve; its payload is never shorter.
double quantized_code_length(std::span<const std::uint8_t> bits, std::span<const double> model);

/// Binary arithmetic coder with a 32-bit range and 16-bit probabilities.
/// Positions with probability exactly 0 or 1 are not coded.
CodedBlock ac_encode(std::span<const std::uint8_t> bits, std::span<const double> model);
/// Throws TruncatedBlock if the payload is shorter than the encoder's output.
Bits ac_decode(const CodedBlock& block, std::span<const double> model);

/// varint bit_count followed by the payload.
Bytes serialize(const CodedBlock& block);
CodedBlock parse_coded_block(std::span<const std::uint8_t> data);

/// Per-position model for a message sent by a peer whose offset is
/// `offset`: a chunk of the sender's previous report range (offset
/// `previous_offset`) that is still reported was empty then, so its
/// probability is conditional on that; any other chunk gets the marginal S.
/// The age of chunk c is offset + N - 1 - c.
BitModel position_model(const SCurve& curve, std::span<const ChunkId> positions, ChunkId offset,
                        std::optional<ChunkId> previous_offset);

}  // namespace bmcomp
