#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bmcomp {

/// One entry per bit, each 0 or 1. Index i is the i-th reported position.
using Bits = std::vector<std::uint8_t>;
using Bytes = std::vector<std::uint8_t>;

/// Chunk sequence number; ascending with playback order.
using ChunkId = std::uint64_t;

// Unsigned LEB128.
void put_varint(Bytes& out, std::uint64_t value);
void put_u64_le(Bytes& out, std::uint64_t value);

/// Packs bits index-ascending, little-endian within each byte (bit i goes to
/// byte i/8, bit position i%8). Unused high bits of the last byte are zero.
void put_packed_bits(Bytes& out, std::span<const std::uint8_t> bits);
Bytes pack_bits(std::span<const std::uint8_t> bits);

/// Sequential reader over a byte buffer. Throws MalformedMessage when a read
/// runs past the end or a varint does not fit in 64 bits.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint64_t u64_le();
  std::uint64_t varint();
  Bits packed_bits(std::size_t count);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::span<const std::uint8_t> rest() const { return data_.subspan(pos_); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace bmcomp
