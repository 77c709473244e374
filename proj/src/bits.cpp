#include "bmcomp/bits.hpp"

#include "bmcomp/errors.hpp"

namespace bmcomp {

void put_varint(Bytes& out, std::uint64_t value) {
  while (value >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(value | 0x80));
    value >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(value));
}

void put_u64_le(Bytes& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

void put_packed_bits(Bytes& out, std::span<const std::uint8_t> bits) {
  const std::size_t base = out.size();
  out.resize(base + (bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[base + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
}

Bytes pack_bits(std::span<const std::uint8_t> bits) {
  Bytes out;
  put_packed_bits(out, bits);
  return out;
}

std::uint8_t ByteReader::u8() {
  if (pos_ >= data_.size()) throw MalformedMessage("unexpected end of message");
  return data_[pos_++];
}

std::uint64_t ByteReader::u64_le() {
  if (remaining() < 8) throw MalformedMessage("truncated 64-bit field");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
  pos_ += 8;
  return v;
}

std::uint64_t ByteReader::varint() {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const std::uint8_t b = u8();
    const std::uint64_t chunk = b & 0x7f;
    if (shift == 63 && chunk > 1) throw MalformedMessage("varint overflow");
    v |= chunk << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw MalformedMessage("varint overflow");
}

Bits ByteReader::packed_bits(std::size_t count) {
  if (count > remaining() * 8) throw MalformedMessage("truncated bit payload");
  const std::size_t nbytes = (count + 7) / 8;
  Bits bits(count);
  for (std::size_t i = 0; i < count; ++i) {
    bits[i] = (data_[pos_ + i / 8] >> (i % 8)) & 1u;
  }
  pos_ += nbytes;
  return bits;
}

}  // namespace bmcomp
