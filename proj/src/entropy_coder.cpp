#include "bmcomp/entropy_coder.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bmcomp/errors.hpp"

namespace bmcomp {

namespace {

constexpr std::uint32_t kTop = 1u << 24;
constexpr int kProbBits = 16;

void check_sizes(std::size_t bits, std::size_t model) {
  if (bits != model) {
    throw InvalidParameters(fmt::format("model has {} positions for {} bits", model, bits));
  }
}

bool certain(double p) { return p <= 0.0 || p >= 1.0; }

void check_certain(std::size_t i, std::uint8_t bit, double p) {
  if ((p <= 0.0 && bit) || (p >= 1.0 && !bit)) {
    throw ModelContradiction(fmt::format("bit {} at position {} has probability 0", bit, i));
  }
}

std::uint32_t quantize(double p) {
  const long q = std::lround(p * (1 << kProbBits));
  return static_cast<std::uint32_t>(std::clamp<long>(q, 1, (1 << kProbBits) - 1));
}

// Size of the sub-interval given to bit 1.
std::uint32_t split(std::uint32_t range, double p) {
  return static_cast<std::uint32_t>((std::uint64_t{range} * quantize(p)) >> kProbBits);
}

class Encoder {
 public:
  void encode(std::uint8_t bit, double p) {
    const std::uint32_t r = split(range_, p);
    if (bit) {
      range_ = r;
    } else {
      low_ += r;
      range_ -= r;
    }
    while (range_ < kTop) {
      shift();
      range_ <<= 8;
    }
    coded_ = true;
  }

  Bytes finish() {
    if (!coded_) return {};
    // Pick the shortest tail whose zero-padded value lands in [low, low + range).
    for (int k = 1; k <= 4; ++k) {
      const std::uint64_t block = std::uint64_t{1} << (32 - 8 * k);
      const std::uint64_t m = (low_ + block - 1) / block * block;
      if (m < low_ + range_) {
        low_ = m;
        for (int i = 0; i < k; ++i) shift();
        break;
      }
    }
    return std::move(out_);
  }

 private:
  void shift() {
    if (low_ >> 32) {
      for (std::size_t i = out_.size(); i-- > 0;) {
        if (++out_[i] != 0) break;
      }
      low_ &= 0xffffffffu;
    }
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ = (low_ << 8) & 0xffffffffu;
  }

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xffffffffu;
  Bytes out_;
  bool coded_ = false;
};

}  // namespace

double ideal_code_length(std::span<const std::uint8_t> bits, std::span<const double> model) {
  check_sizes(bits.size(), model.size());
  double total = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double p = model[i];
    if (certain(p)) {
      check_certain(i, bits[i], p);
      continue;
    }
    total -= std::log2(bits[i] ? p : 1.0 - p);
  }
  return total;
}

double quantized_code_length(std::span<const std::uint8_t> bits, std::span<const double> model) {
  check_sizes(bits.size(), model.size());
  double total = 0;
  std::uint32_t range = 0xffffffffu;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double p = model[i];
    if (certain(p)) {
      check_certain(i, bits[i], p);
      continue;
    }
    const std::uint32_t r = split(range, p);
    const std::uint32_t sub = bits[i] ? r : range - r;
    total -= std::log2(static_cast<double>(sub) / static_cast<double>(range));
    range = sub;
    while (range < kTop) range <<= 8;
  }
  return total;
}

CodedBlock ac_encode(std::span<const std::uint8_t> bits, std::span<const double> model) {
  check_sizes(bits.size(), model.size());
  Encoder enc;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (certain(model[i])) {
      check_certain(i, bits[i], model[i]);
      continue;
    }
    enc.encode(bits[i], model[i]);
  }
  return {bits.size(), enc.finish()};
}

Bits ac_decode(const CodedBlock& block, std::span<const double> model) {
  check_sizes(block.bit_count, model.size());
  const Bytes& in = block.payload;
  std::size_t pos = 0;
  auto next = [&]() -> std::uint32_t { return pos < in.size() ? in[pos++] : (pos++, 0u); };

  std::uint32_t code = 0;
  bool started = false;
  std::size_t shifts = 0;
  std::uint32_t range = 0xffffffffu;
  Bits out(block.bit_count);
  for (std::size_t i = 0; i < block.bit_count; ++i) {
    const double p = model[i];
    if (certain(p)) {
      out[i] = p >= 1.0 ? 1 : 0;
      continue;
    }
    if (!started) {
      for (int k = 0; k < 4; ++k) code = (code << 8) | next();
      started = true;
    }
    const std::uint32_t r = split(range, p);
    if (code < r) {
      out[i] = 1;
      range = r;
    } else {
      out[i] = 0;
      code -= r;
      range -= r;
    }
    while (range < kTop) {
      code = (code << 8) | next();
      range <<= 8;
      ++shifts;
    }
  }
  if (started && in.size() < shifts + 1) {
    throw TruncatedBlock(
        fmt::format("payload has {} bytes, the encoder wrote at least {}", in.size(), shifts + 1));
  }
  return out;
}

Bytes serialize(const CodedBlock& block) {
  Bytes out;
  put_varint(out, block.bit_count);
  out.insert(out.end(), block.payload.begin(), block.payload.end());
  return out;
}

CodedBlock parse_coded_block(std::span<const std::uint8_t> data) {
  ByteReader in(data);
  CodedBlock b;
  b.bit_count = in.varint();
  const auto rest = in.rest();
  b.payload.assign(rest.begin(), rest.end());
  return b;
}

BitModel position_model(const SCurve& curve, std::span<const ChunkId> positions, ChunkId offset,
                        std::optional<ChunkId> previous_offset) {
  const std::uint64_t n = curve.width();
  const ChunkId service = offset + n - 1;
  BitModel model;
  model.reserve(positions.size());
  for (ChunkId c : positions) {
    if (c < offset || c > service) {
      throw InvalidParameters(fmt::format("chunk {} is outside [{}, {}]", c, offset, service));
    }
    const std::uint64_t age = service - c;
    if (previous_offset && c >= *previous_offset && c < *previous_offset + n) {
      const std::uint64_t prev_age = *previous_offset + n - 1 - c;
      model.push_back(cond_download_prob(curve, prev_age, age));
    } else {
      model.push_back(curve(age));
    }
  }
  return model;
}

}  // namespace bmcomp
