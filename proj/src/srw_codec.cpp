#include "bmcomp/srw_codec.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "bmcomp/errors.hpp"

namespace bmcomp {

namespace {

enum : std::uint8_t { kTagWithOffset = 0, kTagType0 = 1, kTagType1 = 2 };

// Bits of `bm` at the window members inside the map's range, plus the chunks
// that carry a 1 (to be excluded after sending).
struct Extracted {
  Bits bits;
  std::vector<ChunkId> ones;
};

Extracted extract(const RelevantWindow& window, const RegularBufferMap& bm) {
  Extracted ex;
  const auto members = window.members_in(bm.offset, bm.end());
  ex.bits.reserve(members.size());
  for (ChunkId c : members) {
    const std::uint8_t b = bm.bits[c - bm.offset];
    ex.bits.push_back(b);
    if (b) ex.ones.push_back(c);
  }
  return ex;
}

void check_consistent(const RelevantWindow& window, const RegularBufferMap& bm) {
  const auto& excl = window.excluded();
  for (auto it = std::lower_bound(excl.begin(), excl.end(), bm.offset);
       it != excl.end() && *it < bm.end(); ++it) {
    if (!bm.bits[*it - bm.offset]) {
      throw InconsistentBitmap(
          fmt::format("chunk {} is outside the window but the bitmap has 0", *it));
    }
  }
  // Ids between offset and the canonical floor are excluded too.
  for (ChunkId c = bm.offset; c < std::min(window.floor(), bm.end()); ++c) {
    if (!bm.bits[c - bm.offset]) {
      throw InconsistentBitmap(
          fmt::format("chunk {} is outside the window but the bitmap has 0", c));
    }
  }
}

}  // namespace

const Bits& message_bits(const SrwMessage& msg) {
  return std::visit([](const auto& m) -> const Bits& { return m.bits; }, msg);
}

std::size_t accounted_positions(const SrwMessage& msg) {
  if (const auto* t1 = std::get_if<SrwType1>(&msg)) return t1->bits.size() + t1->skip;
  return message_bits(msg).size();
}

SrwEncodeResult srw_encode(const SrwSenderState& state, const RegularBufferMap& bm, SrwMode mode) {
  check_consistent(state.window, bm);
  Extracted ex = extract(state.window, bm);

  SrwMessage msg;
  if (mode == SrwMode::lemma1) {
    msg = SrwWithOffset{bm.offset, std::move(ex.bits)};
  } else {
    const std::size_t skip = state.window.count_members_in(0, bm.offset);
    if (skip == 0) {
      msg = SrwType0{std::move(ex.bits)};
    } else {
      msg = SrwType1{skip, std::move(ex.bits)};
    }
  }
  RelevantWindow next = state.window.remove_below(bm.offset).exclude(ex.ones);
  return {std::move(msg), SrwSenderState{std::move(next)}};
}

namespace detail {

std::pair<std::vector<WantedState>, RelevantWindow> map_onto_window(const RelevantWindow& window,
                                                                    std::span<const std::uint8_t> bits) {
  const auto positions = window.first_k(bits.size());
  std::vector<WantedState> wanted;
  wanted.reserve(bits.size());
  std::vector<ChunkId> ones;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    wanted.push_back({positions[i], bits[i] != 0});
    if (bits[i]) ones.push_back(positions[i]);
  }
  return {std::move(wanted), window.exclude(ones)};
}

RegularBufferMap reconstruct(ChunkId offset, const RelevantWindow& window_after_drop,
                             std::span<const WantedState> wanted, std::optional<std::size_t> width) {
  // One past the highest chunk the map can describe.
  ChunkId top = offset;
  if (const auto m = window_after_drop.mep(); m && *m >= offset) top = std::max(top, *m + 1);
  if (!wanted.empty()) top = std::max(top, wanted.back().chunk + 1);
  std::size_t len = static_cast<std::size_t>(top - offset);
  if (width) len = std::min(len, *width);

  RegularBufferMap bm{offset, Bits(len, 0)};
  for (ChunkId c = offset; c < offset + len; ++c) {
    if (!window_after_drop.contains(c)) bm.bits[c - offset] = 1;
  }
  for (const auto& w : wanted) {
    if (w.chunk < offset + len) bm.bits[w.chunk - offset] = w.filled ? 1 : 0;
  }
  return bm;
}

}  // namespace detail

namespace {

void check_width(const SrwReceiverState& state, std::size_t nbits) {
  if (state.width && nbits > *state.width) {
    throw Desynchronized(fmt::format("message carries {} bits for a buffer of width {}", nbits,
                                     *state.width));
  }
}

}  // namespace

SrwDecodeResult srw_decode(const SrwReceiverState& state, const SrwMessage& msg) {
  SrwDecodeResult out;
  out.state.width = state.width;
  check_width(state, message_bits(msg).size());

  if (const auto* wo = std::get_if<SrwWithOffset>(&msg)) {
    const RelevantWindow dropped = state.window.remove_below(wo->offset);
    auto [wanted, next] = detail::map_onto_window(dropped, wo->bits);
    if (state.width && !wanted.empty() && wanted.back().chunk >= wo->offset + *state.width) {
      throw Desynchronized(fmt::format("chunk {} mapped outside [{}, {})", wanted.back().chunk,
                                       wo->offset, wo->offset + *state.width));
    }
    out.reconstructed = detail::reconstruct(wo->offset, dropped, wanted, state.width);
    out.wanted = std::move(wanted);
    out.state.window = std::move(next);
    return out;
  }

  RelevantWindow base = state.window;
  if (const auto* t1 = std::get_if<SrwType1>(&msg); t1 && t1->skip > 0) {
    // Drop the `skip` smallest members: everything below the (skip+1)-th.
    base = base.remove_below(base.nth_member(t1->skip));
  }
  auto [wanted, next] = detail::map_onto_window(base, message_bits(msg));
  out.wanted = std::move(wanted);
  out.state.window = std::move(next);
  return out;
}

Bytes serialize(const SrwMessage& msg) {
  Bytes out;
  std::visit(
      [&out](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SrwWithOffset>) {
          out.push_back(kTagWithOffset);
          put_u64_le(out, m.offset);
        } else if constexpr (std::is_same_v<T, SrwType0>) {
          out.push_back(kTagType0);
        } else {
          out.push_back(kTagType1);
          put_varint(out, m.skip);
        }
        put_varint(out, m.bits.size());
        put_packed_bits(out, m.bits);
      },
      msg);
  return out;
}

SrwMessage read_srw_message(ByteReader& in) {
  const std::uint8_t tag = in.u8();
  switch (tag) {
    case kTagWithOffset: {
      SrwWithOffset m;
      m.offset = in.u64_le();
      m.bits = in.packed_bits(in.varint());
      return m;
    }
    case kTagType0: {
      SrwType0 m;
      m.bits = in.packed_bits(in.varint());
      return m;
    }
    case kTagType1: {
      SrwType1 m;
      m.skip = in.varint();
      m.bits = in.packed_bits(in.varint());
      return m;
    }
    default:
      throw MalformedMessage(fmt::format("unknown SRW message tag {}", tag));
  }
}

SrwMessage parse_srw_message(std::span<const std::uint8_t> data) {
  ByteReader in(data);
  SrwMessage m = read_srw_message(in);
  if (!in.at_end()) throw MalformedMessage("trailing bytes after SRW message");
  return m;
}

}  // namespace bmcomp
