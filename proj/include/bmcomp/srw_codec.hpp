#pragma once

// Single-peer relevant-window codec. The sender only drops positions it has
// already reported as filled itself; the receiver mirrors the sender's window.
//
// Wire format (little-endian):
//   u8 tag          0 = WithOffset, 1 = Type0, 2 = Type1
//   u64 offset      WithOffset only
//   varint skip     Type1 only
//   varint nbits
//   ceil(nbits/8) bytes, bit i in byte i/8 at bit position i%8

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bmcomp/bits.hpp"
#include "bmcomp/relevant_window.hpp"

namespace bmcomp {

enum class SrwMode { lemma1, optimized };

/// Offset-carrying message: bits cover the window members in [offset, offset+N).
struct SrwWithOffset {
  ChunkId offset = 0;
  Bits bits;
  friend bool operator==(const SrwWithOffset&, const SrwWithOffset&) = default;
};

/// Offsetless message, used when no window member lies below the offset.
struct SrwType0 {
  Bits bits;
  friend bool operator==(const SrwType0&, const SrwType0&) = default;
};

/// Offsetless message that first drops the `skip` smallest window members
/// (chunks the sender played out without ever reporting them filled).
struct SrwType1 {
  std::uint64_t skip = 0;
  Bits bits;
  friend bool operator==(const SrwType1&, const SrwType1&) = default;
};

using SrwMessage = std::variant<SrwWithOffset, SrwType0, SrwType1>;

const Bits& message_bits(const SrwMessage& msg);
/// Number of window positions the message accounts for: |v| plus any skip.
std::size_t accounted_positions(const SrwMessage& msg);

struct SrwSenderState {
  RelevantWindow window;
  friend bool operator==(const SrwSenderState&, const SrwSenderState&) = default;
};

struct SrwReceiverState {
  RelevantWindow window;
  /// Buffer width shared by the pair, when known. Enables desynchronization
  /// checks on decode.
  std::optional<std::size_t> width;
};

struct SrwEncodeResult {
  SrwMessage message;
  SrwSenderState state;
};

struct SrwDecodeResult {
  std::vector<WantedState> wanted;
  /// Full bitmap reconstruction; only available for WithOffset messages.
  std::optional<RegularBufferMap> reconstructed;
  SrwReceiverState state;
};

/// Throws InconsistentBitmap if an excluded id inside the map's range carries
/// a 0 (the map is not monotone with respect to earlier reports).
SrwEncodeResult srw_encode(const SrwSenderState& state, const RegularBufferMap& bm, SrwMode mode);

/// Throws Desynchronized when the message cannot have come from a sender
/// holding the same window.
SrwDecodeResult srw_decode(const SrwReceiverState& state, const SrwMessage& msg);

Bytes serialize(const SrwMessage& msg);
SrwMessage parse_srw_message(std::span<const std::uint8_t> data);
/// Parses one message from the reader, leaving trailing bytes unread.
SrwMessage read_srw_message(ByteReader& in);

namespace detail {

/// Maps `bits` onto the |bits| smallest members of `window` and returns the
/// wanted states plus the post-decode window (positions with bit 1 excluded).
std::pair<std::vector<WantedState>, RelevantWindow> map_onto_window(const RelevantWindow& window,
                                                                    std::span<const std::uint8_t> bits);

/// Rebuilds the sender's bitmap from the offset, the window with positions
/// below the offset removed and the mapped wanted states. Length is
/// max(mep, last mapped) - offset + 1, clipped to `width` when given. Window
/// non-members read as 1; members past the last mapped position (beyond the
/// sender's range) read as 0.
RegularBufferMap reconstruct(ChunkId offset, const RelevantWindow& window_after_drop,
                             std::span<const WantedState> wanted, std::optional<std::size_t> width);

}  // namespace detail

}  // namespace bmcomp
