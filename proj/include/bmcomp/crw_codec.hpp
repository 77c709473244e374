#pragma once

// Common relevant-window codec: both peers of a pair prune one shared window
// with their own reports and with the partner's reports. Sending and receiving
// are symmetric; A and B run the same code.
//
// Wire format: u8 tag (3), u64 offset (little-endian), varint nbits, packed
// bits as in the single-peer codec.

#include <optional>
#include <span>
#include <vector>

#include "bmcomp/bits.hpp"
#include "bmcomp/relevant_window.hpp"

namespace bmcomp {

struct CrwMessage {
  ChunkId offset = 0;
  Bits bits;
  friend bool operator==(const CrwMessage&, const CrwMessage&) = default;
};

struct CrwEndpointState {
  RelevantWindow window;
  /// Shared buffer width, when known; clips reconstructions and enables
  /// desynchronization checks.
  std::optional<std::size_t> width;
};

struct CrwSendResult {
  CrwMessage message;
  CrwEndpointState state;
};

struct CrwReceiveResult {
  std::vector<WantedState> wanted;
  /// May differ from the sender's true bitmap only at positions the receiver
  /// had already excluded (it does not care about those).
  RegularBufferMap reconstructed;
  CrwEndpointState state;
};

CrwSendResult crw_send(const CrwEndpointState& state, const RegularBufferMap& bm);
CrwReceiveResult crw_receive(const CrwEndpointState& state, const CrwMessage& msg);

/// One loss-free round: A sends, B receives, B sends, A receives.
struct CrwRound {
  CrwEndpointState a;
  CrwEndpointState b;
  CrwMessage a_to_b;
  CrwMessage b_to_a;
  std::vector<WantedState> learned_by_b;
  std::vector<WantedState> learned_by_a;
};

CrwRound crw_session_step(const CrwEndpointState& a, const CrwEndpointState& b,
                          const RegularBufferMap& bm_a, const RegularBufferMap& bm_b);

Bytes serialize(const CrwMessage& msg);
CrwMessage parse_crw_message(std::span<const std::uint8_t> data);
CrwMessage read_crw_message(ByteReader& in);

}  // namespace bmcomp
