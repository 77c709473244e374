#include "bmcomp/crw_codec.hpp"

#include <fmt/format.h>

#include "bmcomp/errors.hpp"
#include "bmcomp/srw_codec.hpp"

namespace bmcomp {

namespace {
constexpr std::uint8_t kTagCrw = 3;
}

CrwSendResult crw_send(const CrwEndpointState& state, const RegularBufferMap& bm) {
  CrwSendResult out;
  out.message.offset = bm.offset;
  std::vector<ChunkId> ones;
  for (ChunkId c : state.window.members_in(bm.offset, bm.end())) {
    const std::uint8_t b = bm.bits[c - bm.offset];
    out.message.bits.push_back(b);
    if (b) ones.push_back(c);
  }
  out.state.window = state.window.remove_below(bm.offset).exclude(ones);
  out.state.width = state.width;
  return out;
}

CrwReceiveResult crw_receive(const CrwEndpointState& state, const CrwMessage& msg) {
  if (state.width && msg.bits.size() > *state.width) {
    throw Desynchronized(fmt::format("message carries {} bits for a buffer of width {}",
                                     msg.bits.size(), *state.width));
  }
  const RelevantWindow dropped = state.window.remove_below(msg.offset);
  auto [wanted, next] = detail::map_onto_window(dropped, msg.bits);
  if (state.width && !wanted.empty() && wanted.back().chunk >= msg.offset + *state.width) {
    throw Desynchronized(fmt::format("chunk {} mapped outside [{}, {})", wanted.back().chunk,
                                     msg.offset, msg.offset + *state.width));
  }
  CrwReceiveResult out;
  out.reconstructed = detail::reconstruct(msg.offset, dropped, wanted, state.width);
  out.wanted = std::move(wanted);
  out.state = CrwEndpointState{std::move(next), state.width};
  return out;
}

CrwRound crw_session_step(const CrwEndpointState& a, const CrwEndpointState& b,
                          const RegularBufferMap& bm_a, const RegularBufferMap& bm_b) {
  CrwRound r;
  auto sent_a = crw_send(a, bm_a);
  auto recv_b = crw_receive(b, sent_a.message);
  auto sent_b = crw_send(recv_b.state, bm_b);
  auto recv_a = crw_receive(sent_a.state, sent_b.message);
  r.a = std::move(recv_a.state);
  r.b = std::move(sent_b.state);
  r.a_to_b = std::move(sent_a.message);
  r.b_to_a = std::move(sent_b.message);
  r.learned_by_b = std::move(recv_b.wanted);
  r.learned_by_a = std::move(recv_a.wanted);
  return r;
}

Bytes serialize(const CrwMessage& msg) {
  Bytes out;
  out.push_back(kTagCrw);
  put_u64_le(out, msg.offset);
  put_varint(out, msg.bits.size());
  put_packed_bits(out, msg.bits);
  return out;
}

CrwMessage read_crw_message(ByteReader& in) {
  const std::uint8_t tag = in.u8();
  if (tag != kTagCrw) throw MalformedMessage(fmt::format("unknown CRW message tag {}", tag));
  CrwMessage m;
  m.offset = in.u64_le();
  m.bits = in.packed_bits(in.varint());
  return m;
}

CrwMessage parse_crw_message(std::span<const std::uint8_t> data) {
  ByteReader in(data);
  CrwMessage m = read_crw_message(in);
  if (!in.at_end()) throw MalformedMessage("trailing bytes after CRW message");
  return m;
}

}  // namespace bmcomp
