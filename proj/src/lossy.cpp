// Confirmed-baseline protocol over a lossy channel.
//
// Every message carries a 4-byte reliability header in front of the codec
// message: seq, ack, baseline (low 8 bits of the full sequence numbers) and a
// flags byte. A sender encodes message j against
//   - its own window after message b, where b is the newest own message the
//     partner has acknowledged (flag has_baseline), and, for the common-window
//     codec,
//   - the window it holds after decoding the partner's message a, where a is
//     the newest partner message it decoded (flag uses_partner; a is the ack).
// The receiver rebuilds the same starting window from its copy of the
// sender's message b and its own message a. Lost messages are not resent; a
// message whose references the receiver cannot resolve is discarded.

#include <array>
#include <map>
#include <random>

#include <fmt/format.h>

#include "bmcomp/crw_codec.hpp"
#include "bmcomp/errors.hpp"
#include "bmcomp/sim.hpp"
#include "bmcomp/srw_codec.hpp"
#include "sim_internal.hpp"

namespace bmcomp {

namespace {

using namespace sim_detail;

constexpr std::size_t kRing = 256;
// A reference further back than this is not used: the receiver's copy might
// already be overwritten.
constexpr std::uint64_t kMaxReferenceAge = 128;
constexpr std::uint64_t kStuckRounds = 256;

enum : std::uint8_t { kHasAck = 1, kHasBaseline = 2, kUsesPartner = 4 };

struct Header {
  std::uint8_t seq = 0;
  std::uint8_t ack = 0;
  std::uint8_t baseline = 0;
  std::uint8_t flags = 0;
};

struct Snapshot {
  bool valid = false;
  std::uint64_t seq = 0;
  ChunkId offset = 0;
  RelevantWindow window;
};

struct Pending {
  std::uint64_t seq;
  Bytes wire;
  std::optional<CodedBlock> block;
};

struct Side {
  const PeerTrace* trace;
  DirectionMetrics* dir;
  std::array<Snapshot, kRing> own{};
  std::array<Snapshot, kRing> partner{};
  std::optional<std::uint64_t> confirmed;
  std::optional<std::uint64_t> latest_decoded;
  std::optional<std::uint64_t> latest_sent;
  std::uint64_t last_decode_round = 0;
  ChunkSet belief;
  ChunkSet reported;
};

// Largest value <= bound whose low 8 bits are `low`.
std::optional<std::uint64_t> resolve(std::uint8_t low, std::uint64_t bound) {
  const std::uint64_t cand = (bound & ~std::uint64_t{0xff}) | low;
  if (cand <= bound) return cand;
  if (cand < 256) return std::nullopt;
  return cand - 256;
}

bool recent(std::uint64_t ref, std::uint64_t now) { return now < ref + kMaxReferenceAge; }

const Snapshot* lookup(const std::array<Snapshot, kRing>& ring, std::uint64_t seq) {
  const Snapshot& s = ring[seq % kRing];
  return s.valid && s.seq == seq ? &s : nullptr;
}

class LossySession {
 public:
  LossySession(const ScenarioConfig& c, std::uint64_t replica, const PeerTrace& ta,
               const PeerTrace& tb, ExchangeMetrics& m)
      : c_(c),
        m_(m),
        rng_(derive_seed(c.seed, replica, 3)),
        a_{&ta, &m.ab, {}, {}, {}, {}, {}, 0, ChunkSet(chunk_span(c)), ChunkSet(chunk_span(c))},
        b_{&tb, &m.ba, {}, {}, {}, {}, {}, 0, ChunkSet(chunk_span(c)), ChunkSet(chunk_span(c))} {}

  void run() {
    const std::uint64_t warmup = warmup_rounds(c_);
    for (std::uint64_t i = 0; i < c_.rounds; ++i) {
      const bool measured = i >= warmup;
      send(a_, i, measured, to_b_);
      deliver(to_b_, i, b_, a_);
      send(b_, i, measured, to_a_);
      deliver(to_a_, i, a_, b_);
      for (const Side* s : {&a_, &b_}) {
        if (i >= s->last_decode_round + kStuckRounds) {
          ++m_.stuck_sessions;
          return;
        }
      }
    }
  }

 private:
  using Queue = std::map<std::uint64_t, std::map<std::uint64_t, Pending>>;

  void send(Side& x, std::uint64_t j, bool measured, Queue& out) {
    const RegularBufferMap bm = x.trace->bitmap(j);
    Header h;
    h.seq = static_cast<std::uint8_t>(j);
    if (x.latest_decoded) {
      h.flags |= kHasAck;
      h.ack = static_cast<std::uint8_t>(*x.latest_decoded);
    }
    const Snapshot* base_own = nullptr;
    if (x.confirmed && recent(*x.confirmed, j)) {
      base_own = lookup(x.own, *x.confirmed);
    }
    if (base_own) {
      h.flags |= kHasBaseline;
      h.baseline = static_cast<std::uint8_t>(base_own->seq);
    }
    const Snapshot* base_partner = nullptr;
    if (c_.codec == CodecKind::crw && x.latest_decoded && recent(*x.latest_decoded, j)) {
      base_partner = lookup(x.partner, *x.latest_decoded);
      if (base_partner) h.flags |= kUsesPartner;
    }

    RelevantWindow base = base_own ? base_own->window : RelevantWindow(0);
    if (base_partner) base = base.intersect(base_partner->window);

    SentMessage sent;
    sent.offset = bm.offset;
    if (base_own) sent.previous_offset = base_own->offset;
    sent.chunks = base.members_in(bm.offset, bm.end());
    RelevantWindow after;
    Bytes wire{h.seq, h.ack, h.baseline, h.flags};
    if (c_.codec == CodecKind::crw) {
      CrwSendResult r = crw_send({base, c_.N}, bm);
      sent.bits = r.message.bits;
      after = std::move(r.state.window);
      const Bytes body = serialize(r.message);
      wire.insert(wire.end(), body.begin(), body.end());
    } else {
      const SrwMode mode =
          c_.codec == CodecKind::srw_optimized && base_own ? SrwMode::optimized : SrwMode::lemma1;
      SrwEncodeResult r = srw_encode({base}, bm, mode);
      sent.bits = message_bits(r.message);
      sent.type1 = std::holds_alternative<SrwType1>(r.message);
      after = std::move(r.state.window);
      const Bytes body = serialize(r.message);
      wire.insert(wire.end(), body.begin(), body.end());
    }
    sent.positions = sent.bits.size() + (sent.type1 ? base.count_members_in(0, bm.offset) : 0);
    for (std::size_t k = 0; k < sent.bits.size(); ++k) {
      if (sent.bits[k]) x.reported.insert(sent.chunks[k]);
    }
    if (measured && base_own) m_.staleness.add(static_cast<double>(j - base_own->seq));
    std::optional<CodedBlock> block = account(c_, m_, *x.dir, measured, sent);

    x.own[j % kRing] = {true, j, bm.offset, std::move(after)};
    x.latest_sent = j;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng_) < c_.lossy->p_loss) {
      ++m_.dropped;
      return;
    }
    std::uint64_t delay = 0;
    if (c_.lossy->max_delay_rounds > 0) {
      delay = std::uniform_int_distribution<std::uint64_t>(0, c_.lossy->max_delay_rounds)(rng_);
    }
    out[j + delay].emplace(j, Pending{j, std::move(wire), std::move(block)});
  }

  void deliver(Queue& q, std::uint64_t round, Side& y, Side& x) {
    const auto due = q.find(round);
    if (due == q.end()) return;
    for (auto& [seq, p] : due->second) receive(y, x, round, p);
    q.erase(due);
  }

  // y receives a message from x.
  void receive(Side& y, Side& x, std::uint64_t round, const Pending& p) {
    ++m_.delivered;
    ByteReader in(p.wire);
    Header h{in.u8(), in.u8(), in.u8(), in.u8()};
    const std::optional<std::uint64_t> j = resolve(h.seq, round);

    std::optional<std::uint64_t> ack;
    if ((h.flags & kHasAck) && y.latest_sent) {
      ack = resolve(h.ack, *y.latest_sent);
      if (ack) y.confirmed = std::max(y.confirmed.value_or(0), *ack);
    }
    if (!j) {
      ++m_.undecodable;
      return;
    }

    const Snapshot* base_sender = nullptr;
    if (h.flags & kHasBaseline) {
      const auto b = resolve(h.baseline, *j);
      if (b) base_sender = lookup(y.partner, *b);
      if (!base_sender) {
        ++m_.undecodable;
        return;
      }
    }
    const Snapshot* base_mine = nullptr;
    if (h.flags & kUsesPartner) {
      if (ack) base_mine = lookup(y.own, *ack);
      if (!base_mine) {
        ++m_.undecodable;
        return;
      }
    }
    RelevantWindow base = base_sender ? base_sender->window : RelevantWindow(0);
    if (base_mine) base = base.intersect(base_mine->window);

    const RegularBufferMap truth = x.trace->bitmap(*j);
    std::vector<WantedState> wanted;
    RelevantWindow after;
    ChunkId offset = 0;
    Bits bits;
    try {
      if (c_.codec == CodecKind::crw) {
        const CrwMessage msg = read_crw_message(in);
        CrwReceiveResult r = crw_receive({base, c_.N}, msg);
        offset = msg.offset;
        bits = msg.bits;
        wanted = std::move(r.wanted);
        after = std::move(r.state.window);
      } else {
        const SrwMessage msg = read_srw_message(in);
        SrwDecodeResult r = srw_decode({base, c_.N}, msg);
        if (const auto* wo = std::get_if<SrwWithOffset>(&msg)) {
          offset = wo->offset;
        } else if (base_sender) {
          offset = base_sender->offset + (*j - base_sender->seq) * c_.gT;
        } else {
          throw Desynchronized("offsetless message without a baseline");
        }
        bits = message_bits(msg);
        wanted = std::move(r.wanted);
        after = std::move(r.state.window);
      }
      if (!in.at_end()) throw MalformedMessage("trailing bytes after message");
    } catch (const Error&) {
      ++m_.desyncs;
      return;
    }
    if (offset != truth.offset) ++m_.desyncs;
    if (const Snapshot* s = lookup(x.own, *j); !s || !(s->window == after)) ++m_.desyncs;

    if (*j == round) {
      absorb_and_audit(m_, truth, truth, wanted, y.belief, y.reported);
    } else {
      absorb_and_audit(m_, truth, x.trace->bitmap(round), wanted, y.belief, y.reported);
    }
    if (p.block) {
      std::vector<ChunkId> chunks;
      for (const auto& w : wanted) chunks.push_back(w.chunk);
      std::optional<ChunkId> prev;
      if (base_sender) prev = base_sender->offset;
      check_decode(m_, *p.block, position_model(*c_.curve, chunks, offset, prev), bits);
    }

    y.partner[*j % kRing] = {true, *j, offset, std::move(after)};
    y.latest_decoded = std::max(y.latest_decoded.value_or(0), *j);
    y.last_decode_round = round;
  }

  const ScenarioConfig& c_;
  ExchangeMetrics& m_;
  std::mt19937_64 rng_;
  Side a_;
  Side b_;
  Queue to_b_;
  Queue to_a_;
};

}  // namespace

ExchangeMetrics run_lossy(const ScenarioConfig& c, std::uint64_t replica) {
  validate(c);
  if (!c.lossy) throw ConfigError("run_lossy needs a lossy channel");
  const PeerTrace ta = generate_trace(c, Peer::a, replica);
  const PeerTrace tb = generate_trace(c, Peer::b, replica);
  ExchangeMetrics m = empty_metrics(c);
  LossySession session(c, replica, ta, tb, m);
  session.run();
  return m;
}

}  // namespace bmcomp
