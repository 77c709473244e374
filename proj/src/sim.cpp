#include "bmcomp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "bmcomp/crw_codec.hpp"
#include "bmcomp/errors.hpp"
#include "bmcomp/limits.hpp"
#include "bmcomp/srw_codec.hpp"
#include "sim_internal.hpp"

namespace bmcomp {

namespace {
constexpr std::pair<CodecKind, const char*> kCodecNames[] = {
    {CodecKind::srw_lemma1, "srw-lemma1"},
    {CodecKind::srw_optimized, "srw-optimized"},
    {CodecKind::crw, "crw"},
};
}  // namespace

const char* to_string(CodecKind k) {
  for (const auto& [kind, name] : kCodecNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<CodecKind> parse_codec(const std::string& name) {
  for (const auto& [kind, n] : kCodecNames) {
    if (name == n) return kind;
  }
  return std::nullopt;
}

void validate(const ScenarioConfig& c) {
  if (!c.curve) throw ConfigError("scenario has no curve");
  if (c.N == 0) throw ConfigError("N must be positive");
  if (c.curve->width() != c.N) {
    throw ConfigError(fmt::format("curve width {} differs from N = {}", c.curve->width(), c.N));
  }
  if (c.gT == 0 || c.gT > c.N) throw ConfigError(fmt::format("gT = {} must lie in [1, N]", c.gT));
  if (c.gTau == 0 || c.gTau > c.gT) {
    throw ConfigError(fmt::format("gTau = {} must lie in [1, gT]", c.gTau));
  }
  if (c.rounds == 0) throw ConfigError("rounds must be positive");
  if (c.replicas == 0) throw ConfigError("replicas must be positive");
  if (c.batch_rounds == 0) throw ConfigError("batch_rounds must be positive");
  if (c.lossy) {
    if (!(c.lossy->p_loss >= 0.0 && c.lossy->p_loss < 1.0)) {
      throw ConfigError(fmt::format("p_loss = {} must lie in [0, 1)", c.lossy->p_loss));
    }
    if (c.lossy->max_delay_rounds >= 64) {
      throw ConfigError("max_delay_rounds must be below 64 for 8-bit sequence numbers");
    }
  }
}

std::uint64_t warmup_rounds(const ScenarioConfig& c) {
  return c.warmup.value_or((c.N + c.gT - 1) / c.gT + 1);
}

PeerTrace::PeerTrace(std::size_t width, std::size_t gT, ChunkId first_offset,
                     std::vector<std::uint32_t> ages)
    : width_(width), gT_(gT), first_offset_(first_offset), ages_(std::move(ages)) {}

bool PeerTrace::filled(ChunkId c, std::uint64_t round) const {
  const ChunkId s = service(round);
  return c <= s && s - c >= ages_.at(c);
}

RegularBufferMap PeerTrace::bitmap(std::uint64_t round) const {
  RegularBufferMap bm{offset(round), Bits(width_)};
  for (std::size_t k = 0; k < width_; ++k) bm.bits[k] = filled(bm.offset + k, round) ? 1 : 0;
  return bm;
}

PeerTrace generate_trace(const ScenarioConfig& c, Peer which, std::uint64_t replica) {
  validate(c);
  FillAgeSampler sample(*c.curve, derive_seed(c.seed, replica, which == Peer::a ? 1 : 2));
  std::vector<std::uint32_t> ages(sim_detail::chunk_span(c));
  for (auto& a : ages) a = sample();
  return PeerTrace(c.N, c.gT, which == Peer::a ? 0 : c.gTau, std::move(ages));
}

void RunningStat::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

void RunningStat::merge(const RunningStat& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

double RunningStat::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

void SeriesStat::add(double x) {
  all_.add(x);
  acc_ += x;
  if (++in_batch_ == batch_) {
    batch_means_.add(acc_ / static_cast<double>(batch_));
    acc_ = 0;
    in_batch_ = 0;
  }
}

void SeriesStat::merge(const SeriesStat& o) {
  // Partial batches are left out of the error estimate.
  all_.merge(o.all_);
  batch_means_.merge(o.batch_means_);
}

double SeriesStat::std_error() const {
  if (batch_means_.count() >= 2) {
    return std::sqrt(batch_means_.variance() / static_cast<double>(batch_means_.count()));
  }
  if (all_.count() >= 2) return std::sqrt(all_.variance() / static_cast<double>(all_.count()));
  return 0.0;
}

const SeriesStat& DirectionMetrics::length(CodecKind k) const {
  return k == CodecKind::srw_optimized ? positions : bits;
}

void ExchangeMetrics::merge(const ExchangeMetrics& o) {
  for (auto [mine, theirs] : {std::pair{&ab, &o.ab}, std::pair{&ba, &o.ba}}) {
    mine->bits.merge(theirs->bits);
    mine->positions.merge(theirs->positions);
    mine->ideal_bits.merge(theirs->ideal_bits);
    mine->coded_bits.merge(theirs->coded_bits);
  }
  staleness.merge(o.staleness);
  replicas += o.replicas;
  desyncs += o.desyncs;
  soundness_violations += o.soundness_violations;
  completeness_violations += o.completeness_violations;
  coder_roundtrip_failures += o.coder_roundtrip_failures;
  coder_overhead_violations += o.coder_overhead_violations;
  type1_messages += o.type1_messages;
  sent += o.sent;
  delivered += o.delivered;
  dropped += o.dropped;
  undecodable += o.undecodable;
  stuck_sessions += o.stuck_sessions;
}

bool ExchangeMetrics::clean() const {
  return desyncs == 0 && soundness_violations == 0 && completeness_violations == 0 &&
         coder_roundtrip_failures == 0 && coder_overhead_violations == 0 && stuck_sessions == 0;
}

AuditReport audit_knowledge(const RegularBufferMap& sender_truth, std::span<const ChunkId> believed,
                            std::span<const ChunkId> reported) {
  AuditReport r;
  const ChunkId lo = sender_truth.offset, hi = sender_truth.end();
  auto b = std::lower_bound(believed.begin(), believed.end(), lo);
  for (; b != believed.end() && *b < hi; ++b) {
    if (!sender_truth.has(*b)) ++r.soundness_violations;
  }
  b = std::lower_bound(believed.begin(), believed.end(), lo);
  auto rep = std::lower_bound(reported.begin(), reported.end(), lo);
  for (ChunkId c = lo; c < hi; ++c) {
    while (b != believed.end() && *b < c) ++b;
    while (rep != reported.end() && *rep < c) ++rep;
    if (!sender_truth.has(c)) continue;
    const bool known = (b != believed.end() && *b == c) || (rep != reported.end() && *rep == c);
    if (!known) ++r.completeness_violations;
  }
  return r;
}

namespace sim_detail {

std::uint64_t chunk_span(const ScenarioConfig& c) {
  return (c.rounds - 1) * c.gT + c.gTau + c.N;
}

ExchangeMetrics empty_metrics(const ScenarioConfig& c) {
  ExchangeMetrics m;
  m.codec = c.codec;
  m.N = c.N;
  m.gT = c.gT;
  m.gTau = c.gTau;
  m.replicas = 1;
  m.entropy_layer = c.entropy_layer;
  m.ab = DirectionMetrics(c.batch_rounds);
  m.ba = DirectionMetrics(c.batch_rounds);
  m.staleness = SeriesStat(c.batch_rounds);

  const LimitParams p{*c.curve, c.gT, c.gTau};
  if (c.codec == CodecKind::crw) {
    const Directional w = w_crw(p), j = w_jfc(p);
    m.ab.analytic_length = w.ab;
    m.ba.analytic_length = w.ba;
    m.ab.analytic_ideal = j.ab;
    m.ba.analytic_ideal = j.ba;
  } else {
    const double w = w_srw(p, c.codec == CodecKind::srw_lemma1);
    const double j = w_jfs(p);
    m.ab.analytic_length = m.ba.analytic_length = w;
    m.ab.analytic_ideal = m.ba.analytic_ideal = j;
  }
  return m;
}

std::vector<ChunkId> ChunkSet::in_range(ChunkId lo, ChunkId hi) const {
  std::vector<ChunkId> out;
  hi = std::min<ChunkId>(hi, has_.size());
  for (ChunkId c = lo; c < hi; ++c) {
    if (has_[c]) out.push_back(c);
  }
  return out;
}

void absorb_and_audit(ExchangeMetrics& m, const RegularBufferMap& truth,
                      const RegularBufferMap& truth_now, std::span<const WantedState> wanted,
                      ChunkSet& belief, const ChunkSet& receiver_reported) {
  for (const auto& w : wanted) {
    if (w.filled) belief.insert(w.chunk);
  }
  const auto reported = receiver_reported.in_range(truth.offset, truth.end());
  const AuditReport r = audit_knowledge(truth, belief.in_range(truth.offset, truth.end()), reported);
  m.completeness_violations += r.completeness_violations;
  if (&truth_now == &truth) {
    m.soundness_violations += r.soundness_violations;
  } else {
    const auto now = audit_knowledge(truth_now, belief.in_range(truth_now.offset, truth_now.end()),
                                     receiver_reported.in_range(truth_now.offset, truth_now.end()));
    m.soundness_violations += now.soundness_violations;
  }
}

std::optional<CodedBlock> account(const ScenarioConfig& c, ExchangeMetrics& m,
                                  DirectionMetrics& dir, bool measured, const SentMessage& msg) {
  ++m.sent;
  if (measured) {
    dir.bits.add(static_cast<double>(msg.bits.size()));
    dir.positions.add(static_cast<double>(msg.positions));
    if (msg.type1) ++m.type1_messages;
  }
  if (!c.entropy_layer) return std::nullopt;
  const BitModel model = position_model(*c.curve, msg.chunks, msg.offset, msg.previous_offset);
  const double ideal = ideal_code_length(msg.bits, model);
  CodedBlock block = ac_encode(msg.bits, model);
  const double coded = 8.0 * static_cast<double>(block.payload.size());
  if (coded > ideal + 32.0) ++m.coder_overhead_violations;
  if (measured) {
    dir.ideal_bits.add(ideal);
    dir.coded_bits.add(coded);
  }
  return block;
}

void check_decode(ExchangeMetrics& m, const CodedBlock& block, const BitModel& model,
                  std::span<const std::uint8_t> expected) {
  try {
    const Bits got = ac_decode(block, model);
    if (!std::equal(got.begin(), got.end(), expected.begin(), expected.end())) {
      ++m.coder_roundtrip_failures;
    }
  } catch (const Error&) {
    ++m.coder_roundtrip_failures;
  }
}

}  // namespace sim_detail

namespace {

using namespace sim_detail;

std::vector<ChunkId> chunks_of(std::span<const WantedState> wanted) {
  std::vector<ChunkId> out;
  out.reserve(wanted.size());
  for (const auto& w : wanted) out.push_back(w.chunk);
  return out;
}

std::string bit_string(std::span<const std::uint8_t> bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::string describe(const SrwMessage& msg) {
  if (const auto* m = std::get_if<SrwWithOffset>(&msg)) {
    return fmt::format("WithOffset(offset={}, v={})", m->offset, bit_string(m->bits));
  }
  if (const auto* m = std::get_if<SrwType1>(&msg)) {
    return fmt::format("Type1(skip={}, v={})", m->skip, bit_string(m->bits));
  }
  return fmt::format("Type0(v={})", bit_string(message_bits(msg)));
}

// One direction of a single-peer session: sender and its mirror.
struct SrwLink {
  const PeerTrace* trace;
  Peer sender;
  SrwSenderState tx;
  SrwReceiverState rx;
  ChunkSet belief;
  DirectionMetrics* dir;
};

void srw_round(const ScenarioConfig& c, ExchangeMetrics& m, SrwLink& link, std::uint64_t i,
               bool measured, const ChunkSet& nothing_reported, const MessageObserver& observer) {
  const SrwMode mode = c.codec == CodecKind::srw_lemma1 ? SrwMode::lemma1 : SrwMode::optimized;
  const RegularBufferMap bm = link.trace->bitmap(i);
  SrwEncodeResult enc = srw_encode(link.tx, bm, mode);
  const Bytes wire = serialize(enc.message);
  const SrwMessage parsed = parse_srw_message(wire);
  if (!(parsed == enc.message)) ++m.desyncs;
  SrwDecodeResult dec = srw_decode(link.rx, parsed);
  ++m.delivered;
  if (!(dec.state.window == enc.state.window)) ++m.desyncs;
  if (dec.reconstructed && !(*dec.reconstructed == bm)) ++m.desyncs;
  absorb_and_audit(m, bm, bm, dec.wanted, link.belief, nothing_reported);
  if (measured && i > 0) m.staleness.add(1.0);

  SentMessage sent;
  sent.bits = message_bits(enc.message);
  sent.chunks = chunks_of(dec.wanted);
  sent.positions = accounted_positions(enc.message);
  sent.offset = bm.offset;
  if (i > 0) sent.previous_offset = link.trace->offset(i - 1);
  sent.type1 = std::holds_alternative<SrwType1>(enc.message);
  if (auto block = account(c, m, *link.dir, measured, sent)) {
    // The receiver infers the offset from the steady playback schedule.
    const BitModel model =
        position_model(*c.curve, sent.chunks, link.trace->offset(i), sent.previous_offset);
    check_decode(m, *block, model, sent.bits);
  }
  if (observer) {
    observer({i, link.sender, bm, describe(enc.message), wire.size(), dec.wanted,
              enc.state.window, dec.state.window});
  }
  link.tx = std::move(enc.state);
  link.rx = std::move(dec.state);
}

struct CrwPeer {
  const PeerTrace* trace;
  Peer who;
  CrwEndpointState state;
  ChunkSet belief;
  ChunkSet reported;
  DirectionMetrics* dir;
};

void crw_half_round(const ScenarioConfig& c, ExchangeMetrics& m, CrwPeer& x, CrwPeer& y,
                    std::uint64_t i, bool measured, const MessageObserver& observer) {
  const RegularBufferMap bm = x.trace->bitmap(i);
  CrwSendResult sent_msg = crw_send(x.state, bm);
  const Bytes wire = serialize(sent_msg.message);
  const CrwMessage parsed = parse_crw_message(wire);
  if (!(parsed == sent_msg.message)) ++m.desyncs;
  CrwReceiveResult recv = crw_receive(y.state, parsed);
  ++m.delivered;
  if (!(recv.state.window == sent_msg.state.window)) ++m.desyncs;
  absorb_and_audit(m, bm, bm, recv.wanted, y.belief, y.reported);
  for (const auto& w : recv.wanted) {
    if (w.filled) x.reported.insert(w.chunk);
  }
  if (measured && i > 0) m.staleness.add(1.0);

  SentMessage sent;
  sent.bits = sent_msg.message.bits;
  sent.chunks = chunks_of(recv.wanted);
  sent.positions = sent.bits.size();
  sent.offset = bm.offset;
  if (i > 0) sent.previous_offset = x.trace->offset(i - 1);
  if (auto block = account(c, m, *x.dir, measured, sent)) {
    const BitModel model =
        position_model(*c.curve, sent.chunks, parsed.offset, sent.previous_offset);
    check_decode(m, *block, model, sent.bits);
  }
  if (observer) {
    observer({i, x.who, bm, fmt::format("CRW(offset={}, v={})", parsed.offset, bit_string(parsed.bits)),
              wire.size(), recv.wanted, sent_msg.state.window, recv.state.window});
  }
  x.state = std::move(sent_msg.state);
  y.state = std::move(recv.state);
}

}  // namespace

ExchangeMetrics run_ideal(const ScenarioConfig& c, std::uint64_t replica,
                          const MessageObserver& observer) {
  validate(c);
  if (c.lossy) throw ConfigError("run_ideal needs an ideal channel");
  const PeerTrace ta = generate_trace(c, Peer::a, replica);
  const PeerTrace tb = generate_trace(c, Peer::b, replica);
  ExchangeMetrics m = empty_metrics(c);
  const std::uint64_t warmup = warmup_rounds(c);
  const std::size_t span = chunk_span(c);

  if (c.codec == CodecKind::crw) {
    const CrwEndpointState start{RelevantWindow(0), c.N};
    CrwPeer a{&ta, Peer::a, start, ChunkSet(span), ChunkSet(span), &m.ab};
    CrwPeer b{&tb, Peer::b, start, ChunkSet(span), ChunkSet(span), &m.ba};
    for (std::uint64_t i = 0; i < c.rounds; ++i) {
      const bool measured = i >= warmup;
      crw_half_round(c, m, a, b, i, measured, observer);
      crw_half_round(c, m, b, a, i, measured, observer);
    }
    return m;
  }

  const ChunkSet nothing(0);
  SrwLink ab{&ta, Peer::a, {RelevantWindow(ta.offset(0))}, {RelevantWindow(ta.offset(0)), c.N},
             ChunkSet(span), &m.ab};
  SrwLink ba{&tb, Peer::b, {RelevantWindow(tb.offset(0))}, {RelevantWindow(tb.offset(0)), c.N},
             ChunkSet(span), &m.ba};
  for (std::uint64_t i = 0; i < c.rounds; ++i) {
    const bool measured = i >= warmup;
    srw_round(c, m, ab, i, measured, nothing, observer);
    srw_round(c, m, ba, i, measured, nothing, observer);
  }
  return m;
}

ExchangeMetrics run_scenario(const ScenarioConfig& c) {
  validate(c);
  auto one = [&c](std::uint64_t r) { return c.lossy ? run_lossy(c, r) : run_ideal(c, r); };
  std::vector<std::future<ExchangeMetrics>> jobs;
  for (std::uint64_t r = 1; r < c.replicas; ++r) jobs.push_back(std::async(std::launch::async, one, r));
  ExchangeMetrics total = one(0);
  for (auto& j : jobs) total.merge(j.get());
  return total;
}

std::vector<DeltaRow> delta_rows(const ExchangeMetrics& m) {
  std::vector<DeltaRow> rows;
  auto add = [&rows](std::string dir, std::string q, double emp, double ana, double se) {
    const double delta = emp - ana;
    rows.push_back({std::move(dir), std::move(q), emp, ana, delta, se, std::abs(delta) > 2 * se});
  };
  auto both = [](const SeriesStat& x, const SeriesStat& y, auto f) {
    return (f(x) + f(y)) / 2;
  };
  const SeriesStat& la = m.ab.length(m.codec);
  const SeriesStat& lb = m.ba.length(m.codec);
  add("ab", "length", la.mean(), m.ab.analytic_length, la.std_error());
  add("ba", "length", lb.mean(), m.ba.analytic_length, lb.std_error());
  add("avg", "length", both(la, lb, [](const SeriesStat& s) { return s.mean(); }),
      (m.ab.analytic_length + m.ba.analytic_length) / 2,
      std::hypot(la.std_error(), lb.std_error()) / 2);
  if (m.entropy_layer) {
    const SeriesStat& ia = m.ab.ideal_bits;
    const SeriesStat& ib = m.ba.ideal_bits;
    add("ab", "ideal_bits", ia.mean(), m.ab.analytic_ideal, ia.std_error());
    add("ba", "ideal_bits", ib.mean(), m.ba.analytic_ideal, ib.std_error());
    add("avg", "ideal_bits", both(ia, ib, [](const SeriesStat& s) { return s.mean(); }),
        (m.ab.analytic_ideal + m.ba.analytic_ideal) / 2,
        std::hypot(ia.std_error(), ib.std_error()) / 2);
  }
  return rows;
}

void write_metrics_csv(std::ostream& out, const ExchangeMetrics& m) {
  out << "direction,quantity,empirical,analytic,delta,std_error,flagged\n";
  for (const auto& r : delta_rows(m)) {
    fmt::print(out, "{},{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", r.direction, r.quantity, r.empirical,
               r.analytic, r.delta, r.std_error, r.flagged ? 1 : 0);
  }
  for (auto [name, d] : {std::pair{"ab", &m.ab}, std::pair{"ba", &m.ba}}) {
    fmt::print(out, "{},bits,{:.6f},,,{:.6f},\n", name, d->bits.mean(), d->bits.std_error());
    fmt::print(out, "{},positions,{:.6f},,,{:.6f},\n", name, d->positions.mean(),
               d->positions.std_error());
    if (m.entropy_layer) {
      fmt::print(out, "{},coded_bits,{:.6f},,,{:.6f},\n", name, d->coded_bits.mean(),
                 d->coded_bits.std_error());
    }
  }
}

std::string metrics_json(const ExchangeMetrics& m) {
  using nlohmann::ordered_json;
  auto series = [](const SeriesStat& s) {
    return ordered_json{{"count", s.count()}, {"mean", s.mean()}, {"std_error", s.std_error()}};
  };
  auto direction = [&](const DirectionMetrics& d) {
    ordered_json j{{"bits", series(d.bits)},
                   {"positions", series(d.positions)},
                   {"analytic_length", d.analytic_length}};
    if (m.entropy_layer) {
      j["ideal_bits"] = series(d.ideal_bits);
      j["coded_bits"] = series(d.coded_bits);
      j["analytic_ideal"] = d.analytic_ideal;
    }
    return j;
  };
  ordered_json deltas = ordered_json::array();
  for (const auto& r : delta_rows(m)) {
    deltas.push_back({{"direction", r.direction}, {"quantity", r.quantity}, {"empirical", r.empirical},
                      {"analytic", r.analytic}, {"delta", r.delta}, {"std_error", r.std_error},
                      {"flagged", r.flagged}});
  }
  ordered_json j{
      {"codec", to_string(m.codec)},
      {"N", m.N},
      {"gT", m.gT},
      {"gTau", m.gTau},
      {"replicas", m.replicas},
      {"ab", direction(m.ab)},
      {"ba", direction(m.ba)},
      {"deltas", deltas},
      {"staleness", series(m.staleness)},
      {"counters",
       {{"sent", m.sent},
        {"delivered", m.delivered},
        {"dropped", m.dropped},
        {"undecodable", m.undecodable},
        {"type1_messages", m.type1_messages},
        {"desyncs", m.desyncs},
        {"soundness_violations", m.soundness_violations},
        {"completeness_violations", m.completeness_violations},
        {"coder_roundtrip_failures", m.coder_roundtrip_failures},
        {"coder_overhead_violations", m.coder_overhead_violations},
        {"stuck_sessions", m.stuck_sessions}}},
  };
  return j.dump(2);
}

}  // namespace bmcomp
