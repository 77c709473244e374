#pragma once

// Paired-peer exchange simulator. Two peers A and B with the same buffer
// width play the same stream; B runs gTau chunks ahead of A. Every round A
// sends its compressed buffer map, then B sends its own. Lengths are
// collected per direction and set against the closed-form limits.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bmcomp/relevant_window.hpp"
#include "bmcomp/s_curve.hpp"

namespace bmcomp {

enum class CodecKind { srw_lemma1, srw_optimized, crw };

const char* to_string(CodecKind k);
std::optional<CodecKind> parse_codec(const std::string& name);

struct LossyChannel {
  double p_loss = 0.0;
  /// Each delivered message is late by a uniform number of rounds in
  /// [0, max_delay_rounds].
  std::uint32_t max_delay_rounds = 0;
};

struct ScenarioConfig {
  std::size_t N = 0;
  std::size_t gT = 0;
  std::size_t gTau = 0;
  std::uint64_t rounds = 0;
  std::optional<SCurve> curve;
  std::uint64_t seed = 1;
  CodecKind codec = CodecKind::srw_lemma1;
  /// Unset means an ideal channel.
  std::optional<LossyChannel> lossy;
  bool entropy_layer = false;
  std::size_t replicas = 1;
  /// Rounds excluded from the statistics; defaults to ceil(N / gT) + 1, after
  /// which every reported position has a full history.
  std::optional<std::uint64_t> warmup;
  std::size_t batch_rounds = 100;
};

/// Throws ConfigError for a scenario the simulator cannot run.
void validate(const ScenarioConfig& c);
std::uint64_t warmup_rounds(const ScenarioConfig& c);

enum class Peer { a, b };

/// Sampled fill process of one peer. Chunk c is held at round i when the
/// service point s_i = offset(i) + N - 1 is at least age(c) past it.
class PeerTrace {
 public:
  PeerTrace(std::size_t width, std::size_t gT, ChunkId first_offset, std::vector<std::uint32_t> ages);

  ChunkId offset(std::uint64_t round) const { return first_offset_ + round * gT_; }
  ChunkId service(std::uint64_t round) const { return offset(round) + width_ - 1; }
  bool filled(ChunkId c, std::uint64_t round) const;
  RegularBufferMap bitmap(std::uint64_t round) const;
  std::size_t width() const { return width_; }
  const std::vector<std::uint32_t>& ages() const { return ages_; }

 private:
  std::size_t width_;
  std::size_t gT_;
  ChunkId first_offset_;
  std::vector<std::uint32_t> ages_;
};

PeerTrace generate_trace(const ScenarioConfig& c, Peer which, std::uint64_t replica = 0);

/// Welford accumulator; merge() combines two disjoint samples.
class RunningStat {
 public:
  void add(double x);
  void merge(const RunningStat& o);
  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0;
  double m2_ = 0;
};

/// Per-message series with a batch-means standard error (consecutive
/// messages are correlated through the shared window).
class SeriesStat {
 public:
  explicit SeriesStat(std::size_t batch = 100) : batch_(batch) {}
  void add(double x);
  void merge(const SeriesStat& o);
  std::uint64_t count() const { return all_.count(); }
  double mean() const { return all_.mean(); }
  double std_error() const;

 private:
  std::size_t batch_;
  RunningStat all_;
  RunningStat batch_means_;
  double acc_ = 0;
  std::size_t in_batch_ = 0;
};

struct DirectionMetrics {
  explicit DirectionMetrics(std::size_t batch = 100)
      : bits(batch), positions(batch), ideal_bits(batch), coded_bits(batch) {}
  /// |v|.
  SeriesStat bits;
  /// |v| plus any Type1 skip count.
  SeriesStat positions;
  SeriesStat ideal_bits;
  /// Arithmetic-coder payload, in bits.
  SeriesStat coded_bits;
  /// Closed-form expectations for `length` and `ideal_bits`.
  double analytic_length = 0;
  double analytic_ideal = 0;
  /// The series compared against analytic_length: positions for the
  /// offsetless codec, bits otherwise.
  const SeriesStat& length(CodecKind k) const;
};

struct ExchangeMetrics {
  CodecKind codec = CodecKind::srw_lemma1;
  std::size_t N = 0, gT = 0, gTau = 0;
  std::size_t replicas = 0;
  bool entropy_layer = false;
  DirectionMetrics ab;
  DirectionMetrics ba;
  /// Rounds between a message and the own report it was encoded against.
  SeriesStat staleness;
  std::uint64_t desyncs = 0;
  std::uint64_t soundness_violations = 0;
  std::uint64_t completeness_violations = 0;
  std::uint64_t coder_roundtrip_failures = 0;
  std::uint64_t coder_overhead_violations = 0;
  std::uint64_t type1_messages = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t undecodable = 0;
  std::uint64_t stuck_sessions = 0;

  void merge(const ExchangeMetrics& o);
  bool clean() const;
};

/// One message as the trace command shows it.
struct MessageEvent {
  std::uint64_t round = 0;
  Peer sender = Peer::a;
  RegularBufferMap truth;
  std::string message;
  std::size_t wire_bytes = 0;
  std::vector<WantedState> wanted;
  RelevantWindow sender_window;
  RelevantWindow receiver_window;
};
using MessageObserver = std::function<void(const MessageEvent&)>;

ExchangeMetrics run_ideal(const ScenarioConfig& c, std::uint64_t replica = 0,
                          const MessageObserver& observer = {});

/// Confirmed-baseline protocol over a lossy, reordering channel. With
/// p_loss = 0 and no delay it reproduces run_ideal exactly.
ExchangeMetrics run_lossy(const ScenarioConfig& c, std::uint64_t replica = 0);

/// Runs c.replicas replicas in parallel and merges them in index order.
ExchangeMetrics run_scenario(const ScenarioConfig& c);

struct AuditReport {
  std::uint64_t soundness_violations = 0;
  std::uint64_t completeness_violations = 0;
  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

/// Checks a receiver's knowledge about the sender inside the range of the
/// sender's true bitmap. Every believed-filled chunk must really be filled
/// (soundness); every filled chunk must be believed or be one the receiver
/// itself reported filled (completeness). `believed` and `reported` are
/// ascending; chunks outside the range are ignored.
AuditReport audit_knowledge(const RegularBufferMap& sender_truth, std::span<const ChunkId> believed,
                            std::span<const ChunkId> reported);

struct DeltaRow {
  std::string direction;
  std::string quantity;
  double empirical;
  double analytic;
  double delta;
  double std_error;
  bool flagged;
};

/// Empirical-vs-analytic rows; a row is flagged when |delta| > 2 std errors.
std::vector<DeltaRow> delta_rows(const ExchangeMetrics& m);

void write_metrics_csv(std::ostream& out, const ExchangeMetrics& m);
std::string metrics_json(const ExchangeMetrics& m);

}  // namespace bmcomp
