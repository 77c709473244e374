#pragma once

// Helpers shared by the ideal and the lossy simulator.

#include <optional>
#include <span>
#include <vector>

#include "bmcomp/entropy_coder.hpp"
#include "bmcomp/sim.hpp"

namespace bmcomp::sim_detail {

/// Fresh metrics for a scenario, with the analytic counterparts filled in.
ExchangeMetrics empty_metrics(const ScenarioConfig& c);

/// Chunks the receiver has learned about, indexed by chunk id.
class ChunkSet {
 public:
  explicit ChunkSet(std::size_t size) : has_(size, 0) {}
  void insert(ChunkId c) { has_.at(c) = 1; }
  bool contains(ChunkId c) const { return c < has_.size() && has_[c]; }
  /// Members in [lo, hi), ascending.
  std::vector<ChunkId> in_range(ChunkId lo, ChunkId hi) const;

 private:
  std::vector<std::uint8_t> has_;
};

/// Applies a decoded message to the receiver's belief and audits it.
/// Completeness is checked against `truth`, the sender's map the message was
/// built from; soundness against `truth_now`, the sender's current map. They
/// differ when messages arrive late or out of order.
void absorb_and_audit(ExchangeMetrics& m, const RegularBufferMap& truth,
                      const RegularBufferMap& truth_now, std::span<const WantedState> wanted,
                      ChunkSet& belief, const ChunkSet& receiver_reported);

struct SentMessage {
  Bits bits;
  std::vector<ChunkId> chunks;
  std::size_t positions = 0;
  ChunkId offset = 0;
  std::optional<ChunkId> previous_offset;
  bool type1 = false;
};

/// Records one sent message in `dir` (when measured) and, with the entropy
/// layer on, codes it. Returns the coded block so a receiver can decode it
/// under its own model.
std::optional<CodedBlock> account(const ScenarioConfig& c, ExchangeMetrics& m,
                                  DirectionMetrics& dir, bool measured, const SentMessage& msg);

/// Decodes a coded block with a receiver-built model and counts a roundtrip
/// failure if the bits differ.
void check_decode(ExchangeMetrics& m, const CodedBlock& block, const BitModel& model,
                  std::span<const std::uint8_t> expected);

std::uint64_t chunk_span(const ScenarioConfig& c);

}  // namespace bmcomp::sim_detail
