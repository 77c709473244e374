#pragma once

// Relevant windows: the co-finite sets of chunk ids that a codec pair still
// has to talk about. Both codecs (single-peer and common window) share this
// bookkeeping, together with the regular buffer-map model.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmcomp/bits.hpp"

namespace bmcomp {

/// A peer's advertised buffer occupancy: bit i describes chunk offset + i.
struct RegularBufferMap {
  ChunkId offset = 0;
  Bits bits;

  std::size_t width() const { return bits.size(); }
  ChunkId end() const { return offset + bits.size(); }
  bool has(ChunkId c) const { return c >= offset && c < end() && bits[c - offset] != 0; }

  friend bool operator==(const RegularBufferMap&, const RegularBufferMap&) = default;
};

/// A (chunk, bit) fact the receiver learned from a compressed message.
struct WantedState {
  ChunkId chunk = 0;
  bool filled = false;

  friend bool operator==(const WantedState&, const WantedState&) = default;
};

/// Set of chunk ids {c >= floor} minus a finite excluded set.
///
/// The representation is kept canonical: floor is always the smallest member
/// and every excluded id is strictly greater than floor. Two windows are
/// therefore equal as sets exactly when they compare equal with ==. All
/// operations return new windows; a window is never mutated after
/// construction.
class RelevantWindow {
 public:
  /// All chunk ids.
  RelevantWindow() = default;
  /// All chunk ids >= floor.
  explicit RelevantWindow(ChunkId floor) : floor_(floor) {}

  /// Builds {c >= floor} \ excluded. `excluded` may be unsorted, contain
  /// duplicates or ids below floor; the result is normalized.
  RelevantWindow(ChunkId floor, std::vector<ChunkId> excluded);

  bool contains(ChunkId c) const;

  /// Smallest member.
  ChunkId floor() const { return floor_; }
  /// Ascending non-members above floor.
  const std::vector<ChunkId>& excluded() const { return excluded_; }

  /// Drops every member below phi. Membership of ids >= phi is unchanged.
  RelevantWindow remove_below(ChunkId phi) const;

  /// Removes `positions` from the window. Every position must currently be a
  /// member; otherwise throws PositionNotInWindow (codec desynchronization).
  RelevantWindow exclude(std::span<const ChunkId> positions) const;

  /// The k smallest members, ascending.
  std::vector<ChunkId> first_k(std::size_t k) const;

  /// The member with zero-based rank k.
  ChunkId nth_member(std::size_t k) const;

  /// Members in [lo, hi_exclusive), ascending.
  std::vector<ChunkId> members_in(ChunkId lo, ChunkId hi_exclusive) const;
  std::size_t count_members_in(ChunkId lo, ChunkId hi_exclusive) const;

  /// Maximum excluded position: the largest non-member, or nullopt when the
  /// window is all of [0, inf).
  std::optional<ChunkId> mep() const;

  /// Set intersection (union of exclusions).
  RelevantWindow intersect(const RelevantWindow& other) const;

  std::string to_string() const;

  friend bool operator==(const RelevantWindow&, const RelevantWindow&) = default;

 private:
  void normalize();

  ChunkId floor_ = 0;
  std::vector<ChunkId> excluded_;
};

}  // namespace bmcomp
