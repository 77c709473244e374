#include "bmcomp/relevant_window.hpp"

#include <algorithm>
#include <iterator>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "bmcomp/errors.hpp"

namespace bmcomp {

RelevantWindow::RelevantWindow(ChunkId floor, std::vector<ChunkId> excluded)
    : floor_(floor), excluded_(std::move(excluded)) {
  std::sort(excluded_.begin(), excluded_.end());
  excluded_.erase(std::unique(excluded_.begin(), excluded_.end()), excluded_.end());
  normalize();
}

// Drops exclusions below floor, then advances floor past any excluded run
// starting at it.
void RelevantWindow::normalize() {
  auto it = std::lower_bound(excluded_.begin(), excluded_.end(), floor_);
  while (it != excluded_.end() && *it == floor_) {
    ++floor_;
    ++it;
  }
  excluded_.erase(excluded_.begin(), it);
}

bool RelevantWindow::contains(ChunkId c) const {
  return c >= floor_ && !std::binary_search(excluded_.begin(), excluded_.end(), c);
}

RelevantWindow RelevantWindow::remove_below(ChunkId phi) const {
  if (phi <= floor_) return *this;
  RelevantWindow w;
  w.floor_ = phi;
  w.excluded_.assign(std::lower_bound(excluded_.begin(), excluded_.end(), phi), excluded_.end());
  w.normalize();
  return w;
}

RelevantWindow RelevantWindow::exclude(std::span<const ChunkId> positions) const {
  if (positions.empty()) return *this;
  std::vector<ChunkId> add(positions.begin(), positions.end());
  std::sort(add.begin(), add.end());
  add.erase(std::unique(add.begin(), add.end()), add.end());
  for (ChunkId c : add) {
    if (!contains(c)) {
      throw PositionNotInWindow(fmt::format("chunk {} is not a member of {}", c, to_string()));
    }
  }
  RelevantWindow w;
  w.floor_ = floor_;
  w.excluded_.reserve(excluded_.size() + add.size());
  std::merge(excluded_.begin(), excluded_.end(), add.begin(), add.end(),
             std::back_inserter(w.excluded_));
  w.normalize();
  return w;
}

std::vector<ChunkId> RelevantWindow::first_k(std::size_t k) const {
  std::vector<ChunkId> out;
  out.reserve(k);
  auto ex = excluded_.begin();
  for (ChunkId c = floor_; out.size() < k; ++c) {
    if (ex != excluded_.end() && *ex == c) {
      ++ex;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

ChunkId RelevantWindow::nth_member(std::size_t k) const {
  ChunkId c = floor_ + k;
  for (ChunkId e : excluded_) {
    if (e > c) break;
    ++c;
  }
  return c;
}

std::vector<ChunkId> RelevantWindow::members_in(ChunkId lo, ChunkId hi_exclusive) const {
  std::vector<ChunkId> out;
  lo = std::max(lo, floor_);
  if (lo >= hi_exclusive) return out;
  out.reserve(hi_exclusive - lo);
  auto ex = std::lower_bound(excluded_.begin(), excluded_.end(), lo);
  for (ChunkId c = lo; c < hi_exclusive; ++c) {
    if (ex != excluded_.end() && *ex == c) {
      ++ex;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

std::size_t RelevantWindow::count_members_in(ChunkId lo, ChunkId hi_exclusive) const {
  lo = std::max(lo, floor_);
  if (lo >= hi_exclusive) return 0;
  const auto first = std::lower_bound(excluded_.begin(), excluded_.end(), lo);
  const auto last = std::lower_bound(first, excluded_.end(), hi_exclusive);
  return static_cast<std::size_t>(hi_exclusive - lo) - static_cast<std::size_t>(last - first);
}

std::optional<ChunkId> RelevantWindow::mep() const {
  if (!excluded_.empty()) return excluded_.back();
  if (floor_ > 0) return floor_ - 1;
  return std::nullopt;
}

RelevantWindow RelevantWindow::intersect(const RelevantWindow& other) const {
  RelevantWindow w;
  w.floor_ = std::max(floor_, other.floor_);
  const auto a = std::lower_bound(excluded_.begin(), excluded_.end(), w.floor_);
  const auto b = std::lower_bound(other.excluded_.begin(), other.excluded_.end(), w.floor_);
  std::set_union(a, excluded_.end(), b, other.excluded_.end(), std::back_inserter(w.excluded_));
  w.normalize();
  return w;
}

std::string RelevantWindow::to_string() const {
  return fmt::format("{{floor {}, excl {{{}}}}}", floor_, fmt::join(excluded_, ","));
}

}  // namespace bmcomp
