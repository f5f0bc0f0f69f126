#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "preorder/tree.hpp"

namespace preorder {

using TargetIndex = std::uint32_t;

// At most one target link per source token (intersection alignments).
struct Alignment {
  std::vector<std::optional<TargetIndex>> links;  // indexed by source position
  std::size_t target_len = 0;

  std::size_t source_len() const noexcept { return links.size(); }
  std::size_t num_aligned() const noexcept;
  friend bool operator==(const Alignment&, const Alignment&) = default;
};

enum class LinkPolicy {
  kStrict,     // a source token with two different links is an error
  kFirstLink,  // keep the smallest target index
};

// Parses a Pharaoh line (`0-1 2-0`). When target_len is not given it is
// taken as one past the largest target index seen.
Alignment parse_alignment(std::string_view line, std::size_t source_len,
                          std::optional<std::size_t> target_len = std::nullopt,
                          LinkPolicy policy = LinkPolicy::kStrict);

// Aligned target indices of source positions in [span.lo, span.hi), in
// source order. Unaligned positions are skipped.
std::vector<TargetIndex> target_indices(const Alignment& alignment, Span span);
std::vector<TargetIndex> target_indices(const Alignment& alignment);

}  // namespace preorder
