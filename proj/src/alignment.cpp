#include "preorder/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <string>

#include "preorder/error.hpp"

namespace preorder {

namespace {

std::size_t parse_index(std::string_view text, std::string_view pair) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw DataError("malformed alignment pair '" + std::string(pair) + "'");
  return value;
}

}  // namespace

std::size_t Alignment::num_aligned() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(links.begin(), links.end(), [](const auto& l) { return l.has_value(); }));
}

Alignment parse_alignment(std::string_view line, std::size_t source_len,
                          std::optional<std::size_t> target_len, LinkPolicy policy) {
  Alignment a;
  a.links.assign(source_len, std::nullopt);
  std::size_t max_target = 0;
  bool any = false;

  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    const std::string_view pair = line.substr(pos, end - pos);
    pos = end;

    const auto dash = pair.find('-');
    if (dash == std::string_view::npos)
      throw DataError("malformed alignment pair '" + std::string(pair) + "'");
    const std::size_t s = parse_index(pair.substr(0, dash), pair);
    const std::size_t t = parse_index(pair.substr(dash + 1), pair);
    if (s >= source_len)
      throw DataError("source index " + std::to_string(s) + " out of range (source length " +
                      std::to_string(source_len) + ")");
    if (target_len && t >= *target_len)
      throw DataError("target index " + std::to_string(t) + " out of range (target length " +
                      std::to_string(*target_len) + ")");

    auto& slot = a.links[s];
    const auto target = static_cast<TargetIndex>(t);
    if (slot && *slot != target) {
      if (policy == LinkPolicy::kStrict)
        throw DataError("source token " + std::to_string(s) +
                        " has several target links; intersection alignments allow at most one "
                        "(pass --first-link to keep the smallest)");
      slot = std::min(*slot, target);
    } else {
      slot = target;
    }
    max_target = std::max(max_target, t);
    any = true;
  }
  a.target_len = target_len ? *target_len : (any ? max_target + 1 : 0);
  return a;
}

std::vector<TargetIndex> target_indices(const Alignment& alignment, Span span) {
  std::vector<TargetIndex> out;
  out.reserve(span.size());
  for (std::size_t i = span.lo; i < span.hi; ++i) {
    if (const auto& l = alignment.links[i]) out.push_back(*l);
  }
  return out;
}

std::vector<TargetIndex> target_indices(const Alignment& alignment) {
  return target_indices(alignment, {0, alignment.source_len()});
}

}  // namespace preorder
