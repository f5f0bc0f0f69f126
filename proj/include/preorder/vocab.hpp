#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace preorder {

// Dense string <-> id mapping. Id 0 is always the unknown-word entry.
class Vocab {
 public:
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::uint32_t kUnkId = 0;

  Vocab();
  // entries[0] must be kUnk; entries must be distinct.
  static Vocab from_entries(std::vector<std::string> entries);

  std::uint32_t id(std::string_view token) const;  // kUnkId when absent
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return entries_.at(id); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::span<const std::string> entries() const noexcept { return entries_; }

  // `token<TAB>id` per line, sorted by id.
  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<std::string> entries_;
  std::map<std::string, std::uint32_t, std::less<>> index_;
};

// Counts surface forms in first-occurrence order.
class VocabBuilder {
 public:
  void add(std::string_view token);
  template <typename Range>
  void add_all(const Range& tokens) {
    for (const auto& t : tokens) add(t);
  }
  std::size_t num_tokens() const noexcept { return total_; }

  // Keeps the limit-1 most frequent forms plus UNK; ties go to the form seen
  // first. Throws DataError when nothing was added, ConfigError if limit < 1.
  Vocab build(std::size_t limit) const;

 private:
  std::vector<std::string> order_;
  std::vector<std::size_t> counts_;
  std::map<std::string, std::size_t, std::less<>> slot_;
  std::size_t total_ = 0;
};

Vocab build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t limit);

}  // namespace preorder
