#include "preorder/vocab.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "preorder/error.hpp"

namespace preorder {

Vocab::Vocab() : entries_{std::string(kUnk)}, index_{{std::string(kUnk), kUnkId}} {}

Vocab Vocab::from_entries(std::vector<std::string> entries) {
  if (entries.empty() || entries[0] != kUnk)
    throw DataError("vocabulary must start with " + std::string(kUnk));
  Vocab v;
  v.entries_ = std::move(entries);
  v.index_.clear();
  for (std::uint32_t i = 0; i < v.entries_.size(); ++i) {
    if (!v.index_.emplace(v.entries_[i], i).second)
      throw DataError("duplicate vocabulary entry '" + v.entries_[i] + "'");
  }
  return v;
}

std::optional<std::uint32_t> Vocab::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocab::id(std::string_view token) const { return find(token).value_or(kUnkId); }

void Vocab::save(std::ostream& out) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) out << entries_[i] << '\t' << i << '\n';
}

Vocab Vocab::load(std::istream& in) {
  std::vector<std::string> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw DataError("vocab line " + std::to_string(lineno) + ": missing tab");
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError("vocab line " + std::to_string(lineno) + ": bad id");
    }
    if (id != entries.size())
      throw DataError("vocab line " + std::to_string(lineno) + ": ids must be dense and sorted");
    entries.push_back(line.substr(0, tab));
  }
  return from_entries(std::move(entries));
}

void VocabBuilder::add(std::string_view token) {
  ++total_;
  auto it = slot_.find(token);
  if (it == slot_.end()) {
    slot_.emplace(std::string(token), order_.size());
    order_.emplace_back(token);
    counts_.push_back(1);
  } else {
    ++counts_[it->second];
  }
}

Vocab VocabBuilder::build(std::size_t limit) const {
  if (limit < 1) throw ConfigError("vocabulary limit must be >= 1");
  if (total_ == 0) throw DataError("cannot build a vocabulary from an empty corpus");
  std::vector<std::size_t> idx(order_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return counts_[a] > counts_[b]; });
  std::vector<std::string> entries{std::string(Vocab::kUnk)};
  for (std::size_t i : idx) {
    if (entries.size() >= limit) break;
    if (order_[i] == Vocab::kUnk) continue;
    entries.push_back(order_[i]);
  }
  return Vocab::from_entries(std::move(entries));
}

Vocab build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t limit) {
  VocabBuilder builder;
  for (const auto& sentence : corpus) builder.add_all(sentence);
  return builder.build(limit);
}

}  // namespace preorder
