#include "preorder/corpus.hpp"

#include <fstream>
#include <system_error>

#include "preorder/error.hpp"

namespace preorder {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

void require_parallel(const std::filesystem::path& path, std::size_t lines, std::size_t trees) {
  if (lines != trees)
    throw DataError(path.string() + " has " + std::to_string(lines) + " lines but the tree file has " +
                    std::to_string(trees));
}

}  // namespace

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw DataError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::vector<SyntaxTree> read_trees(const std::filesystem::path& path, TreeOptions options) {
  const auto lines = read_lines(path);
  std::vector<SyntaxTree> trees;
  trees.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      trees.push_back(parse_tree(lines[i], options));
    } catch (const DataError& e) {
      throw DataError(where(path, i + 1) + e.what());
    }
  }
  return trees;
}

std::vector<Alignment> read_alignments(const std::filesystem::path& path,
                                       const std::vector<SyntaxTree>& trees, LinkPolicy policy) {
  const auto lines = read_lines(path);
  require_parallel(path, lines.size(), trees.size());
  std::vector<Alignment> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(parse_alignment(lines[i], trees[i].num_leaves(), std::nullopt, policy));
    } catch (const DataError& e) {
      throw DataError(where(path, i + 1) + e.what());
    }
  }
  return out;
}

std::vector<NodeLabelSet> read_labels(const std::filesystem::path& path,
                                      const std::vector<SyntaxTree>& trees) {
  const auto lines = read_lines(path);
  require_parallel(path, lines.size(), trees.size());
  std::vector<NodeLabelSet> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(parse_labels(lines[i]));
      check_covers(out.back(), trees[i]);
    } catch (const DataError& e) {
      throw DataError(where(path, i + 1) + e.what());
    }
  }
  return out;
}

}  // namespace preorder
