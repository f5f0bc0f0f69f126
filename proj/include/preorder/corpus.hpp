#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "preorder/alignment.hpp"
#include "preorder/labels.hpp"
#include "preorder/tree.hpp"

namespace preorder {

// Lines without their terminators. Throws DataError if the file is unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Line-parallel corpus readers; errors carry `file:line:` prefixes.
std::vector<SyntaxTree> read_trees(const std::filesystem::path& path, TreeOptions options = {});
std::vector<Alignment> read_alignments(const std::filesystem::path& path,
                                       const std::vector<SyntaxTree>& trees,
                                       LinkPolicy policy = LinkPolicy::kStrict);
std::vector<NodeLabelSet> read_labels(const std::filesystem::path& path,
                                      const std::vector<SyntaxTree>& trees);

}  // namespace preorder
