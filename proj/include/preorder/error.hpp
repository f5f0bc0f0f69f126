#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace preorder {

// Malformed or inconsistent input data (trees, alignments, label files,
// model files). Maps to exit code 2 in the command line tool.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bracket syntax error; `offset` is the character position in the line.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : DataError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// A node with more than two children reached a binary-only consumer.
class ArityError : public DataError {
 public:
  ArityError(const std::string& category, std::size_t arity)
      : DataError("node '" + category + "' has " + std::to_string(arity) +
                  " children; binary tree required (use binarization)"),
        category_(category) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite values during training. Maps to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or flag combination. Maps to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace preorder
