// Writes a small synthetic head-final corpus: bracketed trees and
// source-target alignments, split into train and dev files.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "preorder/corpus.hpp"
#include "preorder/error.hpp"
#include "preorder/model.hpp"
#include "preorder/synthetic.hpp"

namespace fs = std::filesystem;
using namespace preorder;

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic head-final toy corpus"};
  std::string out = "data/toy";
  std::size_t count = 100;
  std::size_t dev = 20;
  double dropout = 0.1;
  std::uint64_t seed = 1;
  std::string zero_model;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--count", count, "Total sentences")->capture_default_str();
  app.add_option("--dev", dev, "Sentences held out as dev")->capture_default_str();
  app.add_option("--dropout", dropout, "Probability of dropping each alignment link")->capture_default_str();
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--zero-model", zero_model, "Also write an all-zero model over the corpus vocabulary");
  CLI11_PARSE(app, argc, argv);

  if (dev >= count) {
    std::cerr << "error: --dev must be smaller than --count\n";
    return 1;
  }
  try {
    const auto corpus = head_final_corpus(count, dropout, seed);
    std::string trees[2], aligns[2];
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const int part = i < count - dev ? 0 : 1;
      trees[part] += serialize(corpus[i].tree) + "\n";
      aligns[part] += format_alignment(corpus[i].alignment) + "\n";
    }
    fs::create_directories(out);
    write_file_atomic(fs::path(out) / "train.trees", trees[0]);
    write_file_atomic(fs::path(out) / "train.align", aligns[0]);
    write_file_atomic(fs::path(out) / "dev.trees", trees[1]);
    write_file_atomic(fs::path(out) / "dev.align", aligns[1]);

    if (!zero_model.empty()) {
      VocabBuilder wb, tb;
      for (const auto& s : corpus)
        for (const auto& n : s.tree.nodes()) {
          tb.add(n.tag);
          if (n.is_leaf()) wb.add(n.token);
        }
      ModelParams m = ModelParams::init({8, false, true}, wb.build(1000), tb.build(1000), seed);
      for (ParamId id = 0; id < m.store().size(); ++id) m.store()[id].value.fill(0.0);
      m.save_file(zero_model);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
