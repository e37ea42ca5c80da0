// Writes a small labeled corpus and its proxy LM for the CLI test.
#include <fstream>
#include <iostream>

#include "support.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: make_corpus DOCS CSV LM\n";
    return 2;
  }
  const auto corpus = notai::testing::synthetic_corpus(std::stoul(argv[1]), 5005);
  std::ofstream csv(argv[2]);
  notai::write_dataset(csv, corpus.dataset);
  corpus.lm->save(argv[3]);
  return csv ? 0 : 1;
}
