#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kgreason/eval.hpp"

using namespace kgreason;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
  static const std::vector<std::string> vocab{"head", "skin", "of", "body", "gene", "krt39",
                                              "anatomy", "node", "liver", "heart", "brain",
                                              "protein", "cell", "tissue", "blood", "bone"};
  std::uniform_int_distribution<std::size_t> len(0, max_words);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::string out;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) {
    if (i > 0) out += ' ';
    out += vocab[word(rng)];
  }
  return out;
}

template <typename F>
double seconds(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t pairs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  std::size_t words = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 60;
  std::mt19937_64 rng(7);
  std::vector<TextPair> input;
  input.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) input.emplace_back(random_text(rng, words), random_text(rng, words));

  std::vector<double> serial, parallel;
  double ts = seconds([&] { serial = rouge_l_batch_serial(input); });
  double tp = seconds([&] { parallel = rouge_l_batch(input); });

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  bool same = serial == parallel;
  std::cout << "rouge_l_batch pairs=" << pairs << " max_words=" << words << " threads=" << threads
            << "\n"
            << "  serial   " << ts << " s\n"
            << "  parallel " << tp << " s\n"
            << "  speedup  " << (tp > 0 ? ts / tp : 0.0) << "\n"
            << "  outputs identical: " << (same ? "yes" : "no") << "\n";
  return same ? 0 : 1;
}
