#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fopaeq {

using Rng = std::mt19937_64;

// Derives an independent generator from a master seed and a path of stream
// ids (batch, purpose, stage, ...). Identical inputs give identical streams.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1));
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace fopaeq
