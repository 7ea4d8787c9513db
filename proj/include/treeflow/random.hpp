#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace treeflow {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using Engine = std::mt19937_64;

//! Independent engine for stream `stream` under `seed`. Streams depend only on
//! the pair, never on how many other streams were drawn first.
inline Engine stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

// Standard normals drawn in index order.
inline void fill_standard_normal(std::span<double> out, Engine& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(engine);
}

}  // namespace treeflow
