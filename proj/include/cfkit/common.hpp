#pragma once

// Shared plumbing: seeded RNG substreams, rating clipping, a chunked
// parallel-for used by the modules that declare parallel sweeps.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

namespace cfkit {

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// All randomness flows from one master seed through named substreams
// ("split", "init", "shuffle", "cd", ...) so that pipeline stages can be
// varied independently without perturbing one another.
inline uint64_t stream_seed(uint64_t seed, std::string_view name,
                            uint64_t a = 0, uint64_t b = 0) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  uint64_t x = splitmix64(seed ^ h);
  x = splitmix64(x ^ (a + 0x9e3779b97f4a7c15ULL));
  x = splitmix64(x ^ (b + 0x632be59bd9b4e019ULL));
  return x;
}

inline std::mt19937_64 substream(uint64_t seed, std::string_view name,
                                 uint64_t a = 0, uint64_t b = 0) {
  return std::mt19937_64(stream_seed(seed, name, a, b));
}

// Worker cap honored by modules with parallel sweep contracts. Default 1:
// single-threaded runs are the deterministic baseline.
inline int& worker_threads() {
  static int t = 1;
  return t;
}

// Chunked parallel loop. Each chunk touches a disjoint index range, so the
// caller's body must only write state owned by its indices.
inline void parallel_for(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  int threads = std::max(1, worker_threads());
  if (threads == 1 || n < 2048) {
    body(0, n);
    return;
  }
  std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back(body, begin, end);
  }
  for (auto& t : pool) t.join();
}

inline double clip_rating(double x, int k_levels) {
  return std::min(std::max(x, 1.0), static_cast<double>(k_levels));
}

}  // namespace cfkit
