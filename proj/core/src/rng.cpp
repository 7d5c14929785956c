#include "zsc/rng.hpp"

#include <algorithm>

namespace zsc {

std::vector<int> Rng::sample_indices(int n, int k) {
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  shuffle(all);
  all.resize(std::min(n, k));
  std::sort(all.begin(), all.end());
  return all;
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace

uint64_t substream_seed(uint64_t root_seed, std::string_view name) {
  return splitmix64(splitmix64(root_seed) ^ fnv1a64(name));
}

Rng substream(uint64_t root_seed, std::string_view name) {
  return Rng(substream_seed(root_seed, name));
}

}  // namespace zsc
