#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace currictl {

// splitmix64 (Steele, Lea, Flood). Used everywhere instead of std::mt19937 so
// that sequences are identical across standard library implementations.
inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Prng {
 public:
  explicit Prng(uint64_t seed) : state_(seed) {
    // warm up so nearby seeds diverge immediately
    splitmix64_next(state_);
  }

  uint64_t next() { return splitmix64_next(state_); }

  // unbiased integer in [0, n) via rejection sampling
  uint64_t uniform_below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Derives an independent stream seed from (seed, tag, indices...). Streams for
// distinct argument tuples never share state, which keeps parallel draws and
// multi-phase builds reproducible.
inline uint64_t derive_seed(uint64_t seed, std::string_view tag) {
  uint64_t s = seed;
  splitmix64_next(s);
  for (char c : tag) {
    s ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
    splitmix64_next(s);
  }
  return s;
}

inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t a) {
  uint64_t s = derive_seed(seed, tag);
  s ^= a;
  splitmix64_next(s);
  return s;
}

inline uint64_t derive_seed(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b) {
  uint64_t s = derive_seed(seed, tag, a);
  s ^= b;
  splitmix64_next(s);
  return s;
}

}  // namespace currictl
