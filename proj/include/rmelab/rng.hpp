#pragma once

#include <cstdint>

namespace rmelab {

// splitmix64: tiny, portable, and identical on every platform, which is what
// the byte-stable trace contract needs. std::uniform_int_distribution is not
// pinned across standard libraries, so we avoid <random> entirely.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). Modulo bias is irrelevant at simulator scales.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  bool chance(double p) {
    return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0) < p;
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Order-independent 128-bit state fingerprint for visited-set pruning.
struct Hash128 {
  uint64_t lo = 0xcbf29ce484222325ull;
  uint64_t hi = 0x9e3779b97f4a7c15ull;

  void mix(uint64_t v) {
    lo ^= v;
    lo *= 0x100000001b3ull;
    lo = (lo << 23) | (lo >> 41);
    hi += v ^ (lo >> 17);
    hi *= 0xff51afd7ed558ccdull;
    hi ^= hi >> 33;
  }
  void mix_bytes(const void* data, size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    uint64_t acc = 0;
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
      uint64_t w;
      __builtin_memcpy(&w, b + i, 8);
      mix(w);
    }
    for (; i < n; ++i) acc = (acc << 8) | b[i];
    mix(acc ^ n);
  }

  friend bool operator==(const Hash128& a, const Hash128& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

struct Hash128Hasher {
  size_t operator()(const Hash128& h) const {
    return static_cast<size_t>(h.lo ^ (h.hi * 0x9e3779b97f4a7c15ull));
  }
};

}  // namespace rmelab
