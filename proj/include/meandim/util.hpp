#pragma once

// Small shared utilities: a self-contained deterministic RNG (splitmix64) so
// reports are byte-identical across platforms and standard-library versions,
// and the error types shared by estimator preconditions.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace meandim {

class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  // Uniform-ish in [0, n); modulo bias is irrelevant for test sampling.
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(below(std::uint64_t(hi - lo + 1)));
  }
  double unit() { return double(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

class cap_exceeded : public std::length_error {
 public:
  explicit cap_exceeded(const std::string& what) : std::length_error(what) {}
};

class insufficient_margin : public std::invalid_argument {
 public:
  explicit insufficient_margin(const std::string& what) : std::invalid_argument(what) {}
};

class precondition_failed : public std::invalid_argument {
 public:
  explicit precondition_failed(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace meandim
