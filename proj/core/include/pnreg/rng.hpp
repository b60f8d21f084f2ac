#pragma once

#include <cstdint>

namespace pnreg {

// Counter-based generator: draw k of stream s is a pure function of
// (seed, s, k), so results do not depend on platform or draw order.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  double normal();

  // Stateless draws keyed by index; used for per-row decisions.
  double uniform_at(std::uint64_t index) const;
  double normal_at(std::uint64_t index) const;

  // Independent child stream; the parent counter is advanced.
  SeededRng split();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace pnreg
