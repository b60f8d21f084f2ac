#include "pnreg/rng.hpp"

#include <cmath>
#include <numbers>

namespace pnreg {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t draw(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
  return mix64(mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL)) ^ k);
}

double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Box-Muller on two uniforms; u1 is shifted into (0, 1].
void box_muller(double u1, double u2, double& z0, double& z1) {
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  double th = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(th);
  z1 = r * std::sin(th);
}

}  // namespace

std::uint64_t SeededRng::next_u64() { return draw(seed_, stream_, counter_++); }

double SeededRng::uniform() { return to_unit(next_u64()); }

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double z0, z1;
  box_muller(u1, u2, z0, z1);
  spare_ = z1;
  has_spare_ = true;
  return z0;
}

double SeededRng::uniform_at(std::uint64_t index) const {
  return to_unit(draw(seed_, stream_ ^ 0x5bd1e995ULL, index));
}

double SeededRng::normal_at(std::uint64_t index) const {
  double u1 = to_unit(draw(seed_, stream_ ^ 0x27d4eb2dULL, 2 * index));
  double u2 = to_unit(draw(seed_, stream_ ^ 0x27d4eb2dULL, 2 * index + 1));
  double z0, z1;
  box_muller(u1, u2, z0, z1);
  return z0;
}

SeededRng SeededRng::split() {
  std::uint64_t child = next_u64();
  return SeededRng(seed_, mix64(stream_ ^ child));
}

}  // namespace pnreg
