#include "raincop/rng.hpp"

#include "raincop/numerics.hpp"

namespace raincop {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::uint64_t hash_id(const StreamId& id) {
  std::uint64_t h = splitmix64(id.seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(id.tag));
  h = splitmix64(h ^ id.a);
  h = splitmix64(h ^ id.b);
  return h;
}

}  // namespace

Stream::Stream(const StreamId& id) : id_(id), engine_(hash_id(id)) {}

double Stream::uniform() {
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Stream::normal() { return numerics::std_normal_quantile(uniform()); }

std::uint64_t Stream::below(std::uint64_t n) {
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

}  // namespace raincop
