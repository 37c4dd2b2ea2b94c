#pragma once

#include <cstdint>
#include <random>

namespace raincop {

// Purpose tags keep substreams for different consumers disjoint even when
// their (day, replicate) coordinates coincide.
enum class StreamTag : std::uint64_t {
  kLatent = 1,
  kScoreLatent = 2,
  kDaySubsample = 3,
  kLocationSubsample = 4,
  kRankTies = 5,
  kSynthLocations = 6,
  kSynthDays = 7,
  kSynthFeatures = 8,
  kMarginalSample = 9,
  kForecast = 10,
  kTest = 99,
};

/// Identifies one substream: the master seed plus purpose and two counters.
struct StreamId {
  std::uint64_t seed = 0;
  StreamTag tag = StreamTag::kLatent;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
};

/// Deterministic random stream derived from a StreamId.
///
/// The 64-bit engine is seeded from a SplitMix64 hash of the id, so a
/// substream depends only on its coordinates and never on the order in
/// which substreams are created. Uniforms are built from the top 53 bits and
/// normals by inversion, so sequences are identical on every platform.
class Stream {
 public:
  explicit Stream(const StreamId& id);
  Stream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
         std::uint64_t b = 0)
      : Stream(StreamId{seed, tag, a, b}) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal by inversion of a uniform.
  double normal();
  /// Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  const StreamId& id() const { return id_; }

 private:
  StreamId id_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace raincop
