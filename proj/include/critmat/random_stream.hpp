#pragma once

#include <cstdint>
#include <random>

namespace critmat {

/// Purpose tags keep the streams used for different stages of one experiment
/// apart even when they share (seed, index).
enum class StreamTag : std::uint64_t {
  main = 0,
  paired_prepass = 1,
  bernoulli_prepass = 2,
  calibration = 3,
  hypotheses = 4,
  verification = 5,
};

/// Random stream keyed by (seed, index, tag). Independent trajectories use
/// distinct indices, so results never depend on how work is split across
/// threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t index, StreamTag tag = StreamTag::main);

  std::mt19937_64& engine() noexcept { return engine_; }
  double uniform() { return unit_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace critmat
