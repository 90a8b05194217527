#include "critmat/random_stream.hpp"

namespace critmat {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
  const auto t = static_cast<std::uint64_t>(tag);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(t), 0x6372u};
  return std::mt19937_64(seq);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t index, StreamTag tag)
    : engine_(make_engine(seed, index, tag)) {}

}  // namespace critmat
