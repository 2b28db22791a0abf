#include "tamed_ergo/noise.hpp"

#include <cmath>
#include <numbers>

#include "tamed_ergo/error.hpp"

namespace tamed {

namespace philox {
namespace {

constexpr std::uint32_t kMultiplierA = 0xD2511F53;
constexpr std::uint32_t kMultiplierB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

inline Counter round(const Counter& c, const Key& k) noexcept {
  const std::uint64_t p0 = std::uint64_t{kMultiplierA} * c[0];
  const std::uint64_t p1 = std::uint64_t{kMultiplierB} * c[2];
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

}  // namespace

Counter philox4x32_10(Counter counter, Key key) noexcept {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kWeylA;
      key[1] += kWeylB;
    }
    counter = round(counter, key);
  }
  return counter;
}

}  // namespace philox

double uniform_open_closed(std::uint64_t bits) noexcept {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

double uniform_closed_open(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

namespace {

constexpr std::uint64_t kPathLimit = std::uint64_t{1} << 63;
constexpr std::uint32_t kSamplingDomainBit = 0x80000000u;

philox::Key key_from(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

inline std::uint64_t join(std::uint32_t hi, std::uint32_t lo) noexcept {
  return (std::uint64_t{hi} << 32) | lo;
}

inline std::array<double, 2> box_muller(const philox::Counter& w) noexcept {
  const double u1 = uniform_open_closed(join(w[0], w[1]));
  const double u2 = uniform_closed_open(join(w[2], w[3]));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(angle), r * std::sin(angle)};
}

inline philox::Counter path_counter(std::uint64_t block, std::uint64_t path) noexcept {
  return {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
          static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
}

}  // namespace

NoiseStream::NoiseStream(MasterSeed master, std::uint64_t path_index)
    : key_(key_from(master.value)), path_(path_index) {
  if (path_index >= kPathLimit) {
    throw InvalidArgument("noise", "path index must be below 2^63");
  }
}

double NoiseStream::lane(std::uint64_t linear_index) {
  const std::uint64_t block = linear_index >> 1;
  if (block != cached_block_) {
    cached_ = box_muller(philox::philox4x32_10(path_counter(block, path_), key_));
    cached_block_ = block;
  }
  return cached_[linear_index & 1];
}

void NoiseStream::gaussian_increments(double dt, std::span<double> out) {
  if (!(dt > 0.0)) {
    throw InvalidArgument("noise", "increment time-step must be positive");
  }
  if (channels_ == 0) {
    if (out.empty()) {
      throw InvalidArgument("noise", "at least one channel is required");
    }
    channels_ = out.size();
  } else if (out.size() != channels_) {
    throw InvalidArgument("noise", "channel count changed within a stream");
  }
  const double scale = std::sqrt(dt);
  const std::uint64_t base = step_ * channels_;
  for (std::size_t k = 0; k < channels_; ++k) {
    out[k] = scale * lane(base + k);
  }
  ++step_;
}

std::vector<double> NoiseStream::gaussian_increments(double dt, std::size_t channels) {
  std::vector<double> out(channels);
  gaussian_increments(dt, out);
  return out;
}

double NoiseStream::standard_normal_at(std::uint64_t step, std::size_t channel,
                                       std::size_t channels) const noexcept {
  const std::uint64_t index = step * channels + channel;
  const auto pair = box_muller(philox::philox4x32_10(path_counter(index >> 1, path_), key_));
  return pair[index & 1];
}

NoiseStream make_stream(MasterSeed master, std::uint64_t path_index) {
  return NoiseStream(master, path_index);
}

std::vector<double> coarse_from_fine(std::span<const double> first,
                                     std::span<const double> second) {
  if (first.size() != second.size()) {
    throw InvalidArgument("noise", "increment vectors differ in length");
  }
  std::vector<double> out(first.begin(), first.end());
  accumulate_increment(out, second);
  return out;
}

void accumulate_increment(std::span<double> acc, std::span<const double> fine) noexcept {
  for (std::size_t k = 0; k < acc.size(); ++k) {
    acc[k] += fine[k];
  }
}

CounterUniform::CounterUniform(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(key_from(seed)), stream_(stream) {}

double CounterUniform::at(std::uint64_t index) const noexcept {
  const philox::Counter c{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          static_cast<std::uint32_t>(stream_),
                          static_cast<std::uint32_t>(stream_ >> 32) | kSamplingDomainBit};
  const auto w = philox::philox4x32_10(c, key_);
  return uniform_closed_open(join(w[0], w[1]));
}

double CounterUniform::normal_at(std::uint64_t index) const noexcept {
  const philox::Counter c{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                          static_cast<std::uint32_t>(stream_),
                          static_cast<std::uint32_t>(stream_ >> 32) | kSamplingDomainBit};
  return box_muller(philox::philox4x32_10(c, key_))[0];
}

}  // namespace tamed
