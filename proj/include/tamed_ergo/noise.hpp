#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tamed {

struct MasterSeed {
  std::uint64_t value = 0;
};

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Counter philox4x32_10(Counter counter, Key key) noexcept;

}  // namespace philox

/// 53-bit uniform in (0, 1].
double uniform_open_closed(std::uint64_t bits) noexcept;
/// 53-bit uniform in [0, 1).
double uniform_closed_open(std::uint64_t bits) noexcept;

/// Reproducible Gaussian increments for one path.
///
/// The increment for (path, step, channel) is a pure function of the master
/// seed and that triple: with K channels the linear index step * K + channel
/// selects a Philox block (index / 2) and a lane (index % 2). Each block is
/// turned into two standard normals by Box-Muller:
///   u1 = top 53 bits of (w0:w1) in (0, 1], u2 = top 53 bits of (w2:w3) in [0, 1),
///   z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
/// The counter is (block lo, block hi, path lo, path hi) and the key is the
/// 64-bit seed, so path work can be split across workers arbitrarily.
///
/// Single owner: a stream must not be shared between threads.
class NoiseStream {
 public:
  /// Path indices must be below 2^63 (the top bit is reserved for sampling).
  NoiseStream(MasterSeed master, std::uint64_t path_index);

  std::uint64_t path_index() const noexcept { return path_; }
  std::uint64_t step_index() const noexcept { return step_; }
  std::size_t channels() const noexcept { return channels_; }

  /// Fills `out` with K = out.size() independent N(0, dt) draws and advances
  /// the cursor by one step. K is fixed by the first draw.
  void gaussian_increments(double dt, std::span<double> out);
  std::vector<double> gaussian_increments(double dt, std::size_t channels);

  /// Skips `steps` steps without drawing.
  void advance(std::uint64_t steps) noexcept { step_ += steps; }

  /// Standard normal at an arbitrary (step, channel) for K channels; pure.
  double standard_normal_at(std::uint64_t step, std::size_t channel,
                            std::size_t channels) const noexcept;

 private:
  double lane(std::uint64_t linear_index);

  philox::Key key_;
  std::uint64_t path_;
  std::uint64_t step_ = 0;
  std::size_t channels_ = 0;
  std::uint64_t cached_block_ = ~std::uint64_t{0};
  std::array<double, 2> cached_{};
};

NoiseStream make_stream(MasterSeed master, std::uint64_t path_index);

/// Brownian increment of a step of size dt from its two half steps.
std::vector<double> coarse_from_fine(std::span<const double> first,
                                     std::span<const double> second);

/// In-place form: acc += fine.
void accumulate_increment(std::span<double> acc, std::span<const double> fine) noexcept;

/// Counter-based uniform source on a domain disjoint from path noise; used by
/// sampling-based diagnostics.
class CounterUniform {
 public:
  CounterUniform(std::uint64_t seed, std::uint64_t stream) noexcept;
  /// Uniform in [0, 1) for draw number `index`.
  double at(std::uint64_t index) const noexcept;
  /// Standard normal for draw number `index` (Box-Muller on one block).
  double normal_at(std::uint64_t index) const noexcept;

 private:
  philox::Key key_;
  std::uint64_t stream_;
};

}  // namespace tamed
