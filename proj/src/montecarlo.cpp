#include "tamed_ergo/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "tamed_ergo/error.hpp"

namespace tamed {

// Observable ---------------------------------------------------------------

namespace {

double int_power(double base, unsigned exponent) noexcept {
  double result = 1.0;
  while (exponent > 0) {
    if (exponent & 1u) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("montecarlo", "cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

unsigned long parse_unsigned(std::string_view s) {
  unsigned long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("montecarlo", "cannot parse integer '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Observable Observable::moment(unsigned order) {
  Observable o;
  o.kind = Kind::moment;
  o.order = order;
  o.description = "E|x|^" + std::to_string(order);
  return o;
}

Observable Observable::coordinate_moment(std::size_t index, unsigned order) {
  Observable o;
  o.kind = Kind::coordinate_moment;
  o.index = index;
  o.order = order;
  o.description = "E[x_" + std::to_string(index) + "^" + std::to_string(order) + "]";
  return o;
}

Observable Observable::polynomial(std::vector<double> coefficients) {
  if (coefficients.empty()) {
    throw InvalidArgument("montecarlo", "polynomial observable needs coefficients");
  }
  Observable o;
  o.kind = Kind::custom_polynomial;
  o.coefficients = std::move(coefficients);
  std::string d = "E[";
  for (std::size_t j = 0; j < o.coefficients.size(); ++j) {
    d += (j ? " + " : "") + format_double(o.coefficients[j]) + "*x_0^" + std::to_string(j);
  }
  o.description = d + "]";
  return o;
}

double Observable::operator()(std::span<const double> x) const noexcept {
  switch (kind) {
    case Kind::moment:
      if (order % 2 == 0) return int_power(dot(x, x), order / 2);
      return int_power(norm(x), order);
    case Kind::coordinate_moment:
      return int_power(x[index], order);
    case Kind::custom_polynomial: {
      double acc = 0.0;
      for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) {
        acc = acc * x[0] + *it;
      }
      return acc;
    }
  }
  return 0.0;
}

bool Observable::operator==(const Observable& other) const {
  return kind == other.kind && order == other.order && index == other.index &&
         coefficients == other.coefficients;
}

Observable parse_observable(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (head == "moment" && !rest.empty()) {
    return Observable::moment(static_cast<unsigned>(parse_unsigned(rest)));
  }
  if (head == "coordinate") {
    const auto c2 = rest.find(':');
    if (c2 != std::string_view::npos) {
      return Observable::coordinate_moment(parse_unsigned(rest.substr(0, c2)),
                                           static_cast<unsigned>(parse_unsigned(rest.substr(c2 + 1))));
    }
  }
  if (head == "polynomial" && !rest.empty()) {
    std::vector<double> coeffs;
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = rest.find(',', start);
      coeffs.push_back(parse_double(rest.substr(start, comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return Observable::polynomial(std::move(coeffs));
  }
  throw InvalidArgument("montecarlo", "unknown observable '" + std::string(text) + "'");
}

std::string to_string(const Observable& obs) {
  switch (obs.kind) {
    case Observable::Kind::moment:
      return "moment:" + std::to_string(obs.order);
    case Observable::Kind::coordinate_moment:
      return "coordinate:" + std::to_string(obs.index) + ":" + std::to_string(obs.order);
    case Observable::Kind::custom_polynomial: {
      std::string s = "polynomial:";
      for (std::size_t j = 0; j < obs.coefficients.size(); ++j) {
        s += (j ? "," : "") + format_double(obs.coefficients[j]);
      }
      return s;
    }
  }
  return {};
}

// Aggregation ----------------------------------------------------------------

namespace {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

Estimate summarize(std::span<const double> values, std::span<const std::uint8_t> excluded) {
  const bool has_mask = !excluded.empty();
  Estimate e;
  CompensatedSum sum;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (has_mask && excluded[i]) {
      ++e.n_exploded;
      continue;
    }
    sum.add(values[i]);
    ++e.n_samples;
  }
  if (e.n_samples == 0) {
    return e;
  }
  e.mean = sum.value() / static_cast<double>(e.n_samples);
  if (e.n_samples > 1) {
    CompensatedSum sq;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (has_mask && excluded[i]) continue;
      const double dv = values[i] - e.mean;
      sq.add(dv * dv);
    }
    e.variance = sq.value() / static_cast<double>(e.n_samples - 1);
  }
  e.std_error = std::sqrt(e.variance / static_cast<double>(e.n_samples));
  e.ci95_halfwidth = 1.96 * e.std_error;
  return e;
}

unsigned default_workers() {
  if (const char* env = std::getenv("TAMED_ERGO_WORKERS")) {
    unsigned v = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) {
      return v;
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void for_each_path(std::uint64_t n_paths, unsigned workers,
                   const std::function<void(std::uint64_t)>& body) {
  if (workers == 0) workers = default_workers();
  if (workers == 1 || n_paths < 2) {
    for (std::uint64_t i = 0; i < n_paths; ++i) body(i);
    return;
  }
  constexpr std::uint64_t kChunk = 256;
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    try {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::uint64_t begin = next.fetch_add(kChunk);
        if (begin >= n_paths) break;
        const std::uint64_t end = std::min(n_paths, begin + kChunk);
        for (std::uint64_t i = begin; i < end; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
      failed = true;
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (first_error) std::rethrow_exception(first_error);
}

Estimate PathSamples::column(std::size_t c) const {
  std::vector<double> col(n_paths);
  for (std::uint64_t p = 0; p < n_paths; ++p) col[p] = at(p, c);
  Estimate e = summarize(col, exploded);
  if (e.n_samples == 0) {
    throw AllPathsExploded("montecarlo", "all " + std::to_string(n_paths) + " paths exploded");
  }
  return e;
}

Estimate PathSamples::column_average(std::span<const std::size_t> columns) const {
  if (columns.empty()) {
    throw InvalidArgument("montecarlo", "column average needs at least one column");
  }
  std::vector<double> avg(n_paths);
  for (std::uint64_t p = 0; p < n_paths; ++p) {
    double s = 0.0;
    for (auto c : columns) s += at(p, c);
    avg[p] = s / static_cast<double>(columns.size());
  }
  Estimate e = summarize(avg, exploded);
  if (e.n_samples == 0) {
    throw AllPathsExploded("montecarlo", "all " + std::to_string(n_paths) + " paths exploded");
  }
  return e;
}

Estimate PathSamples::difference(std::size_t a, std::size_t b) const {
  std::vector<double> diff(n_paths);
  for (std::uint64_t p = 0; p < n_paths; ++p) diff[p] = at(p, a) - at(p, b);
  Estimate e = summarize(diff, exploded);
  if (e.n_samples == 0) {
    throw AllPathsExploded("montecarlo", "all " + std::to_string(n_paths) + " paths exploded");
  }
  return e;
}

// Estimators -----------------------------------------------------------------

namespace {

void check_paths(std::uint64_t n_paths) {
  if (n_paths < 2) {
    throw InvalidArgument("montecarlo", "at least two paths are required");
  }
}

}  // namespace

PathSamples sample_at_checkpoints(const Problem& problem, const SchemeParams& params, StepKind kind,
                                  std::span<const double> x0, const Observable& obs,
                                  std::span<const std::uint64_t> checkpoints, std::uint64_t n_paths,
                                  MasterSeed master, const EngineOptions& options) {
  check_paths(n_paths);
  params.validate();
  if (checkpoints.empty()) {
    throw InvalidArgument("montecarlo", "at least one checkpoint is required");
  }
  if (obs.kind == Observable::Kind::coordinate_moment && obs.index >= problem.dim()) {
    throw InvalidArgument("montecarlo", "observable coordinate out of range");
  }
  // Distinct sorted checkpoints for the driver; columns keep the caller's order.
  std::vector<std::uint64_t> sorted(checkpoints.begin(), checkpoints.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> slot(checkpoints.size());
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    slot[c] = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), checkpoints[c]) - sorted.begin());
  }
  PathOptions path_options;
  path_options.checkpoints = sorted;
  path_options.zero_noise = options.zero_noise;
  path_options.noise_refinement = options.noise_refinement;
  // Only simulate as far as the last checkpoint.
  SchemeParams run = params;
  run.n_steps = sorted.back();

  PathSamples out;
  out.n_paths = n_paths;
  out.n_columns = checkpoints.size();
  out.values.assign(n_paths * out.n_columns, 0.0);
  out.exploded.assign(n_paths, 0);

  const std::vector<double> start(x0.begin(), x0.end());
  for_each_path(n_paths, options.workers, [&](std::uint64_t p) {
    NoiseStream stream(master, p);
    const PathResult path = simulate_path(problem, run, kind, start, stream, path_options);
    if (path.exploded_at) {
      out.exploded[p] = 1;
      return;
    }
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      out.values[p * out.n_columns + c] = obs(path.recorded_states[slot[c]].second);
    }
  });
  return out;
}

Estimate estimate_observable(const Problem& problem, const SchemeParams& params, StepKind kind,
                             std::span<const double> x0, const Observable& obs,
                             std::uint64_t n_paths, MasterSeed master,
                             const EngineOptions& options) {
  const std::uint64_t last = params.n_steps;
  return sample_at_checkpoints(problem, params, kind, x0, obs, std::span(&last, 1), n_paths,
                               master, options)
      .column(0);
}

std::vector<std::uint64_t> times_to_steps(std::span<const double> times, double dt,
                                          std::uint64_t n_steps) {
  std::vector<std::uint64_t> steps;
  steps.reserve(times.size());
  for (double t : times) {
    const double ratio = t / dt;
    const double rounded = std::round(ratio);
    if (!(t >= 0.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "time " << t << " is not a nonnegative multiple of dt = " << dt;
      throw InvalidArgument("montecarlo", msg.str());
    }
    const auto s = static_cast<std::uint64_t>(rounded);
    if (s > n_steps) {
      throw InvalidArgument("montecarlo", "time beyond the simulated horizon");
    }
    steps.push_back(s);
  }
  return steps;
}

std::vector<TimedEstimate> estimate_moments_at_times(const Problem& problem,
                                                     const SchemeParams& params,
                                                     std::span<const double> x0, unsigned order,
                                                     std::span<const double> times,
                                                     std::uint64_t n_paths, MasterSeed master,
                                                     const EngineOptions& options) {
  if (order == 0 || order % 2 != 0) {
    throw InvalidArgument("montecarlo", "moment order must be a positive even integer");
  }
  const auto steps = times_to_steps(times, params.dt, params.n_steps);
  const PathSamples samples = sample_at_checkpoints(problem, params, StepKind::tamed, x0,
                                                    Observable::moment(order), steps, n_paths,
                                                    master, options);
  std::vector<TimedEstimate> out;
  out.reserve(times.size());
  for (std::size_t c = 0; c < times.size(); ++c) {
    out.push_back(TimedEstimate{times[c], steps[c], samples.column(c)});
  }
  return out;
}

PathSamples sample_coupled_levels(const Problem& problem, double base_dt,
                                  std::uint64_t n_base_steps, double alpha, StepKind kind,
                                  std::span<const double> x0, const Observable& obs,
                                  std::span<const std::uint64_t> refinements,
                                  std::uint64_t n_paths, MasterSeed master,
                                  const EngineOptions& options) {
  check_paths(n_paths);
  if (refinements.empty()) {
    throw InvalidArgument("montecarlo", "at least one level is required");
  }
  PathSamples out;
  out.n_paths = n_paths;
  out.n_columns = refinements.size();
  out.values.assign(n_paths * out.n_columns, 0.0);
  out.exploded.assign(n_paths, 0);
  const std::vector<double> start(x0.begin(), x0.end());
  const std::vector<std::uint64_t> levels(refinements.begin(), refinements.end());
  for_each_path(n_paths, options.workers, [&](std::uint64_t p) {
    NoiseStream stream(master, p);
    const auto finals = simulate_coupled_levels(problem, base_dt, n_base_steps, alpha, kind, start,
                                                levels, stream, options.zero_noise);
    for (std::size_t l = 0; l < finals.size(); ++l) {
      if (finals[l].exploded) {
        out.exploded[p] = 1;
        return;
      }
      out.values[p * out.n_columns + l] = obs(finals[l].state);
    }
  });
  return out;
}

}  // namespace tamed
