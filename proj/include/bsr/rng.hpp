#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <vector>

namespace bsr {

// Substreams are keyed by role so that adding or removing one consumer
// (say, an agent variant that draws extra proposals) cannot perturb the
// draw sequence seen by any other consumer. A run is reproducible from
// (seed, config) alone.
enum class StreamRole : std::uint64_t {
  Init = 1,
  Action = 2,
  EnvNoise = 3,
  Proposal = 4,
  Resample = 5,
  Replay = 6,
  Schedule = 7,
  AgentEvents = 8,
  Dropout = 9,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

// mt19937_64 with hand-coded variate transforms; the standard pins the
// engine output but not the distribution adaptors, and artifacts must be
// byte-identical across toolchains.
class Rng {
 public:
  Rng() : Rng(0, StreamRole::Init) {}
  Rng(std::uint64_t seed, StreamRole role) {
    std::uint64_t s = seed ^ (0xA0761D6478BD642Full * static_cast<std::uint64_t>(role));
    engine_.seed(detail::splitmix64(s));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform01_open() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  // Uniform over {0, ..., n-1}.
  int below(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; the second variate is discarded so the
  // stream position does not depend on call history.
  double normal() {
    double u1 = uniform01_open();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Index draw from nonnegative weights (need not be normalized).
  int categorical(const double* w, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i];
    double u = uniform01() * total;
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
      cum += w[i];
      if (u < cum) return i;
    }
    return n - 1;
  }
  int categorical(const std::vector<double>& w) {
    return categorical(w.data(), static_cast<int>(w.size()));
  }

 private:
  std::mt19937_64 engine_;
};

// One bundle per run: every module role gets its own stream.
struct RngStreams {
  std::uint64_t seed;
  Rng init, action, env, proposal, resample, replay, schedule, agent_events, dropout;

  explicit RngStreams(std::uint64_t s)
      : seed(s),
        init(s, StreamRole::Init),
        action(s, StreamRole::Action),
        env(s, StreamRole::EnvNoise),
        proposal(s, StreamRole::Proposal),
        resample(s, StreamRole::Resample),
        replay(s, StreamRole::Replay),
        schedule(s, StreamRole::Schedule),
        agent_events(s, StreamRole::AgentEvents),
        dropout(s, StreamRole::Dropout) {}
};

}  // namespace bsr
