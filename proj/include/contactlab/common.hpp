#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace contactlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Error taxonomy. ConfigError carries the offending field path so the CLI can
// report it verbatim; SingularSystemError names the operator and its condition
// number at the failure point.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularSystemError : std::runtime_error {
  SingularSystemError(const std::string& op, double cond_, const std::string& detail)
      : std::runtime_error(op + ": singular or ill-conditioned system (cond=" +
                           std::to_string(cond_) + ") " + detail),
        cond(cond_) {}
  double cond;
};

struct IntegrationError : std::runtime_error {
  IntegrationError(const std::string& msg, double t_last_)
      : std::runtime_error(msg + " (last good time t=" + std::to_string(t_last_) + ")"),
        t_last(t_last_) {}
  double t_last;
};

struct UnsupportedError : std::runtime_error {
  explicit UnsupportedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Deterministic RNG. mt19937_64 has a portable stream; the distribution
// helpers below avoid std::uniform_real_distribution, whose output is
// implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64, good enough for seeding and sampling and fully portable
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    // Box-Muller; caches the second variate
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

  int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Halton low-discrepancy sequence, used for deterministic seed placement.
inline double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  std::uint64_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline int halton_base(int dim_index) {
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  return primes[dim_index % 10];
}

// Runs fn(i) for i in [0, n). Results must be written to preallocated slots so
// that output order is independent of scheduling.
inline void parallel_for(int n, const std::function<void(int)>& fn, int threads = 0) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

// Quintic smoothstep: s(0)=0, s(1)=1, first and second derivatives vanish at
// both ends. Shared by time reparametrizations and radial cutoff profiles.
inline double smoothstep5(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

inline double smoothstep5_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

inline double sqr(double x) { return x * x; }

}  // namespace contactlab
