#ifndef EVIDENCED_COMMON_HPP
#define EVIDENCED_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace evd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Thrown when a precondition on caller-supplied data is violated.
class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an estimator is mathematically undefined for the given
// sample (e.g. the IDR denominator is nonpositive).
class EstimatorUndefined : public std::runtime_error {
 public:
  explicit EstimatorUndefined(const std::string& what)
      : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::size_t byte_offset;
};

// Deterministic RNG.  The mt19937_64 engine is fully specified by the
// standard; uniforms/normals are derived by hand because the std
// distributions are implementation-defined.  Tests that pin bit-exact
// streams rely on this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached so two calls consume exactly one pair of uniforms.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  // Index in [0, n) by cumulative-probability inversion of one uniform.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  // Deterministic substream for parallel work (splitmix64 of seed, stream).
  Rng spawn(std::uint64_t stream) const {
    std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return Rng(z ^ (z >> 31));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// log(sum(exp(v))) computed by subtracting the max.
double log_sum_exp(std::span<const double> values);
inline double log_mean_exp(std::span<const double> values) {
  return log_sum_exp(values) - std::log(static_cast<double>(values.size()));
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased (n-1 denominator)
};
MeanVar mean_var(std::span<const double> values);

double sample_sd(std::span<const double> values);

// log of the volume of the unit d-ball.
double log_unit_ball_volume(int d);

}  // namespace evd

#endif  // EVIDENCED_COMMON_HPP
