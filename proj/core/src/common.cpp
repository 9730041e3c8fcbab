#include "evidenced/common.hpp"

#include <algorithm>
#include <limits>

namespace evd {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("log_sum_exp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

MeanVar mean_var(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) throw InvalidInput("mean_var: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  MeanVar out;
  out.mean = mean;
  out.var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return out;
}

double sample_sd(std::span<const double> values) {
  return std::sqrt(mean_var(values).var);
}

double log_unit_ball_volume(int d) {
  if (d < 1) throw InvalidInput("log_unit_ball_volume: d must be >= 1");
  return 0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d + 1.0);
}

}  // namespace evd
