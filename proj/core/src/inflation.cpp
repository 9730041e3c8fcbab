#include "evidenced/inflation.hpp"

#include <cmath>
#include <string>

namespace evd {

double radius_for_mass(double k, double g0, int d) {
  if (!(k > 0.0)) throw InvalidInput("radius_for_mass: k must be positive");
  if (!(g0 > 0.0)) throw InvalidInput("radius_for_mass: g0 must be positive");
  return std::exp((std::log(k) - std::log(g0) - log_unit_ball_volume(d)) / d);
}

InflationConfig InflationConfig::for_mass(double k, double log_g0, int d) {
  if (!(k > 0.0)) throw InvalidInput("InflationConfig: k must be positive");
  if (!std::isfinite(log_g0))
    throw InvalidInput("InflationConfig: log g(0) must be finite");
  InflationConfig cfg;
  cfg.k = k;
  cfg.d = d;
  cfg.log_g0 = log_g0;
  // log-space form of radius_for_mass, safe for extreme g0.
  cfg.r_k = std::exp((std::log(k) - log_g0 - log_unit_ball_volume(d)) / d);
  return cfg;
}

Vector radial_shrink(const Vector& theta, double r) {
  const double s = theta.norm();
  if (!(s > r)) throw InvalidInput("radial_shrink: |theta| must exceed r");
  const int d = static_cast<int>(theta.size());
  // (s^d - r^d)^{1/d} / s = exp(log1p(-(r/s)^d) / d), overflow-free.
  const double scale = std::exp(std::log1p(-std::exp(d * std::log(r / s))) / d);
  return theta * scale;
}

Vector radial_expand(const Vector& theta, double r) {
  const double s = theta.norm();
  const int d = static_cast<int>(theta.size());
  if (s == 0.0) {
    Vector out = Vector::Zero(d);
    out[0] = r;
    return out;  // boundary point; the map is radial so any direction works
  }
  // (s^d + r^d)^{1/d} / s = exp(log1p((r/s)^d) / d) for r <= s; swap roles
  // otherwise to keep the exp argument small.
  double scale;
  if (r <= s) {
    scale = std::exp(std::log1p(std::exp(d * std::log(r / s))) / d);
  } else {
    scale = (r / s) * std::exp(std::log1p(std::exp(d * std::log(s / r))) / d);
  }
  return theta * scale;
}

double inflate_log_density(const LogDensityFn& log_g,
                           const InflationConfig& cfg, const Vector& theta) {
  if (static_cast<int>(theta.size()) != cfg.d)
    throw InvalidInput("inflate_log_density: dimension mismatch");
  const double s = theta.norm();
  if (s <= cfg.r_k) return cfg.log_g0;
  return log_g(radial_shrink(theta, cfg.r_k));
}

Standardized standardize(const Matrix& draws, const LogDensityFn& log_g,
                         std::span<const double> log_g_values,
                         ModePolicy policy) {
  const auto n = draws.rows();
  const auto d = draws.cols();
  if (n < 2) throw InvalidInput("standardize: need at least 2 draws");

  // Mode surrogate: the best sampled point.
  Eigen::Index best = 0;
  if (!log_g_values.empty()) {
    if (static_cast<Eigen::Index>(log_g_values.size()) != n)
      throw InvalidInput("standardize: log_g_values length mismatch");
    double best_value = log_g_values[0];
    for (Eigen::Index i = 1; i < n; ++i) {
      if (log_g_values[i] > best_value) {
        best_value = log_g_values[i];
        best = i;
      }
    }
  } else {
    double best_value = log_g(draws.row(0).transpose());
    for (Eigen::Index i = 1; i < n; ++i) {
      const double v = log_g(draws.row(i).transpose());
      if (v > best_value) {
        best_value = v;
        best = i;
      }
    }
  }
  Vector mode = draws.row(best).transpose();

  Vector col_mean = draws.colwise().mean();
  Matrix centered = draws.rowwise() - col_mean.transpose();
  Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);

  if (policy == ModePolicy::LocalAscent) {
    // Short axis-aligned ascent from the best draw, stepping in units of
    // the per-coordinate sample standard deviation.
    double current = log_g(mode);
    for (double step = 1.0; step > 1e-3; step *= 0.5) {
      bool improved = true;
      int sweeps = 0;
      while (improved && sweeps++ < 20) {
        improved = false;
        for (Eigen::Index j = 0; j < d; ++j) {
          const double sd = std::sqrt(std::max(cov(j, j), 0.0));
          if (!(sd > 0.0)) continue;
          for (double dir : {1.0, -1.0}) {
            Vector cand = mode;
            cand[j] += dir * step * sd;
            const double v = log_g(cand);
            if (v > current) {
              current = v;
              mode = cand;
              improved = true;
            }
          }
        }
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("standardize: covariance eigendecomposition failed");
  const Vector& evals = solver.eigenvalues();
  const double max_eval = evals.maxCoeff();
  std::string collapsed;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (evals[i] <= 1e-12 * max_eval) {
      if (!collapsed.empty()) collapsed += ", ";
      collapsed += std::to_string(i);
    }
  }
  if (!collapsed.empty())
    throw NumericError(
        "standardize: sample covariance is singular along eigen-directions " +
        collapsed);

  Standardized out;
  out.spec.mode = mode;
  Vector inv_sqrt = evals.cwiseSqrt().cwiseInverse();
  Vector sqrt_evals = evals.cwiseSqrt();
  out.spec.whitening = solver.eigenvectors() * inv_sqrt.asDiagonal() *
                       solver.eigenvectors().transpose();
  out.spec.unwhitening = solver.eigenvectors() * sqrt_evals.asDiagonal() *
                         solver.eigenvectors().transpose();
  out.spec.log_det_whitening = -0.5 * evals.array().log().sum();

  out.draws = (draws.rowwise() - mode.transpose()) *
              out.spec.whitening.transpose();
  const StandardizationSpec spec = out.spec;
  // Density of z = W (theta - mode): g(mode + W^{-1} z) |det W^{-1}|, so the
  // total mass is unchanged.
  out.log_g = [spec, log_g](const Vector& z) {
    return log_g(spec.mode + spec.unwhitening * z) - spec.log_det_whitening;
  };
  return out;
}

}  // namespace evd
