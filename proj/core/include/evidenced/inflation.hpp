#ifndef EVIDENCED_INFLATION_HPP
#define EVIDENCED_INFLATION_HPP

#include <functional>
#include <optional>

#include "evidenced/common.hpp"

namespace evd {

using LogDensityFn = std::function<double(const Vector&)>;

// Radius of the plateau of mass k around the origin for a density with
// value g0 there: g0 * V_d(r) = k (in 1-d this is 2 r = k / g0).
double radius_for_mass(double k, double g0, int d);

struct InflationConfig {
  double k = 0.0;
  double r_k = 0.0;
  int d = 1;
  double log_g0 = 0.0;  // log density value at the origin

  static InflationConfig for_mass(double k, double log_g0, int d);
};

// Radial map pushing mass outward so a plateau of radius r fits at the
// origin: theta -> theta * (|theta|^d - r^d)^{1/d} / |theta|, and its
// inverse.  Defined for |theta| > r (shrink) / any theta (expand).
Vector radial_shrink(const Vector& theta, double r);
Vector radial_expand(const Vector& theta, double r);

// log g_Pk(theta): log g(0) on the plateau, log g at the radially shrunk
// point outside.  Total mass of exp of this is c + k.
double inflate_log_density(const LogDensityFn& log_g,
                           const InflationConfig& cfg, const Vector& theta);

struct StandardizationSpec {
  Vector mode;
  Matrix whitening;            // inverse square root of sample covariance
  Matrix unwhitening;          // its inverse
  double log_det_whitening = 0.0;
};

enum class ModePolicy { BestDraw, LocalAscent };

struct Standardized {
  StandardizationSpec spec;
  Matrix draws;        // whitened, mode at the origin
  LogDensityFn log_g;  // adjusted so the total mass is unchanged
};

// Centers on a local mode (the best draw, optionally refined by a short
// axis-aligned ascent) and whitens by the symmetric inverse square root of
// the sample covariance.  log_g_values, when given, must be log_g evaluated
// at the rows of draws and saves T callback evaluations.
Standardized standardize(const Matrix& draws, const LogDensityFn& log_g,
                         std::span<const double> log_g_values = {},
                         ModePolicy policy = ModePolicy::BestDraw);

}  // namespace evd

#endif  // EVIDENCED_INFLATION_HPP
