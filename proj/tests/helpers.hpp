#ifndef EVIDENCED_TESTS_HELPERS_HPP
#define EVIDENCED_TESTS_HELPERS_HPP

// Shared fixtures: synthetic targets with injected constants, a brute-force
// pruning likelihood, and quadrature for the inflated-density mass identity.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "evidenced/common.hpp"
#include "evidenced/inflation.hpp"
#include "evidenced/phylo.hpp"

namespace evd::testing {

struct SyntheticTarget {
  std::string name;
  int d = 1;
  double log_c = 0.0;  // known constant, injected by construction
  LogDensityFn log_g;  // unnormalized: log(c * pdf)
  std::function<Vector(Rng&)> draw;
};

inline SyntheticTarget gaussian_target(int d, double log_c) {
  const double norm = -0.5 * d * std::log(2.0 * M_PI);
  SyntheticTarget t;
  t.name = "gaussian-" + std::to_string(d) + "d";
  t.d = d;
  t.log_c = log_c;
  t.log_g = [d, norm, log_c](const Vector& x) {
    return log_c + norm - 0.5 * x.squaredNorm();
  };
  t.draw = [d](Rng& rng) {
    Vector x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.normal();
    return x;
  };
  return t;
}

// Two equal-weight unit-variance components at +-offset along the first
// coordinate.
inline SyntheticTarget mixture_target(int d, double log_c,
                                      double offset = 1.5) {
  const double norm = -0.5 * d * std::log(2.0 * M_PI);
  SyntheticTarget t;
  t.name = "mixture-" + std::to_string(d) + "d";
  t.d = d;
  t.log_c = log_c;
  t.log_g = [d, norm, log_c, offset](const Vector& x) {
    Vector a = x, b = x;
    a[0] -= offset;
    b[0] += offset;
    const double la = -0.5 * a.squaredNorm();
    const double lb = -0.5 * b.squaredNorm();
    const double m = std::max(la, lb);
    return log_c + norm + m +
           std::log(0.5 * std::exp(la - m) + 0.5 * std::exp(lb - m));
  };
  t.draw = [d, offset](Rng& rng) {
    Vector x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.normal();
    x[0] += rng.uniform() < 0.5 ? offset : -offset;
    return x;
  };
  return t;
}

// Every-node state enumeration; exponential in tree size, usable up to a
// handful of nodes.
inline double brute_force_log_likelihood(const Alignment& alignment,
                                         const Topology& topology,
                                         const BranchLengths& lengths,
                                         const SubstitutionModel& model) {
  const RateMatrix rate = build_q(model);
  const std::vector<double> rates = category_rates(model);
  const std::size_t n_nodes = topology.nodes.size();

  std::vector<int> leaf_row(n_nodes, -1);
  for (std::size_t v = 0; v < n_nodes; ++v) {
    if (!topology.nodes[v].is_leaf()) continue;
    for (std::size_t r = 0; r < alignment.names.size(); ++r)
      if (alignment.names[r] == topology.nodes[v].name)
        leaf_row[v] = static_cast<int>(r);
  }

  double total = 0.0;
  for (std::size_t site = 0; site < alignment.n_sites(); ++site) {
    double site_lik = 0.0;
    for (double cat_rate : rates) {
      std::vector<Eigen::Matrix4d> p(n_nodes);
      for (std::size_t v = 0; v < n_nodes; ++v)
        if (static_cast<int>(v) != topology.root)
          p[v] = transition_matrix(
              rate, cat_rate * topology.edge_length(static_cast<int>(v),
                                                    lengths));
      std::vector<int> state(n_nodes, 0);
      double cat_lik = 0.0;
      while (true) {
        bool compatible = true;
        for (std::size_t v = 0; v < n_nodes && compatible; ++v) {
          if (leaf_row[v] < 0) continue;
          const std::uint8_t obs = alignment.sequences[leaf_row[v]][site];
          if (obs != kMissing && obs != state[v]) compatible = false;
        }
        if (compatible) {
          double prob = rate.pi[state[topology.root]];
          for (std::size_t v = 0; v < n_nodes; ++v)
            if (static_cast<int>(v) != topology.root)
              prob *= p[v](state[topology.nodes[v].parent], state[v]);
          cat_lik += prob;
        }
        std::size_t carry = 0;
        while (carry < n_nodes && ++state[carry] == 4) state[carry++] = 0;
        if (carry == n_nodes) break;
      }
      site_lik += cat_lik / double(rates.size());
    }
    total += std::log(site_lik);
  }
  return total;
}

// Composite Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n_intervals) {
  if (n_intervals % 2) ++n_intervals;
  const double h = (b - a) / n_intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < n_intervals; ++i)
    acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Total mass of the inflated density in 1-d, split at the plateau kinks.
inline double inflated_mass_1d(const LogDensityFn& log_g,
                               const InflationConfig& cfg, double extent) {
  auto f = [&](double x) {
    Vector v(1);
    v[0] = x;
    return std::exp(inflate_log_density(log_g, cfg, v));
  };
  const double r = cfg.r_k;
  return simpson(f, -extent, -r, 4000) + simpson(f, -r, r, 400) +
         simpson(f, r, extent, 4000);
}

// Polar quadrature in 2-d: periodic trapezoid in the angle, radial Simpson
// split at the plateau radius.
inline double inflated_mass_2d(const LogDensityFn& log_g,
                               const InflationConfig& cfg, double extent,
                               int n_angles = 256) {
  double total = 0.0;
  for (int a = 0; a < n_angles; ++a) {
    const double phi = 2.0 * M_PI * a / n_angles;
    const double cx = std::cos(phi), cy = std::sin(phi);
    auto f = [&](double r) {
      Vector v(2);
      v[0] = r * cx;
      v[1] = r * cy;
      return r * std::exp(inflate_log_density(log_g, cfg, v));
    };
    total += simpson(f, 0.0, cfg.r_k, 200) +
             simpson(f, cfg.r_k, extent, 2000);
  }
  return total * 2.0 * M_PI / n_angles;
}

}  // namespace evd::testing

#endif  // EVIDENCED_TESTS_HELPERS_HPP
