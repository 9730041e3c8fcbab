#ifndef EVIDENCED_MCMC_HPP
#define EVIDENCED_MCMC_HPP

#include <string>
#include <vector>

#include "evidenced/estimators.hpp"
#include "evidenced/phylo.hpp"
#include "evidenced/transforms.hpp"

namespace evd {

// Priors for the fixed-topology phylogenetic posterior: iid Exponential
// branch lengths, flat Dirichlet on pi and rho, Exponential gamma shape.
struct PriorSpec {
  double lambda_branch = 10.0;
  double lambda_alpha = 1.0;

  double log_density(const PhyloParams& params, ModelKind kind) const;
};

// Everything needed to evaluate the unnormalized transformed posterior at
// an unconstrained point.
class PhyloPosterior {
 public:
  PhyloPosterior(Alignment alignment, Topology topology, ModelKind kind,
                 PriorSpec priors, int n_categories = 4);

  struct Eval {
    double log_post = 0.0;  // log prior + log lik + log Jacobian
    double log_lik = 0.0;
    double log_prior = 0.0;
    double log_jacobian = 0.0;
  };
  Eval evaluate(const Vector& unconstrained) const;

  const Packing& packing() const { return packing_; }
  const Topology& topology() const { return topology_; }
  const Alignment& alignment() const { return alignment_; }
  ModelKind kind() const { return kind_; }
  const PriorSpec& priors() const { return priors_; }
  int n_categories() const { return n_categories_; }

  // Prior means, packed; a reasonable deterministic chain start.
  Vector initial_point() const;

 private:
  Alignment alignment_;
  Topology topology_;
  ModelKind kind_;
  PriorSpec priors_;
  int n_categories_;
  Packing packing_;
};

struct Chain {
  Matrix draws;     // T x d, unconstrained
  Vector log_post;  // unnormalized transformed target, per draw
  Vector log_lik;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thin = 1;
  std::vector<std::string> column_names;
  ModelKind kind = ModelKind::JC69;
  PriorSpec priors;
  int n_categories = 1;
  std::string topology_newick;
};

struct ChainSettings {
  int n_draws = 1000;  // recorded draws
  int burn_in = 1000;  // sweeps discarded before recording
  int thin = 5;        // sweeps per recorded draw
  double initial_proposal_scale = 0.5;
  double target_acceptance = 0.3;
};

// Componentwise Gaussian random-walk Metropolis-Hastings on the
// unconstrained parameterization.  Per-coordinate proposal scales follow
// Robbins-Monro updates during burn-in and are frozen afterwards.
Chain run_chain(const PhyloPosterior& posterior, const ChainSettings& settings,
                std::uint64_t seed);

struct EssResult {
  double value = 0.0;
  bool degenerate = false;  // constant series
  operator double() const { return value; }
};

// n / (1 + 2 sum rho_i), autocorrelations summed up to the first
// nonpositive estimate, clamped to [1, n].
EssResult effective_sample_size(std::span<const double> series);

// Packages a chain for the evidence estimators: log_g = log_post, ess = the
// minimum per-coordinate ESS across all coordinates and log_post.
LogDensitySample chain_to_sample(const Chain& chain);

}  // namespace evd

#endif  // EVIDENCED_MCMC_HPP
