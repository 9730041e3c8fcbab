#ifndef EVIDENCED_COMPARE_HPP
#define EVIDENCED_COMPARE_HPP

#include <optional>
#include <string>
#include <vector>

#include "evidenced/mcmc.hpp"

namespace evd {

struct BayesFactorReport {
  double log_bf = 0.0;  // log m(X|M1) - log m(X|M0)
  std::string method;
  double ci_low = 0.0;
  double ci_high = 0.0;
  EvidenceEstimate model0;
  EvidenceEstimate model1;
  std::string category;  // Kass-Raftery reading of |log BF|
  // Filled by replicate_bf_ci: all R x R pairings of replicate evidences.
  std::optional<Matrix> replicate_matrix;
  // SD over the R x R pairings (used for the CI) and the same divided by
  // sqrt(R); the convention is ambiguous so both are reported.
  std::optional<double> sd_pairings;
  std::optional<double> sd_pairings_over_sqrt_r;
};

std::string kass_raftery_category(double log_bf);

// log BF from two single evidences; the CI combines the two ESS-corrected
// delta RMSEs.  Refuses mismatched data fingerprints.
BayesFactorReport bayes_factor(const EvidenceEstimate& e1,
                               const EvidenceEstimate& e0);

// Monte-Carlo-replicate interval: mean of the R x R pairwise log BFs,
// +- 2 SD of those pairings.
BayesFactorReport replicate_bf_ci(std::span<const double> logs_model1,
                                  std::span<const double> logs_model0);

struct TreeSelectConfig {
  PriorSpec priors;
  ChainSettings chain;
  int n_categories = 4;
  std::vector<double> k_grid;  // empty: auto grid per topology
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct TreeSelectEntry {
  std::string newick;  // with posterior-mean branch lengths
  bool ok = false;
  std::string error;
  EvidenceEstimate evidence;
  double posterior_probability = 0.0;
};

struct TreeSelectReport {
  std::vector<TreeSelectEntry> entries;    // same order as the input list
  std::vector<std::size_t> ranking;        // indices, best evidence first
  Matrix pairwise_log_bf;                  // [i][j] = log BF(tau_i vs tau_j)
};

// Runs the chain + IDR evidence pipeline per candidate topology and ranks
// them; posterior probabilities assume equal topology priors.
TreeSelectReport tree_select(const Alignment& alignment,
                             const std::vector<Topology>& topologies,
                             ModelKind kind, const TreeSelectConfig& config);

}  // namespace evd

#endif  // EVIDENCED_COMPARE_HPP
