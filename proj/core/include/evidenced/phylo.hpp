#ifndef EVIDENCED_PHYLO_HPP
#define EVIDENCED_PHYLO_HPP

#include "evidenced/alignment.hpp"
#include "evidenced/substmodel.hpp"
#include "evidenced/tree.hpp"

namespace evd {

// Pruning-algorithm log-likelihood with site-pattern compression, per-node
// underflow rescaling, and equal-weight averaging over discrete-gamma
// categories.  k = 0 sites is allowed and yields 0 (prior-only targets).
double log_likelihood(const Alignment& alignment, const Topology& topology,
                      const BranchLengths& lengths,
                      const SubstitutionModel& model);

// Evolves root states drawn from pi down the tree with per-site gamma
// categories; deterministic under the seed.
Alignment simulate_alignment(const Topology& topology,
                             const BranchLengths& lengths,
                             const SubstitutionModel& model,
                             std::size_t n_sites, std::uint64_t seed);

}  // namespace evd

#endif  // EVIDENCED_PHYLO_HPP
