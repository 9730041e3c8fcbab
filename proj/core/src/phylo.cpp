#include "evidenced/phylo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>

namespace evd {

namespace {

constexpr double kScaleThreshold = 1e-256;

// Maps topology leaves to alignment rows; throws on any mismatch.
std::vector<int> match_rows(const Alignment& alignment,
                            const Topology& topology) {
  std::unordered_map<std::string, int> by_name;
  for (std::size_t i = 0; i < alignment.names.size(); ++i)
    by_name[alignment.names[i]] = static_cast<int>(i);
  std::vector<int> row_of_node(topology.nodes.size(), -1);
  int leaves = 0;
  for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
    if (!topology.nodes[i].is_leaf()) continue;
    auto it = by_name.find(topology.nodes[i].name);
    if (it == by_name.end())
      throw InvalidInput("leaf '" + topology.nodes[i].name +
                         "' missing from alignment");
    row_of_node[i] = it->second;
    ++leaves;
  }
  if (leaves != static_cast<int>(alignment.n_taxa()))
    throw InvalidInput("alignment has taxa not present in the tree");
  return row_of_node;
}

struct Patterns {
  std::vector<std::vector<std::uint8_t>> columns;  // one entry per pattern
  std::vector<double> counts;
};

Patterns compress_patterns(const Alignment& alignment) {
  Patterns out;
  std::map<std::vector<std::uint8_t>, int> seen;
  const std::size_t n = alignment.n_taxa();
  for (std::size_t site = 0; site < alignment.n_sites(); ++site) {
    std::vector<std::uint8_t> column(n);
    for (std::size_t row = 0; row < n; ++row)
      column[row] = alignment.sequences[row][site];
    auto [it, inserted] =
        seen.emplace(std::move(column), static_cast<int>(out.columns.size()));
    if (inserted) {
      out.columns.push_back(it->first);
      out.counts.push_back(0.0);
    }
    out.counts[it->second] += 1.0;
  }
  return out;
}

}  // namespace

double log_likelihood(const Alignment& alignment, const Topology& topology,
                      const BranchLengths& lengths,
                      const SubstitutionModel& model) {
  if (static_cast<int>(lengths.size()) != topology.n_branches())
    throw InvalidInput("log_likelihood: branch-length count mismatch");
  for (double len : lengths)
    if (!(len > 0.0))
      throw InvalidInput("log_likelihood: branch lengths must be positive");
  if (alignment.n_sites() == 0) return 0.0;
  alignment.validate();

  const auto row_of_node = match_rows(alignment, topology);
  const auto patterns = compress_patterns(alignment);
  const auto order = topology.postorder();
  const auto rates = category_rates(model);
  const RateMatrix rate = build_q(model);
  const TransitionEngine engine(rate);

  const std::size_t n_patterns = patterns.columns.size();
  const std::size_t n_cat = rates.size();
  const double log_n_cat = std::log(static_cast<double>(n_cat));

  // Per-pattern log-likelihood per category, then mixed across categories.
  std::vector<double> site_log_lik(n_patterns,
                                   -std::numeric_limits<double>::infinity());
  std::vector<double> cat_terms(n_cat);
  std::vector<std::array<double, 4>> partial(topology.nodes.size());
  std::vector<Eigen::Matrix4d> p_edge(topology.nodes.size());
  std::vector<double> per_cat(n_patterns);

  std::vector<std::vector<double>> cat_log_lik(
      n_cat, std::vector<double>(n_patterns));

  for (std::size_t c = 0; c < n_cat; ++c) {
    for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
      if (static_cast<int>(i) == topology.root) continue;
      p_edge[i] = engine.at(topology.edge_length(static_cast<int>(i),
                                                 lengths) *
                            rates[c]);
    }
    for (std::size_t p = 0; p < n_patterns; ++p) {
      double log_scale = 0.0;
      for (int idx : order) {
        const auto& node = topology.nodes[idx];
        auto& part = partial[idx];
        if (node.is_leaf()) {
          const std::uint8_t state = patterns.columns[p][row_of_node[idx]];
          if (state == kMissing) {
            part = {1.0, 1.0, 1.0, 1.0};
          } else {
            part = {0.0, 0.0, 0.0, 0.0};
            part[state] = 1.0;
          }
        } else {
          part = {1.0, 1.0, 1.0, 1.0};
          for (int child : node.children) {
            const auto& cp = partial[child];
            const auto& pm = p_edge[child];
            for (int s = 0; s < 4; ++s) {
              double sum = 0.0;
              for (int j = 0; j < 4; ++j) sum += pm(s, j) * cp[j];
              part[s] *= sum;
            }
          }
          const double biggest =
              std::max({part[0], part[1], part[2], part[3]});
          if (biggest < kScaleThreshold && biggest > 0.0) {
            for (double& v : part) v /= biggest;
            log_scale += std::log(biggest);
          }
        }
      }
      const auto& root_part = partial[topology.root];
      double lik = 0.0;
      for (int s = 0; s < 4; ++s) lik += rate.pi[s] * root_part[s];
      cat_log_lik[c][p] = std::log(lik) + log_scale;
    }
  }

  double total = 0.0;
  for (std::size_t p = 0; p < n_patterns; ++p) {
    for (std::size_t c = 0; c < n_cat; ++c) cat_terms[c] = cat_log_lik[c][p];
    total += patterns.counts[p] * (log_sum_exp(cat_terms) - log_n_cat);
  }
  return total;
}

Alignment simulate_alignment(const Topology& topology,
                             const BranchLengths& lengths,
                             const SubstitutionModel& model,
                             std::size_t n_sites, std::uint64_t seed) {
  if (static_cast<int>(lengths.size()) != topology.n_branches())
    throw InvalidInput("simulate_alignment: branch-length count mismatch");
  const auto rates = category_rates(model);
  const RateMatrix rate = build_q(model);
  const TransitionEngine engine(rate);
  const std::size_t n_cat = rates.size();

  // P matrices per (node, category), row-wise cumulative for sampling.
  std::vector<std::vector<Eigen::Matrix4d>> p_edge(topology.nodes.size());
  for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
    if (static_cast<int>(i) == topology.root) continue;
    p_edge[i].resize(n_cat);
    for (std::size_t c = 0; c < n_cat; ++c)
      p_edge[i][c] = engine.at(
          topology.edge_length(static_cast<int>(i), lengths) * rates[c]);
  }

  Alignment out;
  std::vector<int> leaf_nodes;
  for (std::size_t i = 0; i < topology.nodes.size(); ++i) {
    if (topology.nodes[i].is_leaf()) {
      leaf_nodes.push_back(static_cast<int>(i));
      out.names.push_back(topology.nodes[i].name);
    }
  }
  out.sequences.assign(leaf_nodes.size(),
                       std::vector<std::uint8_t>(n_sites));

  Rng rng(seed);
  std::vector<std::uint8_t> state(topology.nodes.size());
  std::array<double, 4> probs;
  for (std::size_t site = 0; site < n_sites; ++site) {
    const std::size_t cat = n_cat == 1 ? 0 : rng.index(n_cat);
    // Pre-order walk from the root, drawing each child state.
    std::function<void(int)> walk = [&](int idx) {
      const auto& node = topology.nodes[idx];
      if (idx == topology.root) {
        state[idx] = static_cast<std::uint8_t>(
            rng.categorical(std::span<const double>(rate.pi)));
      } else {
        const auto& pm = p_edge[idx][cat];
        for (int j = 0; j < 4; ++j) probs[j] = pm(state[node.parent], j);
        state[idx] = static_cast<std::uint8_t>(rng.categorical(probs));
      }
      for (int child : node.children) walk(child);
    };
    walk(topology.root);
    for (std::size_t li = 0; li < leaf_nodes.size(); ++li)
      out.sequences[li][site] = state[leaf_nodes[li]];
  }
  return out;
}

}  // namespace evd
