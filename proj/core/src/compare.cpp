#include "evidenced/compare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace evd {

std::string kass_raftery_category(double log_bf) {
  const double a = std::abs(log_bf);
  if (a > std::log(100.0)) return "decisive";
  if (a > std::log(10.0)) return "strong";
  if (a > std::log(3.2)) return "substantial";
  return "not worth more than a bare mention";
}

BayesFactorReport bayes_factor(const EvidenceEstimate& e1,
                               const EvidenceEstimate& e0) {
  if (!e1.data_fingerprint.empty() && !e0.data_fingerprint.empty() &&
      e1.data_fingerprint != e0.data_fingerprint)
    throw InvalidInput(
        "bayes_factor: estimates come from different data (fingerprints '" +
        e1.data_fingerprint + "' vs '" + e0.data_fingerprint + "')");
  BayesFactorReport report;
  report.log_bf = e1.log_c - e0.log_c;
  report.method = evidence_method_name(e1.method);
  report.model0 = e0;
  report.model1 = e1;
  report.category = kass_raftery_category(report.log_bf);
  const double combined = 2.0 * std::hypot(e1.rmse_delta_ess,
                                           e0.rmse_delta_ess);
  report.ci_low = report.log_bf - combined;
  report.ci_high = report.log_bf + combined;
  return report;
}

BayesFactorReport replicate_bf_ci(std::span<const double> logs_model1,
                                  std::span<const double> logs_model0) {
  if (logs_model1.size() < 2 || logs_model0.size() < 2)
    throw InvalidInput("replicate_bf_ci: need at least 2 replicates each");
  const std::size_t r1 = logs_model1.size();
  const std::size_t r0 = logs_model0.size();
  Matrix pairs(r1, r0);
  std::vector<double> flat;
  flat.reserve(r1 * r0);
  for (std::size_t i = 0; i < r1; ++i) {
    for (std::size_t j = 0; j < r0; ++j) {
      pairs(i, j) = logs_model1[i] - logs_model0[j];
      flat.push_back(pairs(i, j));
    }
  }
  const MeanVar mv = mean_var(flat);
  const double sd = std::sqrt(mv.var);
  BayesFactorReport report;
  report.log_bf = mv.mean;
  report.method = "replicates";
  report.category = kass_raftery_category(report.log_bf);
  report.replicate_matrix = pairs;
  report.sd_pairings = sd;
  report.sd_pairings_over_sqrt_r =
      sd / std::sqrt(double(std::min(r1, r0)));
  report.ci_low = mv.mean - 2.0 * sd;
  report.ci_high = mv.mean + 2.0 * sd;
  return report;
}

TreeSelectReport tree_select(const Alignment& alignment,
                             const std::vector<Topology>& topologies,
                             ModelKind kind, const TreeSelectConfig& config) {
  if (topologies.empty())
    throw InvalidInput("tree_select: no candidate topologies");
  const auto data_leaves = [&] {
    auto names = alignment.names;
    std::sort(names.begin(), names.end());
    return names;
  }();
  for (const auto& topo : topologies)
    if (topo.leaf_names() != data_leaves)
      throw InvalidInput(
          "tree_select: topology leaf set does not match the alignment");

  TreeSelectReport report;
  report.entries.resize(topologies.size());

  auto run_one = [&](std::size_t i) {
    auto& entry = report.entries[i];
    try {
      PhyloPosterior posterior(alignment, topologies[i], kind, config.priors,
                               config.n_categories);
      Chain chain =
          run_chain(posterior, config.chain, config.seed + 1000 * (i + 1));
      const auto sample = chain_to_sample(chain);
      const LogDensityFn log_g = [&posterior](const Vector& u) {
        return posterior.evaluate(u).log_post;
      };
      KGridResult grid =
          config.k_grid.empty()
              ? idr_k_search(sample, log_g,
                             IdrEngine(sample, log_g).auto_k_grid(), {}, 1)
              : idr_k_search(sample, log_g, config.k_grid, {}, 1);
      entry.evidence = grid.selected();
      // Posterior-mean branch lengths for the report tree.
      Vector mean = chain.draws.colwise().mean();
      const auto unpacked = posterior.packing().unpack(mean);
      entry.newick =
          emit_newick(topologies[i], unpacked.params.branch_lengths);
      entry.ok = true;
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
    }
  };

  if (config.jobs <= 1) {
    for (std::size_t i = 0; i < topologies.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < topologies.size(); ++i)
      workers.emplace_back(run_one, i);
    for (auto& t : workers) t.join();
  }

  // Posterior probabilities under equal topology priors, on the log scale.
  std::vector<double> log_c;
  std::vector<std::size_t> ok_idx;
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    if (report.entries[i].ok) {
      log_c.push_back(report.entries[i].evidence.log_c);
      ok_idx.push_back(i);
    }
  }
  if (!log_c.empty()) {
    const double lse = log_sum_exp(log_c);
    for (std::size_t j = 0; j < ok_idx.size(); ++j)
      report.entries[ok_idx[j]].posterior_probability =
          std::exp(log_c[j] - lse);
  }

  report.ranking = ok_idx;
  std::sort(report.ranking.begin(), report.ranking.end(),
            [&](std::size_t a, std::size_t b) {
              return report.entries[a].evidence.log_c >
                     report.entries[b].evidence.log_c;
            });

  const std::size_t n = report.entries.size();
  report.pairwise_log_bf = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (report.entries[i].ok && report.entries[j].ok)
        report.pairwise_log_bf(i, j) = report.entries[i].evidence.log_c -
                                       report.entries[j].evidence.log_c;
  return report;
}

}  // namespace evd
