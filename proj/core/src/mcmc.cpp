#include "evidenced/mcmc.hpp"

#include <cmath>

namespace evd {

double PriorSpec::log_density(const PhyloParams& params,
                              ModelKind kind) const {
  double lp = 0.0;
  for (double v : params.branch_lengths) {
    if (!(v > 0.0)) return -std::numeric_limits<double>::infinity();
    lp += std::log(lambda_branch) - lambda_branch * v;
  }
  if (kind == ModelKind::GtrGamma) {
    // Dirichlet(1,...,1) is constant on the simplex: log Gamma(D).
    lp += std::lgamma(4.0);  // pi
    lp += std::lgamma(6.0);  // rho
    if (!(params.alpha > 0.0))
      return -std::numeric_limits<double>::infinity();
    lp += std::log(lambda_alpha) - lambda_alpha * params.alpha;
  }
  return lp;
}

PhyloPosterior::PhyloPosterior(Alignment alignment, Topology topology,
                               ModelKind kind, PriorSpec priors,
                               int n_categories)
    : alignment_(std::move(alignment)),
      topology_(std::move(topology)),
      kind_(kind),
      priors_(priors),
      n_categories_(kind == ModelKind::JC69 ? 1 : n_categories),
      packing_(kind, topology_.n_branches()) {
  if (alignment_.n_sites() > 0) {
    // Fail fast on name mismatches rather than at the first evaluation.
    (void)log_likelihood(
        alignment_, topology_, BranchLengths(topology_.n_branches(), 0.1),
        SubstitutionModel::from_params(kind_, PhyloParams{}, n_categories_));
  }
}

PhyloPosterior::Eval PhyloPosterior::evaluate(const Vector& u) const {
  Eval out;
  const auto unpacked = packing_.unpack(u);
  out.log_jacobian = unpacked.log_jacobian;
  out.log_prior = priors_.log_density(unpacked.params, kind_);
  if (alignment_.n_sites() == 0) {
    out.log_lik = 0.0;
  } else {
    const auto model =
        SubstitutionModel::from_params(kind_, unpacked.params, n_categories_);
    out.log_lik = log_likelihood(alignment_, topology_,
                                 unpacked.params.branch_lengths, model);
  }
  out.log_post = out.log_prior + out.log_lik + out.log_jacobian;
  return out;
}

Vector PhyloPosterior::initial_point() const {
  PhyloParams params;
  params.branch_lengths.assign(topology_.n_branches(),
                               1.0 / priors_.lambda_branch);
  params.alpha = 1.0 / priors_.lambda_alpha;
  return packing_.pack(params).unconstrained;
}

Chain run_chain(const PhyloPosterior& posterior, const ChainSettings& settings,
                std::uint64_t seed) {
  if (settings.n_draws < 100)
    throw InvalidInput("run_chain: need at least 100 recorded draws");
  if (settings.thin < 1) throw InvalidInput("run_chain: thin must be >= 1");
  if (settings.burn_in >= settings.n_draws * settings.thin)
    throw InvalidInput("run_chain: burn_in must be < n_draws * thin");

  const int d = posterior.packing().dim();
  Rng rng(seed);

  Vector current = posterior.initial_point();
  auto eval = posterior.evaluate(current);

  std::vector<double> log_scale(d, std::log(settings.initial_proposal_scale));
  std::vector<int> adapt_count(d, 0);

  Chain chain;
  chain.draws.resize(settings.n_draws, d);
  chain.log_post.resize(settings.n_draws);
  chain.log_lik.resize(settings.n_draws);
  chain.seed = seed;
  chain.burn_in = settings.burn_in;
  chain.thin = settings.thin;
  chain.column_names = posterior.packing().column_names();
  chain.kind = posterior.kind();
  chain.priors = posterior.priors();
  chain.n_categories = posterior.n_categories();

  const int total_sweeps = settings.burn_in + settings.n_draws * settings.thin;
  long long accepted = 0, proposed = 0;
  int recorded = 0;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    const bool adapting = sweep < settings.burn_in;
    for (int j = 0; j < d; ++j) {
      Vector candidate = current;
      candidate[j] += std::exp(log_scale[j]) * rng.normal();
      PhyloPosterior::Eval cand_eval;
      bool accept = false;
      cand_eval = posterior.evaluate(candidate);
      if (!std::isnan(cand_eval.log_post)) {
        const double log_ratio = cand_eval.log_post - eval.log_post;
        accept = log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio;
      }
      if (accept) {
        current = std::move(candidate);
        eval = cand_eval;
      }
      if (adapting) {
        // Robbins-Monro step toward the target acceptance rate.
        const double gamma =
            1.0 / std::pow(1.0 + adapt_count[j]++, 0.6);
        log_scale[j] +=
            gamma * ((accept ? 1.0 : 0.0) - settings.target_acceptance);
      } else {
        ++proposed;
        if (accept) ++accepted;
      }
    }
    if (!adapting) {
      const int offset = sweep - settings.burn_in;
      if ((offset + 1) % settings.thin == 0) {
        chain.draws.row(recorded) = current.transpose();
        chain.log_post[recorded] = eval.log_post;
        chain.log_lik[recorded] = eval.log_lik;
        ++recorded;
        if (recorded == settings.n_draws) break;
      }
    }
  }
  chain.acceptance_rate =
      proposed > 0 ? double(accepted) / double(proposed) : 0.0;
  return chain;
}

EssResult effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw InvalidInput("effective_sample_size: need n >= 10");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= double(n);
  double c0 = 0.0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  c0 /= double(n);
  EssResult out;
  if (!(c0 > 0.0)) {
    out.value = double(n);
    out.degenerate = true;
    return out;
  }
  // Initial-positive-sequence truncation: stop at the first nonpositive
  // autocorrelation estimate.
  double sum_rho = 0.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    double c = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t)
      c += (series[t] - mean) * (series[t + lag] - mean);
    c /= double(n);
    const double rho = c / c0;
    if (rho <= 0.0) break;
    sum_rho += rho;
  }
  out.value = std::clamp(double(n) / (1.0 + 2.0 * sum_rho), 1.0, double(n));
  return out;
}

LogDensitySample chain_to_sample(const Chain& chain) {
  LogDensitySample sample;
  sample.draws = chain.draws;
  sample.log_g = chain.log_post;
  double min_ess = double(chain.draws.rows());
  for (Eigen::Index j = 0; j < chain.draws.cols(); ++j) {
    std::vector<double> column(chain.draws.col(j).data(),
                               chain.draws.col(j).data() + chain.draws.rows());
    min_ess = std::min(min_ess, effective_sample_size(column).value);
  }
  {
    std::vector<double> lp(chain.log_post.data(),
                           chain.log_post.data() + chain.log_post.size());
    min_ess = std::min(min_ess, effective_sample_size(lp).value);
  }
  sample.ess = min_ess;
  return sample;
}

}  // namespace evd
