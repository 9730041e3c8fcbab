#include <cmath>
#include <vector>

#include "doctest.h"
#include "evidenced/mcmc.hpp"

using namespace evd;

namespace {

std::vector<double> ar1_series(int n, double phi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  x[0] = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (int i = 1; i < n; ++i) x[i] = phi * x[i - 1] + rng.normal();
  return x;
}

PhyloPosterior toy_posterior(ModelKind kind, std::uint64_t seed) {
  auto [topo, lengths] = parse_newick("((A:0.1,B:0.2):0.05,C:0.15,D:0.3);");
  const Alignment a =
      simulate_alignment(topo, lengths, SubstitutionModel::jc69(), 60, seed);
  return PhyloPosterior(a, topo, kind, PriorSpec{}, 4);
}

}  // namespace

TEST_CASE("ess of white noise is close to n") {
  Rng rng(3);
  const int n = 100000;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  const double ess = effective_sample_size(x);
  CHECK(std::abs(ess - n) < 0.10 * n);
}

TEST_CASE("ess of ar(1) with phi = 0.9 is close to n/19") {
  const int n = 100000;
  const auto x = ar1_series(n, 0.9, 17);
  const double ess = effective_sample_size(x);
  const double expected = n * (1.0 - 0.9) / (1.0 + 0.9);
  CHECK(std::abs(ess - expected) < 0.20 * expected);
}

TEST_CASE("ess degenerates on constant series and clamps to [1, n]") {
  std::vector<double> flat(100, 0.5);
  const EssResult r = effective_sample_size(flat);
  CHECK(r.degenerate);
  CHECK(r.value >= 1.0);
  CHECK(r.value <= 100.0);
}

TEST_CASE("ess under thinning stays within the thinning factor") {
  const int n = 100000;
  const auto x = ar1_series(n, 0.9, 23);
  std::vector<double> thinned;
  for (int i = 0; i < n; i += 5) thinned.push_back(x[i]);
  const double full = effective_sample_size(x);
  const double thin = effective_sample_size(thinned);
  CHECK(thin < full * 5.0 * 1.5);
  CHECK(thin > full / (5.0 * 1.5));
}

TEST_CASE("chains are deterministic under the seed") {
  const auto posterior = toy_posterior(ModelKind::JC69, 1);
  ChainSettings settings;
  settings.n_draws = 120;
  settings.burn_in = 100;
  settings.thin = 2;
  const Chain a = run_chain(posterior, settings, 5);
  const Chain b = run_chain(posterior, settings, 5);
  const Chain c = run_chain(posterior, settings, 6);
  CHECK(a.draws == b.draws);
  CHECK(a.log_post == b.log_post);
  CHECK(a.draws != c.draws);
  CHECK(a.acceptance_rate > 0.0);
  CHECK(a.acceptance_rate < 1.0);
  CHECK(a.draws.rows() == 120);
  CHECK(a.column_names == posterior.packing().column_names());
}

TEST_CASE("stored log_post decomposes as prior + lik + jacobian on re-evaluation") {
  for (ModelKind kind : {ModelKind::JC69, ModelKind::GtrGamma}) {
    const auto posterior = toy_posterior(kind, 2);
    ChainSettings settings;
    settings.n_draws = 100;
    settings.burn_in = 150;
    settings.thin = 2;
    const Chain chain = run_chain(posterior, settings, 11);
    for (int i = 0; i < chain.draws.rows(); ++i) {
      const auto eval = posterior.evaluate(chain.draws.row(i).transpose());
      CHECK(std::abs(eval.log_post - chain.log_post[i]) <=
            1e-10 * std::max(1.0, std::abs(chain.log_post[i])));
      CHECK(std::abs(eval.log_lik - chain.log_lik[i]) <=
            1e-10 * std::max(1.0, std::abs(chain.log_lik[i])));
      CHECK(eval.log_post ==
            doctest::Approx(eval.log_prior + eval.log_lik + eval.log_jacobian)
                .epsilon(1e-10));
    }
  }
}

TEST_CASE("chain_to_sample takes the minimum ess over coordinates") {
  const auto posterior = toy_posterior(ModelKind::JC69, 3);
  ChainSettings settings;
  settings.n_draws = 200;
  settings.burn_in = 100;
  settings.thin = 1;
  const Chain chain = run_chain(posterior, settings, 7);
  const LogDensitySample s = chain_to_sample(chain);
  CHECK(s.size() == 200);
  CHECK(s.ess >= 1.0);
  CHECK(s.ess <= 200.0);
  double min_ess = effective_sample_size(std::vector<double>(
      chain.log_post.data(), chain.log_post.data() + chain.log_post.size()));
  for (int j = 0; j < chain.draws.cols(); ++j) {
    std::vector<double> col(chain.draws.rows());
    for (int i = 0; i < chain.draws.rows(); ++i) col[i] = chain.draws(i, j);
    min_ess = std::min(min_ess, double(effective_sample_size(col)));
  }
  CHECK(s.ess == doctest::Approx(min_ess).epsilon(1e-12));
  for (int i = 0; i < s.size(); ++i) CHECK(s.log_g[i] == chain.log_post[i]);
}

TEST_CASE("prior density is evaluable and finite at valid points") {
  PriorSpec priors;
  PhyloParams p;
  p.branch_lengths = {0.1, 0.2, 0.05, 0.15, 0.3};
  CHECK(std::isfinite(priors.log_density(p, ModelKind::JC69)));
  p.alpha = 0.7;
  CHECK(std::isfinite(priors.log_density(p, ModelKind::GtrGamma)));
}
