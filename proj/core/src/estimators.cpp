#include "evidenced/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace evd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_finite_or_degenerate(std::span<const double> values,
                                const char* who) {
  bool all_neg_inf = true;
  for (double v : values) {
    if (v != -kInf) all_neg_inf = false;
    if (std::isnan(v) || v == kInf)
      throw InvalidInput(std::string(who) + ": non-finite log value");
  }
  if (all_neg_inf)
    throw EstimatorUndefined(std::string(who) +
                             ": degenerate input (all log values are -inf)");
  for (double v : values)
    if (!std::isfinite(v))
      throw InvalidInput(std::string(who) + ": non-finite log value");
}

// Two-sided CI on the log scale from the ESS-corrected relative RMSE:
// log(c (1 -+ 2 rmse)), lower bound clamped when the band covers zero.
void fill_ci(EvidenceEstimate& e) {
  const double half = 2.0 * e.rmse_delta_ess;
  e.ci_high = e.log_c + std::log1p(half);
  e.ci_low = half < 1.0 ? e.log_c + std::log1p(-half) : e.log_c - 5.0;
}

EvidenceEstimate finish(double log_c, double rel_sd, double n, double ess,
                        EvidenceMethod method, bool literal_printed_rmse) {
  EvidenceEstimate e;
  e.log_c = log_c;
  e.method = method;
  if (literal_printed_rmse) {
    e.rmse_delta = rel_sd;
    e.rmse_delta_ess = rel_sd * std::sqrt(n / ess);
  } else {
    e.rmse_delta = rel_sd / std::sqrt(n);
    e.rmse_delta_ess = rel_sd / std::sqrt(ess);
  }
  fill_ci(e);
  return e;
}

}  // namespace

void LogDensitySample::validate() const {
  if (size() < 2) throw InvalidInput("sample: need T >= 2 draws");
  if (dim() < 1) throw InvalidInput("sample: need d >= 1");
  if (log_g.size() != size())
    throw InvalidInput("sample: log_g length does not match draw count");
  for (Eigen::Index i = 0; i < log_g.size(); ++i)
    if (!std::isfinite(log_g[i]))
      throw InvalidInput("sample: log_g must be finite everywhere");
  if (ess != 0.0 && !(ess >= 1.0 && ess <= double(size())))
    throw InvalidInput("sample: ess must lie in [1, T]");
}

std::string evidence_method_name(EvidenceMethod method) {
  switch (method) {
    case EvidenceMethod::IDR: return "IDR";
    case EvidenceMethod::HM: return "HM";
    case EvidenceMethod::AM_prior: return "AM";
    case EvidenceMethod::AM_posterior_surrogate: return "AM-posterior";
  }
  return "?";
}

EvidenceEstimate arithmetic_mean(std::span<const double> log_likelihoods,
                                 SampledFrom sampled_from, double ess) {
  const std::size_t n = log_likelihoods.size();
  if (n < 2) throw InvalidInput("arithmetic_mean: need T >= 2 values");
  check_finite_or_degenerate(log_likelihoods, "arithmetic_mean");
  if (ess <= 0.0) ess = double(n);
  const double log_c = log_mean_exp(log_likelihoods);
  std::vector<double> rel(n);
  for (std::size_t i = 0; i < n; ++i)
    rel[i] = std::exp(log_likelihoods[i] - log_c);
  EvidenceEstimate e =
      finish(log_c, sample_sd(rel), double(n), ess,
             sampled_from == SampledFrom::Prior
                 ? EvidenceMethod::AM_prior
                 : EvidenceMethod::AM_posterior_surrogate,
             false);
  e.is_surrogate = sampled_from == SampledFrom::Posterior;
  return e;
}

EvidenceEstimate harmonic_mean(std::span<const double> log_likelihoods,
                               double ess, bool literal_printed_rmse) {
  const std::size_t n = log_likelihoods.size();
  if (n < 2) throw InvalidInput("harmonic_mean: need T >= 2 values");
  check_finite_or_degenerate(log_likelihoods, "harmonic_mean");
  if (ess <= 0.0) ess = double(n);
  std::vector<double> neg(n);
  for (std::size_t i = 0; i < n; ++i) neg[i] = -log_likelihoods[i];
  const double log_mean_w = log_mean_exp(neg);
  const double log_c = -log_mean_w;
  std::vector<double> rel(n);
  for (std::size_t i = 0; i < n; ++i)
    rel[i] = std::exp(neg[i] - log_mean_w);
  return finish(log_c, sample_sd(rel), double(n), ess, EvidenceMethod::HM,
                literal_printed_rmse);
}

EvidenceEstimate ghm(const LogDensitySample& sample,
                     const LogDensityFn& log_f) {
  sample.validate();
  const Eigen::Index n = sample.size();
  std::vector<double> log_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lf = log_f(sample.draws.row(i).transpose());
    if (std::isnan(lf) || lf == kInf)
      throw EstimatorUndefined("ghm: estimator breakdown, log f non-finite at draw " +
                               std::to_string(i));
    log_w[i] = lf - sample.log_g[i];
  }
  const double log_mean_w = log_mean_exp(log_w);
  if (log_mean_w == -kInf)
    throw EstimatorUndefined("ghm: f vanishes at every draw");
  std::vector<double> rel(n);
  for (Eigen::Index i = 0; i < n; ++i)
    rel[i] = std::exp(log_w[i] - log_mean_w);
  return finish(-log_mean_w, sample_sd(rel), double(n),
                sample.effective_size(), EvidenceMethod::HM, false);
}

namespace {

struct Whitening {
  Matrix forward;   // inverse square root of the covariance
  Matrix inverse;
  double log_det = 0.0;
};

Whitening whitening_of(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  if (solver.info() != Eigen::Success)
    throw NumericError("idr: covariance eigendecomposition failed");
  const Vector& evals = solver.eigenvalues();
  if (evals.minCoeff() <= 1e-12 * evals.maxCoeff())
    throw NumericError("idr: near-singular covariance in a cross-fit half");
  Whitening w;
  w.forward = solver.eigenvectors() *
              evals.cwiseSqrt().cwiseInverse().asDiagonal() *
              solver.eigenvectors().transpose();
  w.inverse = solver.eigenvectors() * evals.cwiseSqrt().asDiagonal() *
              solver.eigenvectors().transpose();
  w.log_det = -0.5 * evals.array().log().sum();
  return w;
}

}  // namespace

void IdrEngine::finish_part(Part& part) {
  // Evaluate the unperturbed values through the same composed map used for
  // the shrunk points; reusing caller-supplied log_g values would
  // contaminate the inflated/original difference with whitening round-trip
  // noise, which dominates when the shrink is below machine precision.
  part.log_g_values.resize(part.draws.rows());
  for (Eigen::Index i = 0; i < part.draws.rows(); ++i) {
    part.log_g_values[i] = part.log_g_std(part.draws.row(i).transpose());
    if (!std::isfinite(part.log_g_values[i]))
      throw EstimatorUndefined("idr: log g not finite at a standardized draw");
  }
  part.norms = part.draws.rowwise().norm();
  part.log_g0 = part.log_g_std(Vector::Zero(d_));
  if (!std::isfinite(part.log_g0))
    throw EstimatorUndefined("idr: log g at the centering point is not finite");
}

IdrEngine::IdrEngine(const LogDensitySample& sample, const LogDensityFn& log_g,
                     StandardizationChoice standardization) {
  sample.validate();
  ess_ = sample.effective_size();
  d_ = static_cast<int>(sample.dim());
  n_ = sample.size();

  if (!standardization.enabled) {
    Part part;
    part.draws = sample.draws;
    part.log_g_std = log_g;
    finish_part(part);
    parts_.push_back(std::move(part));
    shift_ = parts_.front().log_g0;
    return;
  }

  const Eigen::Index half = n_ / 2;
  const bool cross_fit = half >= d_ + 2 && n_ >= 20;
  std::span<const double> values(sample.log_g.data(),
                                 static_cast<std::size_t>(sample.size()));
  // The full-sample standardization supplies the (optionally refined) mode
  // and doubles as the small-sample fallback.
  auto full = standardize(sample.draws, log_g, values,
                          standardization.mode_policy);
  if (!cross_fit) {
    Part part;
    part.draws = std::move(full.draws);
    part.log_g_std = std::move(full.log_g);
    finish_part(part);
    parts_.push_back(std::move(part));
    shift_ = parts_.front().log_g0;
    return;
  }

  const Vector mode = full.spec.mode;
  // Halves interleave the norm-ranked draws so the split, and hence the
  // estimate, does not depend on the input order of the sample.
  const Vector full_norms = full.draws.rowwise().norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (full_norms[a] != full_norms[b]) return full_norms[a] < full_norms[b];
    for (int j = 0; j < d_; ++j)  // duplicates: break ties by coordinates
      if (sample.draws(a, j) != sample.draws(b, j))
        return sample.draws(a, j) < sample.draws(b, j);
    return false;
  });
  for (int h = 0; h < 2; ++h) {
    std::vector<Eigen::Index> own, other;
    for (Eigen::Index r = 0; r < n_; ++r)
      (r % 2 == h ? own : other).push_back(order[static_cast<std::size_t>(r)]);
    Matrix other_draws(Eigen::Index(other.size()), d_);
    for (std::size_t i = 0; i < other.size(); ++i)
      other_draws.row(Eigen::Index(i)) = sample.draws.row(other[i]);
    const Vector other_mean = other_draws.colwise().mean();
    const Matrix centered = other_draws.rowwise() - other_mean.transpose();
    const Whitening w = whitening_of(centered.transpose() * centered /
                                     double(other.size() - 1));

    Part part;
    part.draws.resize(Eigen::Index(own.size()), d_);
    for (std::size_t i = 0; i < own.size(); ++i)
      part.draws.row(Eigen::Index(i)) =
          (sample.draws.row(own[i]) - mode.transpose()) *
          w.forward.transpose();
    const Matrix unwhiten = w.inverse;
    const double log_det = w.log_det;
    part.log_g_std = [mode, unwhiten, log_det, log_g](const Vector& z) {
      return log_g(mode + unwhiten * z) - log_det;
    };
    finish_part(part);
    parts_.push_back(std::move(part));
  }
  // k is quoted relative to this center value (see the class comment); the
  // estimate gets it added back, so any constant added to log_g passes
  // straight through to log_c.
  shift_ = 0.0;
  for (const Part& part : parts_) shift_ += part.log_g0 / double(parts_.size());
}

std::vector<double> IdrEngine::ratios_minus_one(double k) const {
  if (!(k > 0.0)) throw InvalidInput("idr: k must be positive");
  std::vector<double> ratio_m1;  // g_Pk / g - 1 per draw, parts in order
  ratio_m1.reserve(static_cast<std::size_t>(n_));
  for (const Part& part : parts_) {
    // r_k solves the shift-relative mass equation; the plateau height stays
    // on the same (unshifted) scale as the stored density values.
    const auto cfg = InflationConfig::for_mass(k, part.log_g0 - shift_, d_);
    for (Eigen::Index i = 0; i < part.draws.rows(); ++i) {
      double log_gpk;
      if (part.norms[i] <= cfg.r_k) {
        log_gpk = part.log_g0;
      } else {
        log_gpk =
            part.log_g_std(radial_shrink(part.draws.row(i).transpose(), cfg.r_k));
      }
      ratio_m1.push_back(std::expm1(log_gpk - part.log_g_values[i]));
    }
  }
  return ratio_m1;
}

EvidenceEstimate IdrEngine::estimate(double k) const {
  const std::vector<double> ratio_m1 = ratios_minus_one(k);
  const Eigen::Index n = n_;
  const MeanVar mv = mean_var(ratio_m1);
  if (!std::isfinite(mv.mean))
    throw EstimatorUndefined("idr: ratio overflow at k = " +
                             std::to_string(k));
  if (!(mv.mean > 0.0))
    throw EstimatorUndefined(
        "idr: mean inflated/original ratio <= 1 (k too small for this "
        "sample, or the draws do not match the target)");
  const double log_c = std::log(k) - std::log(mv.mean) + shift_;
  // Delta-method relative RMSE: (c/k) sd(ratio) / sqrt(n).
  const double rel_sd = std::sqrt(mv.var) / mv.mean;
  EvidenceEstimate e = finish(log_c, rel_sd, double(n), ess_,
                              EvidenceMethod::IDR, false);
  e.k_opt = k;
  return e;
}

std::vector<double> IdrEngine::auto_k_grid(int count, double r_lo,
                                           double r_hi) const {
  if (count < 1 || !(r_lo > 0.0) || !(r_hi > r_lo))
    throw InvalidInput("auto_k_grid: bad radius range");
  // Anchor the plateau radii to the standardized draw norms; in d
  // dimensions the bulk sits near sqrt(d), not near 1.
  // The top radius stays inside the well-sampled region: a plateau past
  // the largest norms gives a low-variance but badly biased ratio (its
  // boundary shell is never sampled), which would fool the rmse selector.
  std::vector<double> sorted;
  sorted.reserve(static_cast<std::size_t>(n_));
  for (const Part& part : parts_) {
    sorted.insert(sorted.end(), part.norms.data(),
                  part.norms.data() + part.norms.size());
  }
  std::sort(sorted.begin(), sorted.end());
  double median = sorted[sorted.size() / 2];
  double q90 = sorted[std::size_t(double(sorted.size() - 1) * 0.90)];
  if (!(median > 0.0)) median = 1.0;
  if (!(q90 > median)) q90 = 2.0 * median;
  const double r_min = r_lo * median;
  const double r_max = r_hi * q90;
  std::vector<double> grid(count);
  const double log_v1 = log_unit_ball_volume(d_);
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : double(i) / (count - 1);
    const double r = r_min * std::pow(r_max / r_min, f);
    grid[i] = std::exp(log_v1 + d_ * std::log(r));
  }
  return grid;
}

EvidenceEstimate idr(const LogDensitySample& sample, const LogDensityFn& log_g,
                     double k, StandardizationChoice standardization) {
  return IdrEngine(sample, log_g, standardization).estimate(k);
}

std::size_t select_k_index(std::span<const double> k_values,
                           std::span<const double> rmse_values) {
  if (k_values.empty() || k_values.size() != rmse_values.size())
    throw InvalidInput("select_k_index: empty or mismatched inputs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rmse_values.size(); ++i)
    if (rmse_values[i] < rmse_values[best]) best = i;
  return best;
}

KGridResult idr_k_search(const LogDensitySample& sample,
                         const LogDensityFn& log_g,
                         std::span<const double> k_grid,
                         StandardizationChoice standardization, int jobs) {
  if (k_grid.empty()) throw InvalidInput("idr_k_search: empty k grid");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (!(k_grid[i] > 0.0))
      throw InvalidInput("idr_k_search: k values must be positive");
    if (i > 0 && !(k_grid[i] > k_grid[i - 1]))
      throw InvalidInput("idr_k_search: k grid must be strictly increasing");
  }
  const IdrEngine engine(sample, log_g, standardization);

  KGridResult out;
  out.grid.resize(k_grid.size());
  auto eval_one = [&](std::size_t i) {
    out.grid[i].k = k_grid[i];
    try {
      out.grid[i].estimate = engine.estimate(k_grid[i]);
      out.grid[i].valid = true;
    } catch (const EstimatorUndefined& e) {
      out.grid[i].valid = false;
      out.grid[i].error = e.what();
    }
  };
  if (jobs <= 1 || k_grid.size() == 1) {
    for (std::size_t i = 0; i < k_grid.size(); ++i) eval_one(i);
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    const int n_threads =
        std::min<std::size_t>(jobs, k_grid.size());
    for (int w = 0; w < n_threads; ++w) {
      workers.emplace_back([&]() {
        for (std::size_t i = next.fetch_add(1); i < k_grid.size();
             i = next.fetch_add(1))
          eval_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  std::vector<double> ks, rmses;
  std::vector<std::size_t> valid_idx;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    if (!out.grid[i].valid) continue;
    valid_idx.push_back(i);
    ks.push_back(out.grid[i].k);
    rmses.push_back(out.grid[i].estimate.rmse_delta_ess);
  }
  if (valid_idx.empty())
    throw EstimatorUndefined(
        "idr_k_search: no valid k in the grid (estimator undefined "
        "everywhere)");
  out.selected_index = valid_idx[select_k_index(ks, rmses)];
  return out;
}

BootstrapResult bootstrap_rmse(
    std::span<const double> per_draw_statistic,
    const std::function<double(std::span<const double>)>& log_estimator,
    int B, double ess, std::uint64_t rng_seed) {
  const std::size_t n = per_draw_statistic.size();
  if (n < 2) throw InvalidInput("bootstrap_rmse: need T >= 2");
  if (B < 1) throw InvalidInput("bootstrap_rmse: need B >= 1");
  std::size_t m = static_cast<std::size_t>(std::llround(std::max(ess, 1.0)));
  m = std::min(m, n);
  const double log_c_full = log_estimator(per_draw_statistic);

  std::mt19937_64 engine(rng_seed);
  std::vector<double> resampled(m);
  double sum_sq = 0.0;
  int n_ok = 0, n_failed = 0;
  for (int b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < m; ++i)
      resampled[i] = per_draw_statistic[engine() % n];
    try {
      const double log_cb = log_estimator(resampled);
      const double rel = std::expm1(log_cb - log_c_full);
      sum_sq += rel * rel;
      ++n_ok;
    } catch (const EstimatorUndefined&) {
      ++n_failed;
    }
  }
  if (n_ok == 0)
    throw EstimatorUndefined("bootstrap_rmse: every replicate failed");
  BootstrapResult out;
  out.value = std::sqrt(sum_sq / n_ok);
  out.n_failed = n_failed;
  out.unreliable = n_failed > B / 10;
  return out;
}

double mc_replicate_rmse(std::span<const double> log_estimates) {
  if (log_estimates.size() < 2)
    throw InvalidInput("mc_replicate_rmse: need at least 2 replicates");
  const double m =
      *std::max_element(log_estimates.begin(), log_estimates.end());
  std::vector<double> c(log_estimates.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = std::exp(log_estimates[i] - m);
    mean += c[i];
  }
  mean /= double(c.size());
  double sum_sq = 0.0;
  for (double v : c) {
    const double rel = v / mean - 1.0;
    sum_sq += rel * rel;
  }
  return std::sqrt(sum_sq / double(c.size()));
}

}  // namespace evd
