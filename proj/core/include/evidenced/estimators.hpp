#ifndef EVIDENCED_ESTIMATORS_HPP
#define EVIDENCED_ESTIMATORS_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evidenced/inflation.hpp"

namespace evd {

// Posterior draws mapped to unconstrained space with their unnormalized
// log-target values.
struct LogDensitySample {
  Matrix draws;   // T x d
  Vector log_g;   // length T
  double ess = 0.0;  // effective sample size; 0 means "use T"

  Eigen::Index size() const { return draws.rows(); }
  Eigen::Index dim() const { return draws.cols(); }
  double effective_size() const { return ess > 0.0 ? ess : double(size()); }
  void validate() const;
};

enum class EvidenceMethod { IDR, HM, AM_prior, AM_posterior_surrogate };
std::string evidence_method_name(EvidenceMethod method);

struct EvidenceEstimate {
  double log_c = 0.0;            // natural-log scale
  double rmse_delta = 0.0;       // delta-method relative RMSE, 1/T variance
  double rmse_delta_ess = 0.0;   // same with ESS in place of T
  std::optional<double> rmse_boot;
  std::optional<double> rmse_mc;
  double ci_low = 0.0;
  double ci_high = 0.0;
  EvidenceMethod method = EvidenceMethod::IDR;
  std::optional<double> k_opt;   // IDR only
  // AM on posterior draws is only a surrogate score, not a marginal
  // likelihood; kept explicit so reports can flag it.
  bool is_surrogate = false;
  std::string data_fingerprint;  // optional provenance tag for BF checks
};

// log-mean-exp of the log-likelihoods.  sampled_from records whether the
// draws came from the prior (true AM) or the posterior (surrogate).
enum class SampledFrom { Prior, Posterior };
EvidenceEstimate arithmetic_mean(std::span<const double> log_likelihoods,
                                 SampledFrom sampled_from, double ess = 0.0);

// Harmonic mean of the likelihoods over posterior draws.  When
// literal_printed_rmse is set, rmse_delta omits the 1/n factor (matching
// some reported values in the literature); the default applies 1/ess like
// the other estimators.
EvidenceEstimate harmonic_mean(std::span<const double> log_likelihoods,
                               double ess = 0.0,
                               bool literal_printed_rmse = false);

// Generic GHM with instrumental density f; log_f must integrate to 1 over a
// support contained in g's (caller's contract).  log_f may return -inf
// (f = 0); NaN or +inf at a draw is an estimator breakdown.
EvidenceEstimate ghm(const LogDensitySample& sample, const LogDensityFn& log_f);

// LocalAscent is the default: in more than a few dimensions the best draw
// sits far from the mode, which misplaces the inflation plateau.
struct StandardizationChoice {
  bool enabled = true;
  ModePolicy mode_policy = ModePolicy::LocalAscent;
};

// Reusable IDR state: the standardization and per-draw geometry are
// computed once and shared across inflation masses, so a k-grid search
// costs one inflated-density pass per grid point.
//
// k is interpreted on the mode-normalized standardized scale (the density
// value at the center is treated as 1).  Posterior densities reach values
// like e^-7000, far outside double range, so an absolute-mass k would be
// unusable; with this convention grids like 1e-10..1e-2 work for any
// target, and for a target whose mode value is 1 (e.g. exp(-x^2/2)) the
// convention coincides with absolute mass.  The estimate itself is
// shift-invariant.
//
// Whitening fitted on the same draws it standardizes biases the estimate
// by O(d^2/T) (noticeable from d ~ 10 up), so for large enough samples the
// engine cross-fits: each half is whitened by the other half's covariance
// and the ratio statistics are pooled.  Small samples fall back to plain
// in-sample standardization.
class IdrEngine {
 public:
  IdrEngine(const LogDensitySample& sample, const LogDensityFn& log_g,
            StandardizationChoice standardization = {});

  EvidenceEstimate estimate(double k) const;

  // Per-draw g_Pk/g - 1 values behind estimate(k); the bootstrap resamples
  // these.
  std::vector<double> ratios_minus_one(double k) const;

  // Grid of inflation masses k_j = V_d(r_j) with plateau radii r_j
  // geometric between r_lo * median and r_hi * 90th-percentile of the
  // standardized draw norms.
  std::vector<double> auto_k_grid(int count = 12, double r_lo = 0.05,
                                  double r_hi = 1.0) const;

  double log_g0() const { return parts_.front().log_g0; }
  int dim() const { return d_; }
  bool cross_fitted() const { return parts_.size() > 1; }

 private:
  struct Part {
    Matrix draws;          // standardized
    Vector log_g_values;   // adjusted log target at the standardized draws
    Vector norms;
    LogDensityFn log_g_std;
    double log_g0 = 0.0;
  };
  void finish_part(Part& part);

  std::vector<Part> parts_;  // 1 (in-sample) or 2 (cross-fit halves)
  double shift_ = 0.0;       // mean of the parts' center log values
  double ess_ = 0.0;
  int d_ = 1;
  Eigen::Index n_ = 0;
};

EvidenceEstimate idr(const LogDensitySample& sample, const LogDensityFn& log_g,
                     double k, StandardizationChoice standardization = {});

struct KGridRow {
  double k = 0.0;
  bool valid = false;
  EvidenceEstimate estimate;
  std::string error;  // set when !valid
};

struct KGridResult {
  std::vector<KGridRow> grid;
  std::size_t selected_index = 0;
  const EvidenceEstimate& selected() const {
    return grid[selected_index].estimate;
  }
};

KGridResult idr_k_search(const LogDensitySample& sample,
                         const LogDensityFn& log_g,
                         std::span<const double> k_grid,
                         StandardizationChoice standardization = {},
                         int jobs = 1);

// Selector used by the grid search: index of the smallest rmse, ties broken
// toward the smaller k.  Exposed so externally computed (k, rmse) tables can
// be fed through the same rule.
std::size_t select_k_index(std::span<const double> k_values,
                           std::span<const double> rmse_values);

struct BootstrapResult {
  double value = 0.0;
  int n_failed = 0;
  bool unreliable = false;  // more than 10% of replicates failed
};

// Resamples round(ess) indices with replacement B times (pinned RNG:
// mt19937_64(seed), index = bits % T) and recomputes the estimator, which
// takes the resampled statistic and returns a log-scale estimate.
BootstrapResult bootstrap_rmse(
    std::span<const double> per_draw_statistic,
    const std::function<double(std::span<const double>)>& log_estimator,
    int B, double ess, std::uint64_t rng_seed);

// Root-mean-square relative deviation of natural-scale replicates around
// their natural-scale mean, from log-scale inputs.
double mc_replicate_rmse(std::span<const double> log_estimates);

}  // namespace evd

#endif  // EVIDENCED_ESTIMATORS_HPP
