#include "evidenced/substmodel.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

namespace evd {

namespace {

// (i, j) pairs for the rho order AC, AG, AT, CG, CT, GT.
constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

void check_simplex_array(std::span<const double> x, const char* name) {
  double sum = 0.0;
  for (double v : x) {
    if (!(v > 0.0))
      throw InvalidInput(std::string(name) + ": components must be > 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidInput(std::string(name) + ": components must sum to 1");
}

}  // namespace

SubstitutionModel SubstitutionModel::jc69() { return SubstitutionModel{}; }

SubstitutionModel SubstitutionModel::gtr_gamma(const std::array<double, 4>& pi,
                                               const std::array<double, 6>& rho,
                                               double alpha, int n_categories) {
  SubstitutionModel m;
  m.kind = ModelKind::GtrGamma;
  m.pi = pi;
  m.rho = rho;
  m.alpha = alpha;
  m.n_categories = n_categories;
  m.validate();
  return m;
}

SubstitutionModel SubstitutionModel::from_params(ModelKind kind,
                                                 const PhyloParams& params,
                                                 int n_categories) {
  if (kind == ModelKind::JC69) return jc69();
  return gtr_gamma(params.pi, params.rho, params.alpha, n_categories);
}

void SubstitutionModel::validate() const {
  check_simplex_array(pi, "pi");
  check_simplex_array(rho, "rho");
  if (kind == ModelKind::JC69) {
    for (double v : pi)
      if (std::abs(v - 0.25) > 1e-12)
        throw InvalidInput("JC69 requires uniform pi");
    for (double v : rho)
      if (std::abs(v - 1.0 / 6) > 1e-12)
        throw InvalidInput("JC69 requires uniform rho");
  }
  if (n_categories < 1) throw InvalidInput("n_categories must be >= 1");
  if (n_categories > 1 && !(alpha > 0.0))
    throw InvalidInput("gamma shape alpha must be positive");
}

RateMatrix build_q(const SubstitutionModel& model) {
  model.validate();
  RateMatrix out;
  out.pi = model.pi;
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  for (int p = 0; p < 6; ++p) {
    const int i = kPairs[p][0];
    const int j = kPairs[p][1];
    q(i, j) = model.rho[p] * model.pi[j];
    q(j, i) = model.rho[p] * model.pi[i];
  }
  for (int i = 0; i < 4; ++i) q(i, i) = -q.row(i).sum();
  double rate = 0.0;
  for (int i = 0; i < 4; ++i) rate -= model.pi[i] * q(i, i);
  if (!(rate > 0.0)) throw NumericError("build_q: zero total rate");
  out.q = q / rate;
  out.scale = rate;
  return out;
}

TransitionEngine::TransitionEngine(const RateMatrix& rate) {
  Eigen::Vector4d sqrt_pi, inv_sqrt_pi;
  for (int i = 0; i < 4; ++i) {
    sqrt_pi[i] = std::sqrt(rate.pi[i]);
    inv_sqrt_pi[i] = 1.0 / sqrt_pi[i];
  }
  // Reversibility makes Pi^{1/2} Q Pi^{-1/2} symmetric.
  Eigen::Matrix4d sym =
      sqrt_pi.asDiagonal() * rate.q * inv_sqrt_pi.asDiagonal();
  sym = 0.5 * (sym + sym.transpose());  // scrub rounding asymmetry
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(sym);
  if (solver.info() != Eigen::Success)
    throw NumericError("transition_matrix: eigendecomposition failed");
  eigenvalues_ = solver.eigenvalues();
  left_ = inv_sqrt_pi.asDiagonal() * solver.eigenvectors();
  right_ = solver.eigenvectors().transpose() * sqrt_pi.asDiagonal();
}

Eigen::Matrix4d TransitionEngine::at(double t) const {
  if (t < 0.0) throw InvalidInput("transition_matrix: t must be >= 0");
  Eigen::Vector4d ev;
  for (int i = 0; i < 4; ++i) ev[i] = std::exp(eigenvalues_[i] * t);
  Eigen::Matrix4d p = left_ * ev.asDiagonal() * right_;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (p(i, j) < 0.0) {
        if (p(i, j) < -1e-12)
          throw NumericError("transition_matrix: entry below -1e-12");
        p(i, j) = 0.0;
      }
    }
  }
  return p;
}

Eigen::Matrix4d transition_matrix(const RateMatrix& rate, double t) {
  return TransitionEngine(rate).at(t);
}

std::vector<double> gamma_category_rates(double alpha, int n) {
  if (!(alpha > 0.0)) throw InvalidInput("gamma_category_rates: alpha <= 0");
  if (n < 2) throw InvalidInput("gamma_category_rates: n must be >= 2");
  // Boundaries of equal-probability bins of Gamma(alpha, rate alpha) in
  // unit-scale coordinates x = alpha * quantile.
  std::vector<double> rates(n);
  double prev_cdf_ap1 = 0.0;  // gamma_p(alpha + 1, boundary)
  for (int i = 0; i < n; ++i) {
    double cdf_ap1;
    if (i == n - 1) {
      cdf_ap1 = 1.0;
    } else {
      const double boundary =
          boost::math::gamma_p_inv(alpha, (i + 1.0) / n);
      cdf_ap1 = boost::math::gamma_p(alpha + 1.0, boundary);
    }
    // E[X | bin] for mean-1 gamma: n * (increment of the shape+1 CDF).
    rates[i] = n * (cdf_ap1 - prev_cdf_ap1);
    prev_cdf_ap1 = cdf_ap1;
  }
  double mean = 0.0;
  for (double r : rates) mean += r;
  mean /= n;
  for (double& r : rates) r /= mean;
  return rates;
}

std::vector<double> category_rates(const SubstitutionModel& model) {
  if (model.n_categories == 1) return {1.0};
  return gamma_category_rates(model.alpha, model.n_categories);
}

}  // namespace evd
