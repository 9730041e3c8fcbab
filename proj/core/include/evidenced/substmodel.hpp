#ifndef EVIDENCED_SUBSTMODEL_HPP
#define EVIDENCED_SUBSTMODEL_HPP

#include <array>
#include <vector>

#include "evidenced/common.hpp"
#include "evidenced/transforms.hpp"

namespace evd {

// Nucleotide order is A, C, G, T everywhere; rho order is AC, AG, AT, CG,
// CT, GT.

struct SubstitutionModel {
  ModelKind kind = ModelKind::JC69;
  std::array<double, 4> pi{0.25, 0.25, 0.25, 0.25};
  std::array<double, 6> rho{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6,
                            1.0 / 6};
  double alpha = 1.0;
  int n_categories = 1;  // 1 means no rate heterogeneity

  static SubstitutionModel jc69();
  static SubstitutionModel gtr_gamma(const std::array<double, 4>& pi,
                                     const std::array<double, 6>& rho,
                                     double alpha, int n_categories = 4);
  static SubstitutionModel from_params(ModelKind kind,
                                       const PhyloParams& params,
                                       int n_categories = 4);

  void validate() const;
};

// Reversible rate matrix, rescaled to one expected substitution per unit
// time: -sum_i pi_i q_ii = 1.
struct RateMatrix {
  Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
  double scale = 1.0;  // divisor applied to the raw rho*pi construction
  std::array<double, 4> pi{0.25, 0.25, 0.25, 0.25};
};

RateMatrix build_q(const SubstitutionModel& model);

// P(t) = exp(Qt) via the symmetrized eigendecomposition
// Pi^{1/2} Q Pi^{-1/2}.  The decomposition is computed once and reused.
class TransitionEngine {
 public:
  explicit TransitionEngine(const RateMatrix& rate);

  Eigen::Matrix4d at(double t) const;

 private:
  Eigen::Matrix4d left_;   // Pi^{-1/2} V
  Eigen::Matrix4d right_;  // V^T Pi^{1/2}
  Eigen::Vector4d eigenvalues_;
};

Eigen::Matrix4d transition_matrix(const RateMatrix& rate, double t);

// Equal-probability discrete-gamma rates (bin means of Gamma(alpha, alpha)),
// normalized so the rates average to 1.
std::vector<double> gamma_category_rates(double alpha, int n);

// Rates for a model: {1} when n_categories == 1, else the discrete-gamma
// rates for its alpha.
std::vector<double> category_rates(const SubstitutionModel& model);

}  // namespace evd

#endif  // EVIDENCED_SUBSTMODEL_HPP
