#ifndef EVIDENCED_TRANSFORMS_HPP
#define EVIDENCED_TRANSFORMS_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

#include "evidenced/common.hpp"

namespace evd {

// Maps constrained model parameters (positives, simplices) to unconstrained
// coordinates and back.  All log-Jacobians are those of the inverse
// (unconstrained -> constrained) map, i.e. the correction added to a
// constrained-space log density to obtain the transformed density.

struct TransformResult {
  std::vector<double> unconstrained;
  double log_jacobian = 0.0;
};

// Elementwise log of positive values; log-Jacobian = sum of the
// unconstrained values.
TransformResult log_transform(std::span<const double> values);

// Additive log-ratio: y_i = log(x_i / x_ref) for i != ref, given a point on
// the interior of the D-simplex.  Default reference is the last component.
// log-Jacobian of the inverse (additive logistic) map = sum_i log x_i.
TransformResult alr(std::span<const double> simplex, int ref = -1);

// Inverse additive logistic; stable for |y| up to ~700.
std::vector<double> alr_inv(std::span<const double> y, int ref = -1);

// log-Jacobian of the additive logistic map evaluated from unconstrained
// coordinates directly (matches alr(...).log_jacobian at the image point).
double alr_inv_log_jacobian(std::span<const double> y);

enum class ModelKind { JC69, GtrGamma };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct PhyloParams {
  std::vector<double> branch_lengths;
  std::array<double, 4> pi{0.25, 0.25, 0.25, 0.25};
  std::array<double, 6> rho{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6,
                            1.0 / 6};
  double alpha = 1.0;  // gamma shape, used by GtrGamma only
};

// Fixed, versioned packing of a phylogenetic parameter set into one
// unconstrained vector: branch lengths (log), then pi (alr, 3 coords),
// then rho (alr, 5 coords), then log alpha, as applicable to the kind.
class Packing {
 public:
  Packing(ModelKind kind, int n_branches);

  ModelKind kind() const { return kind_; }
  int n_branches() const { return n_branches_; }
  int dim() const;

  // Column names in packing order (bl.0..., pi.alr.0..., rho.alr.0...,
  // log.alpha), suitable for the chain CSV header.
  std::vector<std::string> column_names() const;

  static constexpr const char* kVersion = "evd-packing-1";

  struct Packed {
    Vector unconstrained;
    double log_jacobian = 0.0;
  };
  Packed pack(const PhyloParams& params) const;

  struct Unpacked {
    PhyloParams params;
    double log_jacobian = 0.0;
  };
  Unpacked unpack(const Vector& unconstrained) const;

 private:
  ModelKind kind_;
  int n_branches_;
};

}  // namespace evd

#endif  // EVIDENCED_TRANSFORMS_HPP
