#include "evidenced/transforms.hpp"

#include <algorithm>
#include <cmath>

namespace evd {

namespace {

constexpr double kSimplexSumTol = 1e-9;

void check_simplex(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) throw InvalidInput("alr: simplex component must be > 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexSumTol)
    throw InvalidInput("alr: simplex components must sum to 1, got " +
                       std::to_string(sum));
}

int resolve_ref(int ref, std::size_t d) {
  if (ref < 0) return static_cast<int>(d) - 1;
  if (ref >= static_cast<int>(d))
    throw InvalidInput("alr: reference index out of range");
  return ref;
}

}  // namespace

TransformResult log_transform(std::span<const double> values) {
  TransformResult out;
  out.unconstrained.reserve(values.size());
  for (double v : values) {
    if (!(v > 0.0))
      throw InvalidInput("log_transform: values must be positive");
    const double y = std::log(v);
    out.unconstrained.push_back(y);
    out.log_jacobian += y;
  }
  return out;
}

TransformResult alr(std::span<const double> simplex, int ref) {
  check_simplex(simplex);
  const int d = static_cast<int>(simplex.size());
  const int r = resolve_ref(ref, simplex.size());
  TransformResult out;
  out.unconstrained.reserve(simplex.size() - 1);
  const double log_ref = std::log(simplex[r]);
  for (int i = 0; i < d; ++i) {
    if (i == r) continue;
    out.unconstrained.push_back(std::log(simplex[i]) - log_ref);
  }
  for (double v : simplex) out.log_jacobian += std::log(v);
  return out;
}

std::vector<double> alr_inv(std::span<const double> y, int ref) {
  const std::size_t d = y.size() + 1;
  const int r = resolve_ref(ref, d);
  std::vector<double> z(d, 0.0);
  for (std::size_t i = 0, j = 0; i < d; ++i) {
    if (static_cast<int>(i) == r) continue;
    z[i] = y[j++];
  }
  const double m = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - m);
  std::vector<double> x(d);
  for (std::size_t i = 0; i < d; ++i) x[i] = std::exp(z[i] - m) / denom;
  return x;
}

double alr_inv_log_jacobian(std::span<const double> y) {
  const std::size_t d = y.size() + 1;
  std::vector<double> z(y.begin(), y.end());
  z.push_back(0.0);
  const double lse = log_sum_exp(z);
  double sum_y = 0.0;
  for (double v : y) sum_y += v;
  return sum_y - static_cast<double>(d) * lse;
}

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::JC69 ? "jc69" : "gtr-gamma";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "jc69") return ModelKind::JC69;
  if (name == "gtr-gamma" || name == "gtr+gamma" || name == "gtrgamma")
    return ModelKind::GtrGamma;
  throw InvalidInput("unknown model kind: " + name);
}

Packing::Packing(ModelKind kind, int n_branches)
    : kind_(kind), n_branches_(n_branches) {
  if (n_branches < 1) throw InvalidInput("Packing: need at least one branch");
}

int Packing::dim() const {
  return kind_ == ModelKind::JC69 ? n_branches_ : n_branches_ + 3 + 5 + 1;
}

std::vector<std::string> Packing::column_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_branches_; ++i)
    names.push_back("bl." + std::to_string(i));
  if (kind_ == ModelKind::GtrGamma) {
    for (int i = 0; i < 3; ++i) names.push_back("pi.alr." + std::to_string(i));
    for (int i = 0; i < 5; ++i)
      names.push_back("rho.alr." + std::to_string(i));
    names.push_back("log.alpha");
  }
  return names;
}

Packing::Packed Packing::pack(const PhyloParams& params) const {
  if (static_cast<int>(params.branch_lengths.size()) != n_branches_)
    throw InvalidInput("pack: branch-length block has wrong size");
  Packed out;
  out.unconstrained.resize(dim());
  int pos = 0;
  try {
    const auto bl = log_transform(params.branch_lengths);
    for (double v : bl.unconstrained) out.unconstrained[pos++] = v;
    out.log_jacobian += bl.log_jacobian;
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("pack: branch-length block: ") + e.what());
  }
  if (kind_ == ModelKind::GtrGamma) {
    try {
      const auto pi = alr(params.pi);
      for (double v : pi.unconstrained) out.unconstrained[pos++] = v;
      out.log_jacobian += pi.log_jacobian;
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("pack: pi block: ") + e.what());
    }
    try {
      const auto rho = alr(params.rho);
      for (double v : rho.unconstrained) out.unconstrained[pos++] = v;
      out.log_jacobian += rho.log_jacobian;
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("pack: rho block: ") + e.what());
    }
    if (!(params.alpha > 0.0))
      throw InvalidInput("pack: alpha block: alpha must be positive");
    out.unconstrained[pos] = std::log(params.alpha);
    out.log_jacobian += out.unconstrained[pos];
    ++pos;
  }
  return out;
}

Packing::Unpacked Packing::unpack(const Vector& u) const {
  if (u.size() != dim())
    throw InvalidInput("unpack: vector has dimension " +
                       std::to_string(u.size()) + ", expected " +
                       std::to_string(dim()));
  Unpacked out;
  out.params.branch_lengths.resize(n_branches_);
  for (int i = 0; i < n_branches_; ++i) {
    out.params.branch_lengths[i] = std::exp(u[i]);
    out.log_jacobian += u[i];
  }
  if (kind_ == ModelKind::GtrGamma) {
    int pos = n_branches_;
    std::vector<double> y_pi(u.data() + pos, u.data() + pos + 3);
    const auto pi = alr_inv(y_pi);
    std::copy(pi.begin(), pi.end(), out.params.pi.begin());
    out.log_jacobian += alr_inv_log_jacobian(y_pi);
    pos += 3;
    std::vector<double> y_rho(u.data() + pos, u.data() + pos + 5);
    const auto rho = alr_inv(y_rho);
    std::copy(rho.begin(), rho.end(), out.params.rho.begin());
    out.log_jacobian += alr_inv_log_jacobian(y_rho);
    pos += 5;
    out.params.alpha = std::exp(u[pos]);
    out.log_jacobian += u[pos];
  }
  return out;
}

}  // namespace evd
