#include <cmath>
#include <vector>

#include "doctest.h"
#include "evidenced/transforms.hpp"

using namespace evd;

TEST_CASE("log transform and its jacobian") {
  std::vector<double> v{0.5, 2.0, 7.0};
  const auto r = log_transform(v);
  REQUIRE(r.unconstrained.size() == 3);
  CHECK(r.unconstrained[0] == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  // jacobian of exp is prod exp(y) -> log det = sum y = sum log v
  CHECK(r.log_jacobian ==
        doctest::Approx(std::log(0.5) + std::log(2.0) + std::log(7.0))
            .epsilon(1e-14));
}

TEST_CASE("alr oracle on (1/2, 1/4, 1/4)") {
  std::vector<double> x{0.5, 0.25, 0.25};
  const auto r = alr(x);
  REQUIRE(r.unconstrained.size() == 2);
  CHECK(r.unconstrained[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(r.unconstrained[1] == doctest::Approx(0.0).epsilon(1e-14));
  // log jacobian of the inverse map = sum log x_i
  CHECK(r.log_jacobian ==
        doctest::Approx(std::log(0.5) + 2.0 * std::log(0.25)).epsilon(1e-13));
  CHECK(alr_inv_log_jacobian(r.unconstrained) ==
        doctest::Approx(r.log_jacobian).epsilon(1e-13));
}

TEST_CASE("alr round trips within 1e-12") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const int D = 2 + int(rng.index(5));
    std::vector<double> x(D);
    double sum = 0.0;
    for (auto& xi : x) sum += xi = 0.05 + rng.uniform();
    for (auto& xi : x) xi /= sum;
    const auto y = alr(x);
    const auto back = alr_inv(y.unconstrained);
    REQUIRE(back.size() == x.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(back[i] == doctest::Approx(x[i]).epsilon(1e-12));
      s += back[i];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("alr inverse is stable for large coordinates") {
  std::vector<double> y{700.0, -700.0};
  const auto x = alr_inv(y);
  CHECK(std::isfinite(x[0]));
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(x[1] >= 0.0);
  CHECK(x[2] >= 0.0);
}

namespace {

// log |det| of the additive-logistic jacobian by central differences on the
// first D-1 simplex coordinates.
double fd_alr_log_jacobian(const std::vector<double>& y) {
  const std::size_t m = y.size();
  const double h = 1e-6;
  Eigen::MatrixXd jac(m, m);
  for (std::size_t j = 0; j < m; ++j) {
    auto hi = y, lo = y;
    hi[j] += h;
    lo[j] -= h;
    const auto xh = evd::alr_inv(hi);
    const auto xl = evd::alr_inv(lo);
    for (std::size_t i = 0; i < m; ++i)
      jac(Eigen::Index(i), Eigen::Index(j)) = (xh[i] - xl[i]) / (2.0 * h);
  }
  return std::log(std::abs(jac.determinant()));
}

}  // namespace

TEST_CASE("alr jacobian matches finite differences at 100 random points") {
  Rng rng(17);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 1 + rng.index(5);
    std::vector<double> y(m);
    for (auto& yi : y) yi = rng.uniform(-2.0, 2.0);
    CHECK(alr_inv_log_jacobian(y) ==
          doctest::Approx(fd_alr_log_jacobian(y)).epsilon(1e-6));
  }
}

TEST_CASE("packing dimensions and column names") {
  CHECK(Packing(ModelKind::JC69, 5).dim() == 5);
  CHECK(Packing(ModelKind::GtrGamma, 5).dim() == 14);  // 5 + 3 + 5 + 1
  CHECK(Packing(ModelKind::JC69, 9).dim() == 9);
  CHECK(Packing(ModelKind::GtrGamma, 9).dim() == 18);

  const auto names = Packing(ModelKind::GtrGamma, 2).column_names();
  REQUIRE(names.size() == 11);
  CHECK(names[0] == "bl.0");
  CHECK(names[2] == "pi.alr.0");
  CHECK(names[5] == "rho.alr.0");
  CHECK(names[10] == "log.alpha");
}

TEST_CASE("packing round trips within 1e-12") {
  Rng rng(5);
  for (ModelKind kind : {ModelKind::JC69, ModelKind::GtrGamma}) {
    for (int rep = 0; rep < 50; ++rep) {
      PhyloParams p;
      p.branch_lengths.resize(5);
      for (auto& b : p.branch_lengths) b = 0.01 + rng.uniform();
      if (kind == ModelKind::GtrGamma) {
        double s = 0.0;
        for (auto& x : p.pi) s += x = 0.05 + rng.uniform();
        for (auto& x : p.pi) x /= s;
        s = 0.0;
        for (auto& x : p.rho) s += x = 0.05 + rng.uniform();
        for (auto& x : p.rho) x /= s;
        p.alpha = 0.1 + 2.0 * rng.uniform();
      }
      const Packing packing(kind, 5);
      const auto packed = packing.pack(p);
      REQUIRE(packed.unconstrained.size() == packing.dim());
      const auto back = packing.unpack(packed.unconstrained);
      CHECK(back.log_jacobian ==
            doctest::Approx(packed.log_jacobian).epsilon(1e-10));
      for (std::size_t i = 0; i < p.branch_lengths.size(); ++i)
        CHECK(back.params.branch_lengths[i] ==
              doctest::Approx(p.branch_lengths[i]).epsilon(1e-12));
      if (kind == ModelKind::GtrGamma) {
        for (int i = 0; i < 4; ++i)
          CHECK(back.params.pi[i] == doctest::Approx(p.pi[i]).epsilon(1e-12));
        for (int i = 0; i < 6; ++i)
          CHECK(back.params.rho[i] ==
                doctest::Approx(p.rho[i]).epsilon(1e-12));
        CHECK(back.params.alpha == doctest::Approx(p.alpha).epsilon(1e-12));
      }
    }
  }
}
