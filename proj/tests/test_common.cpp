#include <cmath>
#include <vector>

#include "doctest.h"
#include "evidenced/common.hpp"

using namespace evd;

TEST_CASE("log_sum_exp matches direct evaluation and survives extremes") {
  std::vector<double> v{0.0, std::log(2.0), std::log(3.0)};
  CHECK(log_sum_exp(v) == doctest::Approx(std::log(6.0)).epsilon(1e-14));

  std::vector<double> big{10000.0, 10000.0};
  CHECK(log_sum_exp(big) ==
        doctest::Approx(10000.0 + std::log(2.0)).epsilon(1e-14));
  std::vector<double> small{-10000.0, -10000.0};
  CHECK(log_sum_exp(small) ==
        doctest::Approx(-10000.0 + std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("mean_var uses the n-1 denominator") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const MeanVar mv = mean_var(v);
  CHECK(mv.mean == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(mv.var == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("unit ball volumes d = 1, 2, 3") {
  CHECK(log_unit_ball_volume(1) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(log_unit_ball_volume(2) == doctest::Approx(std::log(M_PI)).epsilon(1e-14));
  CHECK(log_unit_ball_volume(3) ==
        doctest::Approx(std::log(4.0 * M_PI / 3.0)).epsilon(1e-14));
}

TEST_CASE("rng streams are deterministic and spawn gives distinct substreams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  Rng c(42);
  Rng s0 = c.spawn(0), s1 = c.spawn(1);
  CHECK(s0.bits() != s1.bits());
  // spawning is a pure function of (seed, stream)
  CHECK(c.spawn(0).bits() == Rng(42).spawn(0).bits());
}

TEST_CASE("rng uniform range and normal moments") {
  Rng rng(7);
  double mean = 0.0, sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  sq /= n;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(sq - 1.0) < 0.03);
}

TEST_CASE("categorical inverts cumulative probabilities") {
  Rng rng(11);
  std::vector<double> probs{0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 30000; ++i) ++counts[rng.categorical(probs)];
  CHECK(std::abs(counts[0] / 30000.0 - 0.2) < 0.02);
  CHECK(std::abs(counts[1] / 30000.0 - 0.5) < 0.02);
  CHECK(std::abs(counts[2] / 30000.0 - 0.3) < 0.02);
}
