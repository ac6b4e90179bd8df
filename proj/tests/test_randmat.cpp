#include "doctest.h"

#include <cmath>
#include <vector>

#include "amalgam/randmat.hpp"
#include "amalgam/rng.hpp"

using namespace amalgam;
namespace rm = amalgam::rmt;
using alg::Matrix;

TEST_CASE("variance profile validation and accessors") {
  auto p = rm::VarianceProfile::constant(16, 2.0);
  CHECK(p.g() == 16);
  CHECK(p.integral() == doctest::Approx(2.0));
  CHECK(p.value(0.3, 0.99) == doctest::Approx(2.0));
  CHECK(p.row_integrals()(5) == doctest::Approx(2.0));

  auto q = rm::VarianceProfile::from_function(
      32, [](double x, double y) { return x + y; });
  CHECK(q.sigma(3, 9) == q.sigma(9, 3));
  CHECK(q.integral() == doctest::Approx(1.0).epsilon(1e-12));
  // r(x) = x + 1/2 at midpoints
  CHECK(q.row_integrals()(0) == doctest::Approx((0.5 / 32) + 0.5).epsilon(1e-12));

  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(4, 4);
  bad(1, 2) = 3.0;  // asymmetric
  CHECK_THROWS_AS(rm::VarianceProfile{bad}, std::invalid_argument);
  Eigen::MatrixXd neg = Eigen::MatrixXd::Constant(4, 4, -1.0);
  CHECK_THROWS_AS(rm::VarianceProfile{neg}, std::invalid_argument);
  Eigen::MatrixXd rect = Eigen::MatrixXd::Ones(4, 5);
  CHECK_THROWS_AS(rm::VarianceProfile{rect}, std::invalid_argument);
}

TEST_CASE("band sampler: hermitian, zero profile, entry variance") {
  Rng rng(3);
  auto p = rm::VarianceProfile::from_function(
      16, [](double x, double y) { return 0.5 + x * y; });
  const int n = 32;
  Matrix m = rm::sample_band_matrix(n, p, rng);
  CHECK(alg::frob(Matrix(m - m.adjoint())) < 1e-14);
  for (int i = 0; i < n; ++i) CHECK(std::abs(std::imag(m(i, i))) == 0.0);

  auto z = rm::VarianceProfile::constant(16, 0.0);
  CHECK(rm::sample_band_matrix(8, z, rng).norm() == 0.0);
  CHECK_THROWS_AS(rm::sample_band_matrix(1, p, rng), std::invalid_argument);

  // pooled variance of a fixed off-diagonal entry within a 5-SE band
  const int trials = 1200;
  int i = 3, j = 17;
  double acc = 0.0;
  Rng vr(44);
  for (int t = 0; t < trials; ++t) {
    Matrix s = rm::sample_band_matrix(n, p, vr);
    acc += std::norm(s(i, j));
  }
  double est = acc / trials;
  double truth = p.value((i + 0.5) / n, (j + 0.5) / n) / n;
  CHECK(std::abs(est - truth) < 5.0 * truth / std::sqrt(double(trials)));

  // determinism by seed
  Rng a(7), b(7);
  CHECK(alg::frob(Matrix(rm::sample_band_matrix(16, p, a) -
                         rm::sample_band_matrix(16, p, b))) == 0.0);
}

TEST_CASE("empirical spectrum: normalization, point mass, low moments") {
  std::vector<Matrix> zeros{Matrix::Zero(6, 6), Matrix::Zero(6, 6)};
  auto h = rm::empirical_spectrum(zeros, 11);
  double total = 0.0;
  for (double m : h.masses) total += m;
  CHECK(std::abs(total - 1.0) < 1e-12);
  // all mass in the bin containing 0
  for (std::size_t b = 0; b < h.masses.size(); ++b) {
    bool holds_zero = h.edges[b] <= 0.0 && 0.0 < h.edges[b + 1];
    CHECK(h.masses[b] == doctest::Approx(holds_zero ? 1.0 : 0.0));
  }
  CHECK(h.moments[0] == doctest::Approx(1.0));
  CHECK(h.moments[2] == doctest::Approx(0.0));

  Rng rng(5);
  auto p = rm::VarianceProfile::constant(16, 1.0);
  std::vector<Matrix> samples;
  for (int t = 0; t < 3; ++t) samples.push_back(rm::sample_band_matrix(128, p, rng));
  auto hs = rm::empirical_spectrum(samples, 40);
  CHECK(hs.trials == 3);
  CHECK(std::abs(hs.moments[2] - 1.0) < 0.15);
  CHECK(std::abs(hs.moments[1]) < 0.1);
}

TEST_CASE("semicircle cdf and KS distance") {
  CHECK(rm::semicircle_cdf(-2.0) == 0.0);
  CHECK(rm::semicircle_cdf(0.0) == doctest::Approx(0.5));
  CHECK(rm::semicircle_cdf(2.0) == 1.0);
  CHECK(rm::semicircle_cdf(1.0) > rm::semicircle_cdf(-1.0));

  // quantile sample of the semicircle itself: KS ~ 1/(2N)
  const int N = 500;
  std::vector<double> quant(N);
  for (int i = 0; i < N; ++i) {
    double target = (i + 0.5) / N, lo = -2.0, hi = 2.0;
    for (int it = 0; it < 60; ++it) {
      double mid = 0.5 * (lo + hi);
      (rm::semicircle_cdf(mid) < target ? lo : hi) = mid;
    }
    quant[i] = 0.5 * (lo + hi);
  }
  CHECK(rm::ks_distance_semicircle(quant) < 2e-3);

  std::vector<double> off(100, 3.0);
  CHECK(rm::ks_distance_semicircle(off) > 0.9);
}

TEST_CASE("limit moments: Catalan at constant profiles, exact scaling") {
  auto p = rm::VarianceProfile::constant(64, 1.0);
  auto m = rm::limit_moments_band(p, 8);
  std::vector<double> cat{1, 0, 1, 0, 2, 0, 5, 0, 14};
  REQUIRE(m.size() == 9);
  for (int i = 0; i <= 8; ++i) CHECK(m[i] == doctest::Approx(cat[i]).epsilon(1e-12));

  auto pc = rm::VarianceProfile::constant(32, 0.7);
  auto mc = rm::limit_moments_band(pc, 8);
  for (int i = 0; i <= 4; ++i)
    CHECK(mc[2 * i] == doctest::Approx(std::pow(0.7, i) * cat[2 * i]).epsilon(1e-12));

  CHECK_THROWS_AS(rm::limit_moments_band(p, 5), std::invalid_argument);
  CHECK_THROWS_AS(
      rm::limit_moments_band(rm::VarianceProfile::constant(8, 1.0), 4),
      std::invalid_argument);
}

TEST_CASE("limit moments: order-2 and order-4 against direct quadrature") {
  auto p = rm::VarianceProfile::from_function(
      48, [](double x, double y) { return 0.3 + x * y + 0.2 * std::cos(3 * (x - y)); });
  int g = p.g();
  auto m = rm::limit_moments_band(p, 4);

  double m2 = 0.0;
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) m2 += p.sigma(i, j);
  m2 /= g * g;
  CHECK(m[2] == doctest::Approx(m2).epsilon(1e-13));

  // m4 = int [ int sigma(x,y) r(y) dy + r(x)^2 ] dx with r the row integral
  double m4 = 0.0;
  for (int i = 0; i < g; ++i) {
    double ri = 0.0, inner = 0.0;
    for (int j = 0; j < g; ++j) {
      double rj = 0.0;
      for (int l = 0; l < g; ++l) rj += p.sigma(j, l);
      rj /= g;
      inner += p.sigma(i, j) * rj;
      ri += p.sigma(i, j);
    }
    inner /= g;
    ri /= g;
    m4 += inner + ri * ri;
  }
  m4 /= g;
  CHECK(m[4] == doctest::Approx(m4).epsilon(1e-12));
}

TEST_CASE("limit moments: x + y converges to the analytic fourth moment") {
  auto mk = [](int g) {
    return rm::limit_moments_band(
        rm::VarianceProfile::from_function(
            g, [](double x, double y) { return x + y; }),
        4);
  };
  auto m32 = mk(32), m64 = mk(64);
  double truth = 13.0 / 6.0;
  CHECK(std::abs(m64[4] - truth) < std::abs(m32[4] - truth) + 1e-15);
  CHECK(std::abs(m64[4] - truth) <= 2e-3);
  CHECK(m64[2] == doctest::Approx(1.0).epsilon(1e-12));

  // symmetry makes F(eta(r)) = F(r^2), so the excess over the semicircle
  // value is exactly twice the grid variance of the row integral
  auto p = rm::VarianceProfile::from_function(
      64, [](double x, double y) { return x + y; });
  Eigen::VectorXd r = p.row_integrals();
  double var = r.squaredNorm() / r.size() - std::pow(r.mean(), 2);
  CHECK(m64[4] - 2.0 * m64[2] * m64[2] == doctest::Approx(2.0 * var).epsilon(1e-12));
}

TEST_CASE("scalar free cumulants from moment lists") {
  auto sem = rm::scalar_free_cumulants({1, 0, 1, 0, 2, 0, 5, 0, 14});
  REQUIRE(sem.size() == 8);
  CHECK(sem[1] == doctest::Approx(1.0));
  for (int i = 0; i < 8; ++i)
    if (i != 1) CHECK(std::abs(sem[i]) < 1e-12);

  // Catalan numbers shifted by one are the free Poisson moments: kappa_n = 1
  auto poisson = rm::scalar_free_cumulants({1, 1, 2, 5, 14, 42});
  for (double kp : poisson) CHECK(kp == doctest::Approx(1.0));

  CHECK_THROWS_AS(rm::scalar_free_cumulants({2, 0, 1}), std::invalid_argument);
}

TEST_CASE("band verdict: the two routes agree on all three fixtures") {
  auto flat = rm::band_semicircle_verdict(rm::VarianceProfile::constant(64, 1.0), 6);
  CHECK(flat.constant_rows);
  CHECK(flat.moments_semicircular);
  CHECK(flat.worst_cumulant < 1e-12);
  CHECK(flat.kappa2 == doctest::Approx(1.0));

  auto tilted = rm::band_semicircle_verdict(
      rm::VarianceProfile::from_function(
          64, [](double x, double y) { return x + y; }),
      4);
  CHECK_FALSE(tilted.constant_rows);
  CHECK_FALSE(tilted.moments_semicircular);
  CHECK(tilted.row_deviation > 0.4);
  CHECK(std::abs(tilted.worst_cumulant - 1.0 / 6.0) < 2e-3);

  // non-constant profile with exactly constant rows: full cosine periods sum
  // to zero on the midpoint grid
  auto wave = rm::band_semicircle_verdict(
      rm::VarianceProfile::from_function(
          64,
          [](double x, double y) {
            return 1.0 + 0.5 * std::cos(2.0 * 3.14159265358979323846 * (x - y));
          }),
      6, 1e-12);
  CHECK(wave.constant_rows);
  CHECK(wave.row_deviation < 1e-12);
  CHECK(wave.moments_semicircular);
  CHECK(wave.worst_cumulant < 1e-10);
  CHECK(wave.kappa2 == doctest::Approx(1.0));
}

TEST_CASE("haar conjugation: exact invariances and k-trends") {
  auto rep = rm::haar_conjugation_experiment(2, {4, 8}, 15, 2, 99);
  REQUIRE(rep.ks.size() == 2);
  CHECK(rep.commutant_err[0] < 1e-12);
  CHECK(rep.commutant_err[1] < 1e-12);
  CHECK(rep.cyclic_moment_err[0] < 1e-11);
  CHECK(rep.cyclic_moment_err[1] < 1e-11);
  for (int m = 0; m < 2; ++m) CHECK(rep.power_norms[1][m] < rep.power_norms[0][m]);
  CHECK(rep.mixed_residual[1] < rep.mixed_residual[0]);
  CHECK(rep.mixed_residual[0] > 1e-4);  // finite k is only approximately free

  // bit-for-bit reproducible from the recorded seed
  auto rep2 = rm::haar_conjugation_experiment(2, {4, 8}, 15, 2, 99);
  CHECK(rep2.power_norms == rep.power_norms);
  CHECK(rep2.mixed_residual == rep.mixed_residual);
  CHECK(rep2.cyclic_moment_err == rep.cyclic_moment_err);

  CHECK_THROWS_AS(rm::haar_conjugation_experiment(1, {4}, 5, 2, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(rm::haar_conjugation_experiment(2, {}, 5, 2, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(rm::haar_conjugation_experiment(2, {1}, 5, 2, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(rm::haar_conjugation_experiment(2, {4}, 0, 2, 1),
                  std::invalid_argument);
}

TEST_CASE("block-trace powers match the conditional expectation") {
  alg::SubalgebraSpec diag;
  diag.blocks.assign(3, alg::DBlock{1, 1});
  alg::AlgebraContext ctx(3, 5, diag);
  Rng rng(21);
  Matrix u = Matrix::Zero(15, 15);
  std::vector<Matrix> ub;
  for (int i = 0; i < 3; ++i) {
    ub.push_back(alg::haar_unitary(5, rng));
    u.block(5 * i, 5 * i, 5, 5) = ub[i];
  }
  Matrix u2 = u * u;
  double direct = 0.0;
  for (int i = 0; i < 3; ++i) direct += std::norm((ub[i] * ub[i]).trace() / 5.0);
  CHECK(std::sqrt(direct) ==
        doctest::Approx(alg::frob(ctx.cond_exp_D_full(u2))).epsilon(1e-13));
}
