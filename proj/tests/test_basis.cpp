#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nskrig/basis.hpp"
#include "nskrig/errors.hpp"
#include "nskrig/stationary.hpp"

using namespace nskrig;

namespace {

// Random SPD matrix with a decaying spectrum.
Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd evals(n);
  for (int i = 0; i < n; ++i) evals(i) = std::pow(0.6, i) + 0.01;
  return q * evals.asDiagonal() * q.transpose();
}

} // namespace

TEST_CASE("empirical covariance") {
  SUBCASE("single replicate gives a rank-1 outer product") {
    Eigen::MatrixXd y(1, 3);
    y << 1.0, -2.0, 0.5;
    const EmpiricalCovariance c = empirical_cov(y);
    CHECK(c.replicates == 1);
    CHECK((c.matrix - y.row(0).transpose() * y.row(0)).norm() <= 1e-14);
  }

  SUBCASE("two unit replicates give half the identity") {
    Eigen::MatrixXd y(2, 2);
    y << 1.0, 0.0, 0.0, 1.0;
    const EmpiricalCovariance c = empirical_cov(y);
    CHECK((c.matrix - 0.5 * Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-15);
  }

  SUBCASE("zero replicates rejected") {
    CHECK_THROWS_AS((void)empirical_cov(Eigen::MatrixXd(0, 4)), input_error);
  }

  SUBCASE("Monte Carlo convergence to a known covariance") {
    std::mt19937_64 rng(71);
    const Eigen::MatrixXd c = random_spd(5, rng);
    const Eigen::LLT<Eigen::MatrixXd> llt(c);
    const Eigen::MatrixXd l = llt.matrixL();
    std::normal_distribution<double> normal(0.0, 1.0);
    const int reps = 10000;
    Eigen::MatrixXd y(reps, 5);
    for (int r = 0; r < reps; ++r) {
      Eigen::VectorXd z(5);
      for (int i = 0; i < 5; ++i) z(i) = normal(rng);
      y.row(r) = (l * z).transpose();
    }
    const EmpiricalCovariance emp = empirical_cov(y);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        const double se = std::sqrt((c(i, i) * c(j, j) + c(i, j) * c(i, j)) / reps);
        CHECK(std::abs(emp.matrix(i, j) - c(i, j)) <= 3.5 * se);
      }
    }
  }
}

TEST_CASE("eof decomposition") {
  SUBCASE("diagonal input") {
    Eigen::MatrixXd c = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    const EOFBasis b = eof_decompose(c);
    CHECK(b.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(b.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(b.eigenvectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(b.eigenvectors(1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("hand eigendecomposition of [[2,1],[1,2]]") {
    Eigen::MatrixXd c(2, 2);
    c << 2.0, 1.0, 1.0, 2.0;
    const EOFBasis b = eof_decompose(c);
    CHECK(b.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(b.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("identity: reconstruction and orthonormality only") {
    const EOFBasis b = eof_decompose(Eigen::MatrixXd::Identity(4, 4));
    CHECK((b.eigenvectors.transpose() * b.eigenvectors - Eigen::MatrixXd::Identity(4, 4))
              .norm() <= 1e-10);
    const Eigen::MatrixXd rec =
        b.eigenvectors * b.eigenvalues.asDiagonal() * b.eigenvectors.transpose();
    CHECK((rec - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-10);
  }

  SUBCASE("asymmetric input rejected") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 0.7, 0.1, 1.0;
    CHECK_THROWS_AS((void)eof_decompose(bad), input_error);
  }

  SUBCASE("descending order and reconstruction on random SPD input") {
    std::mt19937_64 rng(73);
    const Eigen::MatrixXd c = random_spd(8, rng);
    const EOFBasis b = eof_decompose(c);
    for (int i = 1; i < 8; ++i) CHECK(b.eigenvalues(i) <= b.eigenvalues(i - 1));
    const Eigen::MatrixXd rec =
        b.eigenvectors * b.eigenvalues.asDiagonal() * b.eigenvectors.transpose();
    CHECK((rec - c).norm() / c.norm() <= 1e-10);
  }
}

TEST_CASE("truncated expansion") {
  SUBCASE("full rank reproduces the input") {
    std::mt19937_64 rng(79);
    const Eigen::MatrixXd c = random_spd(7, rng);
    const EOFBasis b = eof_decompose(c);
    CHECK((kl_truncated_cov(b, 7) - c).norm() / c.norm() <= 1e-10);
  }

  SUBCASE("rank 1 of diag(3,1)") {
    Eigen::MatrixXd c = Eigen::Vector2d(3.0, 1.0).asDiagonal();
    const Eigen::MatrixXd t = kl_truncated_cov(eof_decompose(c), 1);
    Eigen::MatrixXd want = Eigen::Vector2d(3.0, 0.0).asDiagonal();
    CHECK((t - want).norm() <= 1e-13);
  }

  SUBCASE("rank bounds enforced") {
    const EOFBasis b = eof_decompose(Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS((void)kl_truncated_cov(b, 0), input_error);
    CHECK_THROWS_AS((void)kl_truncated_cov(b, 4), input_error);
  }

  SUBCASE("truncation error equals the spectral residual and is monotone") {
    std::mt19937_64 rng(83);
    for (int rep = 0; rep < 20; ++rep) {
      const int n = 4 + static_cast<int>(rep % 5);
      const Eigen::MatrixXd c = random_spd(n, rng);
      const EOFBasis b = eof_decompose(c);
      double prev = 1e300;
      for (int rank = 1; rank <= n; ++rank) {
        const double err = (c - kl_truncated_cov(b, rank)).norm();
        const double residual = std::sqrt(b.eigenvalues.tail(n - rank).squaredNorm());
        CHECK(err == doctest::Approx(residual).epsilon(1e-9));
        CHECK(err <= prev + 1e-12);
        prev = err;
      }
    }
  }

  SUBCASE("truncations stay nonnegative definite") {
    std::mt19937_64 rng(89);
    const Eigen::MatrixXd c = random_spd(6, rng);
    const EOFBasis b = eof_decompose(c);
    for (int rank = 1; rank <= 6; ++rank) {
      CHECK(nnd_check(kl_truncated_cov(b, rank), 1e-10).ok);
    }
  }

  SUBCASE("spectral truncation beats random rank-L projections") {
    std::mt19937_64 rng(97);
    const Eigen::MatrixXd c = random_spd(6, rng);
    const EOFBasis b = eof_decompose(c);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int rank = 1; rank <= 5; ++rank) {
      const double spectral_err = (c - kl_truncated_cov(b, rank)).norm();
      for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd g(6, rank);
        for (int i = 0; i < 6; ++i) {
          for (int j = 0; j < rank; ++j) g(i, j) = normal(rng);
        }
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        const Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(rank);
        const Eigen::MatrixXd proj = q * q.transpose() * c * q * q.transpose();
        CHECK(spectral_err <= (c - proj).norm() + 1e-12);
      }
    }
  }
}
