#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "nskrig/engine.hpp"
#include "nskrig/errors.hpp"
#include "oracles.hpp"

using namespace nskrig;

namespace {

Location loc2(double x, double y) {
  Location s(2);
  s << x, y;
  return s;
}

std::vector<Location> random_locs(int n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<Location> locs;
  for (int i = 0; i < n; ++i) locs.push_back(loc2(unif(rng), unif(rng)));
  return locs;
}

SpatialDataset simulate_dataset(const CovarianceSpec& spec, const std::vector<Location>& locs,
                                std::uint64_t seed, int replicates = 1) {
  SpatialDataset data;
  data.locations = locs;
  data.values = simulate_gp(spec, locs, seed, replicates).values;
  return data;
}

FitOptions quick_options(std::uint64_t seed = 1) {
  FitOptions o;
  o.max_iterations = 300;
  o.restarts = 2;
  o.seed = seed;
  return o;
}

} // namespace

TEST_CASE("log_likelihood closed-form values") {
  SpatialDataset data;
  data.locations = {loc2(0.0, 0.0)};
  data.values = Eigen::MatrixXd::Zero(1, 1);
  StationaryIsoSpec unit;
  unit.params = {1.0, 1.0, 0.5};
  CHECK(log_likelihood(data, unit, 0.0) ==
        doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));

  // scaling y and sigma jointly by c shifts the log-likelihood by -n log c
  std::mt19937_64 rng(101);
  SpatialDataset big;
  big.locations = random_locs(6, rng);
  big.values = simulate_gp(unit, big.locations, 4).values;
  const double base = log_likelihood(big, unit, 0.0);
  const double c = 3.0;
  SpatialDataset scaled = big;
  scaled.values *= c;
  StationaryIsoSpec scaled_spec = unit;
  scaled_spec.params.variance *= c * c;
  CHECK(log_likelihood(scaled, scaled_spec, 0.0) ==
        doctest::Approx(base - 6.0 * std::log(c)).epsilon(1e-10));
}

TEST_CASE("log_likelihood matches the dense-inverse oracle") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 8; ++rep) {
    const int n = 5 + static_cast<int>(unif(rng) * 25);
    StationaryIsoSpec spec;
    spec.family = CorrFamily::Matern;
    spec.params = {0.5 + unif(rng), 0.1 + 0.4 * unif(rng), 0.5 + unif(rng)};
    const double nugget = 0.02 * unif(rng);
    SpatialDataset data = simulate_dataset(spec, random_locs(n, rng), 10 + rep);

    Eigen::MatrixXd c = build_cov_matrix(spec, data.locations);
    c.diagonal().array() += nugget;
    const double want = oracles::dense_gaussian_loglik(data.values.row(0).transpose(), c);
    const double got = log_likelihood(data, spec, nugget);
    CHECK(std::abs(got - want) <= 1e-9 * std::abs(want));
  }
}

TEST_CASE("replicate log-likelihood is additive") {
  std::mt19937_64 rng(107);
  StationaryIsoSpec spec;
  spec.params = {1.2, 0.3, 0.5};
  const std::vector<Location> locs = random_locs(12, rng);
  SpatialDataset data;
  data.locations = locs;
  data.values = simulate_gp(spec, locs, 21, 4).values;

  double sum = 0.0;
  for (int r = 0; r < 4; ++r) {
    SpatialDataset one;
    one.locations = locs;
    one.values = data.values.row(r);
    sum += log_likelihood(one, spec, 0.01);
  }
  const double joint = log_likelihood(data, spec, 0.01);
  CHECK(std::abs(joint - sum) <= 1e-10 * std::abs(joint));
}

TEST_CASE("kriging") {
  std::mt19937_64 rng(109);
  StationaryIsoSpec spec;
  spec.family = CorrFamily::Exponential;
  spec.params = {1.5, 0.4, 0.5};

  SUBCASE("exact interpolation with zero nugget") {
    SpatialDataset data = simulate_dataset(spec, random_locs(25, rng), 31);
    ModelFit fit;
    fit.spec = spec;
    fit.nugget = 0.0;
    const PredictionResult pred = krige(fit, data, data.locations);
    const double sd = std::sqrt(data.values.row(0).squaredNorm() / 25.0);
    for (int i = 0; i < 25; ++i) {
      CHECK(std::abs(pred.mean(i) - data.values(0, i)) <= 1e-8 * sd);
      CHECK(pred.standard_error(i) <= 1e-6);
    }
  }

  SUBCASE("independence limit far from the data") {
    SpatialDataset data = simulate_dataset(spec, random_locs(10, rng), 33);
    ModelFit fit;
    fit.spec = spec;
    const PredictionResult pred = krige(fit, data, {loc2(1e4, 1e4)});
    CHECK(pred.mean(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pred.standard_error(0) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-9));
  }

  SUBCASE("single observation scalar oracle") {
    SpatialDataset data;
    data.locations = {loc2(0.0, 0.0)};
    data.values = Eigen::MatrixXd::Constant(1, 1, 2.0);
    ModelFit fit;
    fit.spec = spec;
    fit.nugget = 0.3;
    const double d = 0.25;
    const PredictionResult pred = krige(fit, data, {loc2(d, 0.0)});
    const double c = 1.5 * std::exp(-d / 0.4);
    CHECK(pred.mean(0) == doctest::Approx(c * 2.0 / (1.5 + 0.3)).epsilon(1e-12));
    CHECK(pred.standard_error(0) ==
          doctest::Approx(std::sqrt(1.5 - c * c / (1.5 + 0.3))).epsilon(1e-12));
  }

  SUBCASE("standard error grows away from observations on a transect") {
    SpatialDataset data;
    for (int i = 0; i <= 8; ++i) data.locations.push_back(loc2(i * 1.0, 0.0));
    data.values = simulate_gp(spec, data.locations, 35).values;
    ModelFit fit;
    fit.spec = spec;
    fit.nugget = 0.0;
    const PredictionResult pred = krige(fit, data, {loc2(3.0, 0.0), loc2(3.5, 0.0)});
    CHECK(pred.standard_error(0) <= pred.standard_error(1));
    CHECK(pred.standard_error(0) >= 0.0);
  }

  SUBCASE("covariate-driven models require query covariates") {
    Eigen::VectorXd c1(2), ca(2);
    c1 << std::log(0.05), 0.0;
    ca << 0.0, 0.0;
    NsModel model;
    model.kernels = KernelField::covariate(c1, c1, ca);
    SpatialDataset data;
    data.locations = {loc2(0.0, 0.0), loc2(0.5, 0.5)};
    data.covariates = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    data.values = Eigen::MatrixXd::Zero(1, 2);
    ModelFit fit;
    fit.spec = model;
    CHECK_THROWS_AS((void)krige(fit, data, {loc2(0.2, 0.2)}), input_error);
  }
}

TEST_CASE("fit_mle basics") {
  std::mt19937_64 rng(113);
  StationaryIsoSpec truth;
  truth.family = CorrFamily::Exponential;
  truth.params = {1.0, 0.3, 0.5};
  SpatialDataset data = simulate_dataset(truth, random_locs(80, rng), 41);

  SUBCASE("fit never falls below its initialization and refits are fixed points") {
    FitTemplate tmpl = default_template(FitTemplate::Kind::StationaryIso, data,
                                        CorrFamily::Exponential);
    const double init_ll =
        log_likelihood(data, tmpl.initial, tmpl.initial_nugget);
    const ModelFit fit = fit_mle(data, tmpl, quick_options());
    CHECK(fit.log_likelihood >= init_ll - 1e-9);

    FitTemplate refit_tmpl = tmpl;
    refit_tmpl.initial = fit.spec;
    refit_tmpl.initial_nugget = fit.nugget;
    const ModelFit refit = fit_mle(data, refit_tmpl, quick_options());
    CHECK(std::abs(refit.log_likelihood - fit.log_likelihood) <= 1e-6);
  }

  SUBCASE("fitting is deterministic given data, template, and options") {
    FitTemplate tmpl = default_template(FitTemplate::Kind::StationaryIso, data,
                                        CorrFamily::Exponential);
    const ModelFit a = fit_mle(data, tmpl, quick_options(9));
    const ModelFit b = fit_mle(data, tmpl, quick_options(9));
    const auto& sa = std::get<StationaryIsoSpec>(a.spec);
    const auto& sb = std::get<StationaryIsoSpec>(b.spec);
    CHECK(sa.params.variance == sb.params.variance);
    CHECK(sa.params.range == sb.params.range);
    CHECK(a.nugget == b.nugget);
    CHECK(a.log_likelihood == b.log_likelihood);
  }
}

TEST_CASE("fit_mle recovery") {
  std::mt19937_64 rng(127);

  SUBCASE("single free parameter with the rest clamped to truth") {
    StationaryIsoSpec truth;
    truth.family = CorrFamily::Exponential;
    truth.params = {1.5, 0.4, 0.5};
    SpatialDataset data;
    data.locations = random_locs(100, rng);
    data.values = simulate_gp(truth, data.locations, 47, 8).values;

    FitTemplate tmpl;
    tmpl.kind = FitTemplate::Kind::StationaryIso;
    StationaryIsoSpec init = truth;
    init.params.variance = 0.4; // start away from truth
    tmpl.initial = init;
    tmpl.free_variance = true;
    tmpl.free_range = false;
    tmpl.free_nugget = false;
    tmpl.initial_nugget = 0.0;
    const ModelFit fit = fit_mle(data, tmpl, quick_options());
    const double got = std::get<StationaryIsoSpec>(fit.spec).params.variance;
    CHECK(std::abs(got - 1.5) / 1.5 <= 0.10);
    CHECK(std::get<StationaryIsoSpec>(fit.spec).params.range == 0.4); // clamped
  }

  SUBCASE("full exponential recovery within 30 percent") {
    StationaryIsoSpec truth;
    truth.family = CorrFamily::Exponential;
    truth.params = {1.0, 0.3, 0.5};
    const double truth_nugget = 0.05;
    SpatialDataset data;
    data.locations = random_locs(300, rng);
    data.values = simulate_gp(truth, data.locations, 53, 3).values;
    auto noise_rng = std::mt19937_64(999);
    std::normal_distribution<double> gauss(0.0, std::sqrt(truth_nugget));
    for (int r = 0; r < 3; ++r) {
      for (int i = 0; i < 300; ++i) data.values(r, i) += gauss(noise_rng);
    }

    FitTemplate tmpl = default_template(FitTemplate::Kind::StationaryIso, data,
                                        CorrFamily::Exponential);
    const ModelFit fit = fit_mle(data, tmpl, quick_options());
    const auto& p = std::get<StationaryIsoSpec>(fit.spec).params;
    CHECK(std::abs(p.variance - 1.0) <= 0.30);
    CHECK(std::abs(p.range - 0.3) / 0.3 <= 0.30);
    CHECK(std::abs(fit.nugget - truth_nugget) / truth_nugget <= 0.30);
    CHECK(fit.log_likelihood >= log_likelihood(data, truth, truth_nugget) - 1e-9);
  }
}

TEST_CASE("trend estimation by profiled GLS") {
  std::mt19937_64 rng(131);
  StationaryIsoSpec spec;
  spec.family = CorrFamily::Exponential;
  spec.params = {0.1, 0.2, 0.5};
  SpatialDataset data;
  data.locations = random_locs(120, rng);
  data.values = simulate_gp(spec, data.locations, 57).values;
  // add a linear trend 2 + 1.5 x - 0.8 y
  for (int i = 0; i < 120; ++i) {
    data.values(0, i) += 2.0 + 1.5 * data.locations[i](0) - 0.8 * data.locations[i](1);
  }
  FitTemplate tmpl = default_template(FitTemplate::Kind::StationaryIso, data,
                                      CorrFamily::Exponential);
  FitOptions options = quick_options();
  options.trend = TrendKind::Linear;
  const ModelFit fit = fit_mle(data, tmpl, options);
  REQUIRE(fit.trend_coefficients.size() == 3);
  CHECK(std::abs(fit.trend_coefficients(1) - 1.5) <= 0.5);
  CHECK(std::abs(fit.trend_coefficients(2) + 0.8) <= 0.5);
}

TEST_CASE("local kernel estimation") {
  SUBCASE("under-populated neighborhoods name the basis index") {
    SpatialDataset data;
    for (int i = 0; i < 12; ++i) data.locations.push_back(loc2(i * 0.01, 0.0));
    data.values = Eigen::MatrixXd::Zero(1, 12);
    CHECK_THROWS_WITH_AS(
        (void)estimate_local_kernels(data, {loc2(0.05, 0.0), loc2(5.0, 5.0)}, 0.2),
        doctest::Contains("basis index 1"), input_error);
  }

  SUBCASE("the kernel mapping reproduces the fitted local correlation") {
    // algebraic identity behind Sigma_m = A: the constant-field nonstationary
    // covariance with Gaussian g equals sigma^2 exp(-h^T A^{-1} h)
    Eigen::Matrix2d a;
    a << 0.05, 0.01, 0.01, 0.08;
    NsModel model;
    model.family = CorrFamily::Gaussian;
    model.sigma = ScalarField::constant(1.3);
    model.kernels = KernelField::constant(KernelMatrix(Eigen::MatrixXd(a)));
    AnisotropyMatrix am;
    am.matrix = a;
    std::mt19937_64 rng(137);
    std::uniform_real_distribution<double> unif(-0.3, 0.3);
    for (int i = 0; i < 40; ++i) {
      const Location s = loc2(unif(rng), unif(rng)), sp = loc2(unif(rng), unif(rng));
      const double dist = aniso_distance(s - sp, am);
      const double want = 1.3 * 1.3 * std::exp(-dist * dist);
      CHECK(std::abs(cov_ns(s, sp, model) - want) <= 1e-12 * std::max(1.0, want));
    }
  }

  SUBCASE("isotropic truth keeps the fitted eigenvalue ratio near 1") {
    StationaryAnisoSpec truth;
    truth.family = CorrFamily::Gaussian;
    truth.variance = 1.0;
    truth.anisotropy.matrix = 0.02 * Eigen::MatrixXd::Identity(2, 2);
    int good = 0;
    for (int seed = 0; seed < 5; ++seed) {
      std::mt19937_64 rng(200 + seed);
      SpatialDataset data = simulate_dataset(truth, random_locs(140, rng), 300 + seed);
      const std::vector<KernelMatrix> ks =
          estimate_local_kernels(data, {loc2(0.5, 0.5)}, 1.0, quick_options());
      const double ratio = ks[0].eigenvalue1() / ks[0].eigenvalue2();
      if (ratio >= 0.6 && ratio <= 1.67) ++good;
    }
    CHECK(good >= 4);
  }
}

TEST_CASE("two-stage fitting") {
  SUBCASE("a single basis reduces to a constant-kernel fit") {
    std::mt19937_64 rng(139);
    StationaryAnisoSpec truth;
    truth.family = CorrFamily::Gaussian;
    truth.variance = 1.0;
    truth.anisotropy.matrix = KernelMatrix::from_spectral(0.06, 0.02, 0.7).matrix();
    SpatialDataset data = simulate_dataset(truth, random_locs(150, rng), 61);

    TwoStageOptions options;
    options.fit = quick_options();
    options.family = CorrFamily::Gaussian;
    const ModelFit fit = fit_two_stage(data, {loc2(0.5, 0.5)}, 1.0, options);
    const auto& model = std::get<NsModel>(fit.spec);
    REQUIRE(model.kernels.kind() == KernelField::Kind::Mixture);
    REQUIRE(model.kernels.basis_kernels().size() == 1);
    // one component: the field is constant at the locally estimated kernel
    const Eigen::MatrixXd at_a = model.kernels.eval(loc2(0.1, 0.1)).matrix();
    const Eigen::MatrixXd at_b = model.kernels.eval(loc2(0.9, 0.3)).matrix();
    CHECK((at_a - at_b).norm() == 0.0);
    CHECK(std::isfinite(fit.log_likelihood));
  }

  SUBCASE("hold-out RMSE is competitive with the correctly specified fit") {
    std::mt19937_64 rng(151);
    StationaryAnisoSpec truth;
    truth.family = CorrFamily::Gaussian;
    truth.variance = 1.0;
    truth.anisotropy.matrix = KernelMatrix::from_spectral(0.08, 0.02, 0.5).matrix();
    const std::vector<Location> train_locs = random_locs(150, rng);
    const std::vector<Location> test_locs = random_locs(40, rng);
    std::vector<Location> all = train_locs;
    all.insert(all.end(), test_locs.begin(), test_locs.end());
    const FieldRealization field = simulate_gp(truth, all, 71);

    SpatialDataset train;
    train.locations = train_locs;
    train.values = field.values.leftCols(150);
    const Eigen::VectorXd test_values = field.values.rightCols(40).transpose();

    const FitTemplate stat_tmpl =
        default_template(FitTemplate::Kind::StationaryAniso, train, CorrFamily::Gaussian);
    const ModelFit stat_fit = fit_mle(train, stat_tmpl, quick_options());
    const Eigen::VectorXd stat_pred = krige(stat_fit, train, test_locs).mean;

    TwoStageOptions options;
    options.fit = quick_options();
    options.family = CorrFamily::Gaussian;
    const std::vector<Location> basis = {loc2(0.25, 0.25), loc2(0.75, 0.25), loc2(0.25, 0.75),
                                         loc2(0.75, 0.75)};
    const ModelFit two_fit = fit_two_stage(train, basis, 0.6, options);
    const Eigen::VectorXd two_pred = krige(two_fit, train, test_locs).mean;

    const double stat_rmse = std::sqrt((stat_pred - test_values).squaredNorm() / 40.0);
    const double two_rmse = std::sqrt((two_pred - test_values).squaredNorm() / 40.0);
    CHECK(two_rmse <= 1.1 * stat_rmse);
  }

  SUBCASE("two-region simulation recovers the angle ordering") {
    std::vector<Location> basis = {loc2(0.5, 0.5), loc2(2.5, 0.5)};
    std::vector<KernelMatrix> truth_kernels = {KernelMatrix::from_spectral(0.09, 0.01, 0.3),
                                               KernelMatrix::from_spectral(0.09, 0.01, 1.2)};
    NsModel truth;
    truth.family = CorrFamily::Gaussian;
    truth.kernels = KernelField::mixture(basis, truth_kernels, 0.4);

    std::mt19937_64 rng(149);
    std::uniform_real_distribution<double> ux(0.0, 3.0), uy(0.0, 1.0);
    std::vector<Location> locs;
    for (int i = 0; i < 320; ++i) locs.push_back(loc2(ux(rng), uy(rng)));
    SpatialDataset data = simulate_dataset(truth, locs, 67);

    const std::vector<KernelMatrix> ks =
        estimate_local_kernels(data, basis, 0.55, quick_options());
    // angles move in the correct direction across the two regions
    CHECK(ks[1].angle() > ks[0].angle());
  }
}
