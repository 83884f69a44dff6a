#include "nskrig/engine.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nskrig/errors.hpp"
#include "nskrig/rng.hpp"
#include "nskrig/simplex.hpp"

namespace nskrig {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kPenalty = 1e12;

double sample_variance(const Eigen::MatrixXd& values) {
  const double mean = values.mean();
  const double n = static_cast<double>(values.size());
  return (values.array() - mean).square().sum() / std::max(n - 1.0, 1.0);
}

double domain_diameter(const std::vector<Location>& locs) {
  if (locs.empty()) return 1.0;
  Eigen::VectorXd lo = locs[0], hi = locs[0];
  for (const auto& s : locs) {
    lo = lo.cwiseMin(s);
    hi = hi.cwiseMax(s);
  }
  const double d = (hi - lo).norm();
  return d > 0.0 ? d : 1.0;
}

struct ProfiledLikelihood {
  double value = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
};

// Log-likelihood with the trend coefficients profiled out by GLS. With an
// empty design (TrendKind::Zero) this is the plain zero-mean likelihood.
ProfiledLikelihood profiled_log_likelihood(const SpatialDataset& data, const CovarianceSpec& spec,
                                           double nugget, TrendKind trend) {
  const int n = data.n();
  const int r = data.replicates();
  Eigen::MatrixXd cy = build_cov_matrix(spec, data.locations, data.covariate_table());
  cy.diagonal().array() += nugget;
  JitteredChol chol = cholesky_with_jitter(cy);
  const Eigen::MatrixXd l = chol.llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();

  Eigen::MatrixXd f = trend_basis(trend, data.locations);
  const int p = static_cast<int>(f.cols());

  ProfiledLikelihood out;
  out.beta = Eigen::VectorXd::Zero(p);
  if (p > 0) {
    const Eigen::MatrixXd lf = l.triangularView<Eigen::Lower>().solve(f);
    Eigen::MatrixXd gram = lf.transpose() * lf;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    for (int k = 0; k < r; ++k) {
      const Eigen::VectorXd ly =
          l.triangularView<Eigen::Lower>().solve(data.values.row(k).transpose());
      rhs += lf.transpose() * ly;
    }
    out.beta = (static_cast<double>(r) * gram).ldlt().solve(rhs);
  }

  double ll = 0.0;
  for (int k = 0; k < r; ++k) {
    Eigen::VectorXd resid = data.values.row(k).transpose();
    if (p > 0) resid -= f * out.beta;
    const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(resid);
    ll += -0.5 * n * kLogTwoPi - 0.5 * logdet - 0.5 * z.squaredNorm();
  }
  out.value = ll;
  return out;
}

// --- parameter packing -----------------------------------------------------

double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

Eigen::VectorXd pack(const FitTemplate& t) {
  std::vector<double> theta;
  switch (t.kind) {
    case FitTemplate::Kind::StationaryIso: {
      const auto& m = std::get<StationaryIsoSpec>(t.initial);
      if (t.free_variance) theta.push_back(safe_log(m.params.variance));
      if (t.free_range) theta.push_back(safe_log(m.params.range));
      if (t.free_smoothness) theta.push_back(safe_log(m.params.smoothness));
      break;
    }
    case FitTemplate::Kind::StationaryAniso: {
      const auto& m = std::get<StationaryAnisoSpec>(t.initial);
      const KernelMatrix k(m.anisotropy.matrix);
      theta = {safe_log(m.variance), safe_log(k.eigenvalue1()), safe_log(k.eigenvalue2()),
               k.angle()};
      if (t.free_smoothness) theta.push_back(safe_log(m.smoothness));
      break;
    }
    case FitTemplate::Kind::NsMixture: {
      const auto& m = std::get<NsModel>(t.initial);
      theta = {safe_log(m.sigma.constant_value())};
      if (t.free_smoothness) theta.push_back(safe_log(m.smoothness.constant_value()));
      break;
    }
    case FitTemplate::Kind::NsCovariate: {
      const auto& m = std::get<NsModel>(t.initial);
      auto append = [&theta](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) theta.push_back(v(i));
      };
      append(m.kernels.coef_log_eig1());
      append(m.kernels.coef_log_eig2());
      append(m.kernels.coef_angle());
      if (m.sigma.kind() == ScalarField::Kind::Covariate) {
        append(m.sigma.coef_log_value());
      } else {
        theta.push_back(safe_log(m.sigma.constant_value()));
      }
      if (t.free_smoothness) theta.push_back(safe_log(m.smoothness.constant_value()));
      break;
    }
  }
  if (t.free_nugget) theta.push_back(safe_log(std::max(t.initial_nugget, 1e-12)));
  return Eigen::Map<Eigen::VectorXd>(theta.data(), static_cast<int>(theta.size()));
}

void unpack(const FitTemplate& t, const Eigen::VectorXd& theta, CovarianceSpec& spec,
            double& nugget) {
  int idx = 0;
  spec = t.initial;
  switch (t.kind) {
    case FitTemplate::Kind::StationaryIso: {
      auto& m = std::get<StationaryIsoSpec>(spec);
      if (t.free_variance) m.params.variance = std::exp(theta(idx++));
      if (t.free_range) m.params.range = std::exp(theta(idx++));
      if (t.free_smoothness) m.params.smoothness = std::exp(theta(idx++));
      break;
    }
    case FitTemplate::Kind::StationaryAniso: {
      auto& m = std::get<StationaryAnisoSpec>(spec);
      m.variance = std::exp(theta(idx++));
      const double e1 = std::exp(theta(idx++));
      const double e2 = std::exp(theta(idx++));
      const double ang = theta(idx++);
      m.anisotropy.matrix = KernelMatrix::from_spectral(e1, e2, ang).matrix();
      if (t.free_smoothness) m.smoothness = std::exp(theta(idx++));
      break;
    }
    case FitTemplate::Kind::NsMixture: {
      auto& m = std::get<NsModel>(spec);
      m.sigma = ScalarField::constant(std::exp(theta(idx++)));
      if (t.free_smoothness) m.smoothness = ScalarField::constant(std::exp(theta(idx++)));
      break;
    }
    case FitTemplate::Kind::NsCovariate: {
      auto& m = std::get<NsModel>(spec);
      auto take = [&theta, &idx](int len) {
        Eigen::VectorXd v = theta.segment(idx, len);
        idx += len;
        return v;
      };
      const int pk = static_cast<int>(m.kernels.coef_log_eig1().size());
      const Eigen::VectorXd c1 = take(pk), c2 = take(pk), ca = take(pk);
      m.kernels = KernelField::covariate(c1, c2, ca);
      if (m.sigma.kind() == ScalarField::Kind::Covariate) {
        const int ps = static_cast<int>(m.sigma.coef_log_value().size());
        m.sigma = ScalarField::covariate(take(ps));
      } else {
        m.sigma = ScalarField::constant(std::exp(theta(idx++)));
      }
      if (t.free_smoothness) m.smoothness = ScalarField::constant(std::exp(theta(idx++)));
      break;
    }
  }
  nugget = t.free_nugget ? std::exp(theta(idx++)) : t.initial_nugget;
}

Eigen::VectorXd default_steps(const Eigen::VectorXd& theta0) {
  // Unconstrained coordinates are logs and angles; a 0.5 step spans a factor
  // of ~1.6 on the natural scale.
  return Eigen::VectorXd::Constant(theta0.size(), 0.5);
}

} // namespace

void SpatialDataset::validate() const {
  if (locations.empty()) throw input_error("dataset: no locations");
  if (values.cols() != n()) throw input_error("dataset: values count does not match locations");
  if (values.rows() < 1) throw input_error("dataset: at least one replicate required");
  const int d = static_cast<int>(locations[0].size());
  for (const auto& s : locations) {
    if (static_cast<int>(s.size()) != d || !s.allFinite()) {
      throw input_error("dataset: locations must be finite with a common dimension");
    }
  }
  if (!values.allFinite()) throw input_error("dataset: non-finite observation values");
  if (!covariates.empty() && covariates.size() != locations.size()) {
    throw input_error("dataset: covariates must align with locations");
  }
}

bool SpatialDataset::has_duplicate_locations() const {
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      if ((locations[i] - locations[j]).norm() == 0.0) return true;
    }
  }
  return false;
}

Eigen::MatrixXd trend_basis(TrendKind kind, const std::vector<Location>& locs) {
  const int n = static_cast<int>(locs.size());
  switch (kind) {
    case TrendKind::Zero: return Eigen::MatrixXd(n, 0);
    case TrendKind::Constant: return Eigen::MatrixXd::Ones(n, 1);
    case TrendKind::Linear: {
      const int d = n > 0 ? static_cast<int>(locs[0].size()) : 0;
      Eigen::MatrixXd f(n, 1 + d);
      for (int i = 0; i < n; ++i) {
        f(i, 0) = 1.0;
        f.row(i).tail(d) = locs[i].transpose();
      }
      return f;
    }
  }
  throw input_error("trend_basis: invalid kind");
}

double log_likelihood(const SpatialDataset& data, const CovarianceSpec& spec, double nugget,
                      TrendKind trend, const Eigen::VectorXd& beta) {
  data.validate();
  if (nugget < 0.0) throw input_error("log_likelihood: nugget must be nonnegative");
  const int n = data.n();
  Eigen::MatrixXd cy = build_cov_matrix(spec, data.locations, data.covariate_table());
  cy.diagonal().array() += nugget;
  JitteredChol chol = cholesky_with_jitter(cy);
  const Eigen::MatrixXd l = chol.llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const Eigen::MatrixXd f = trend_basis(trend, data.locations);
  if (f.cols() != beta.size() && !(f.cols() == 0 && beta.size() == 0)) {
    throw input_error("log_likelihood: trend coefficient count does not match the trend kind");
  }

  double ll = 0.0;
  for (int k = 0; k < data.replicates(); ++k) {
    Eigen::VectorXd resid = data.values.row(k).transpose();
    if (f.cols() > 0) resid -= f * beta;
    const Eigen::VectorXd z = l.triangularView<Eigen::Lower>().solve(resid);
    ll += -0.5 * n * kLogTwoPi - 0.5 * logdet - 0.5 * z.squaredNorm();
  }
  return ll;
}

PredictionResult krige(const ModelFit& fit, const SpatialDataset& data,
                       const std::vector<Location>& query,
                       const CovariateTable* query_covariates) {
  data.validate();
  if (data.replicates() != 1) throw input_error("krige: a single replicate is required");
  if (std::holds_alternative<KlTruncatedSpec>(fit.spec)) {
    throw input_error("krige: KL-truncated covariances define no off-location covariances");
  }
  const bool needs_cov = spec_needs_covariates(fit.spec);
  if (needs_cov && (query_covariates == nullptr || query_covariates->size() != query.size())) {
    throw input_error("krige: covariates required for every query location");
  }

  const int n = data.n();
  const int m = static_cast<int>(query.size());
  Eigen::MatrixXd cy = build_cov_matrix(fit.spec, data.locations, data.covariate_table());
  cy.diagonal().array() += fit.nugget;
  JitteredChol chol = cholesky_with_jitter(cy);

  const Eigen::MatrixXd f = trend_basis(fit.trend_kind, data.locations);
  const int p = static_cast<int>(f.cols());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd beta_cov(p, p);
  if (p > 0) {
    const Eigen::MatrixXd ci_f = chol.llt.solve(f);
    const Eigen::MatrixXd gram = f.transpose() * ci_f;
    const Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);
    beta = gram_ldlt.solve(ci_f.transpose() * data.values.row(0).transpose());
    beta_cov = gram_ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  }
  Eigen::VectorXd resid = data.values.row(0).transpose();
  if (p > 0) resid -= f * beta;
  const Eigen::VectorXd alpha = chol.llt.solve(resid);

  const Eigen::MatrixXd fq = trend_basis(fit.trend_kind, query);
  PredictionResult out;
  out.locations = query;
  out.mean.resize(m);
  out.standard_error.resize(m);
  for (int q = 0; q < m; ++q) {
    const Eigen::VectorXd* xq = needs_cov ? &(*query_covariates)[q] : nullptr;
    Eigen::VectorXd cq(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd* xi =
          needs_cov ? &data.covariates[i] : nullptr;
      cq(i) = cov_value(fit.spec, query[q], data.locations[i], xq, xi);
    }
    const double sigma2_q = cov_value(fit.spec, query[q], query[q], xq, xq);
    const Eigen::VectorXd ci_cq = chol.llt.solve(cq);
    double mean = cq.dot(alpha);
    double var = sigma2_q - cq.dot(ci_cq);
    if (p > 0) {
      mean += fq.row(q).dot(beta);
      const Eigen::VectorXd u = fq.row(q).transpose() - f.transpose() * ci_cq;
      var += u.dot(beta_cov * u);
    }
    out.mean(q) = mean;
    out.standard_error(q) = std::sqrt(std::max(var, 0.0));
  }
  return out;
}

FitTemplate default_template(FitTemplate::Kind kind, const SpatialDataset& data,
                             CorrFamily family, double smoothness) {
  data.validate();
  const double var = std::max(sample_variance(data.values), 1e-12);
  const double diam = domain_diameter(data.locations);
  const int d = static_cast<int>(data.locations[0].size());
  const double eig0 = (0.1 * diam) * (0.1 * diam);

  FitTemplate t;
  t.kind = kind;
  t.initial_nugget = 0.05 * var;
  switch (kind) {
    case FitTemplate::Kind::StationaryIso:
      t.initial = StationaryIsoSpec{family, IsotropicParams{var, 0.1 * diam, smoothness}};
      break;
    case FitTemplate::Kind::StationaryAniso:
      t.initial = StationaryAnisoSpec{family, var, smoothness,
                                      AnisotropyMatrix{eig0 * Eigen::MatrixXd::Identity(d, d)}};
      break;
    case FitTemplate::Kind::NsMixture: {
      NsModel m;
      m.family = family;
      m.sigma = ScalarField::constant(std::sqrt(var));
      m.smoothness = ScalarField::constant(smoothness);
      m.kernels = KernelField::constant(KernelMatrix(eig0 * Eigen::MatrixXd::Identity(d, d)));
      t.initial = m;
      break;
    }
    case FitTemplate::Kind::NsCovariate: {
      if (data.covariates.empty()) {
        throw input_error("default_template: covariate-driven template needs dataset covariates");
      }
      const int pc = static_cast<int>(data.covariates[0].size());
      Eigen::VectorXd c1 = Eigen::VectorXd::Zero(pc + 1);
      c1(0) = std::log(eig0);
      Eigen::VectorXd ca = Eigen::VectorXd::Zero(pc + 1);
      Eigen::VectorXd cs = Eigen::VectorXd::Zero(pc + 1);
      cs(0) = 0.5 * std::log(var);
      NsModel m;
      m.family = family;
      m.kernels = KernelField::covariate(c1, c1, ca);
      m.sigma = ScalarField::covariate(cs);
      m.smoothness = ScalarField::constant(smoothness);
      t.initial = m;
      break;
    }
  }
  return t;
}

ModelFit fit_mle(const SpatialDataset& data, const FitTemplate& tmpl, const FitOptions& options) {
  data.validate();
  const Eigen::VectorXd theta0 = pack(tmpl);

  auto objective = [&](const Eigen::VectorXd& theta) -> double {
    CovarianceSpec spec = tmpl.initial;
    double nugget = 0.0;
    try {
      unpack(tmpl, theta, spec, nugget);
      const double ll = profiled_log_likelihood(data, spec, nugget, options.trend).value;
      if (!std::isfinite(ll)) return kPenalty;
      return -ll;
    } catch (const error&) {
      return kPenalty;
    }
  };

  const double f0 = objective(theta0);
  if (f0 >= kPenalty) {
    std::ostringstream os;
    os << "fit_mle: non-finite likelihood at the initial point (theta0 = "
       << theta0.transpose() << ")";
    throw convergence_error(os.str());
  }

  SimplexOptions so;
  so.max_iterations = options.max_iterations;
  so.tolerance = options.tolerance;
  const Eigen::VectorXd steps = default_steps(theta0);

  SimplexResult best = nelder_mead(objective, theta0, steps, so);
  int total_iterations = best.iterations;
  bool converged = best.converged;
  auto rng = make_rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 1; r < options.restarts; ++r) {
    Eigen::VectorXd start = best.x;
    for (int i = 0; i < start.size(); ++i) start(i) += 0.25 * steps(i) * normal(rng);
    SimplexResult run = nelder_mead(objective, start, steps, so);
    total_iterations += run.iterations;
    if (run.value < best.value) {
      best = run;
      converged = run.converged;
    }
  }

  ModelFit fit;
  fit.seed = options.seed;
  unpack(tmpl, best.x, fit.spec, fit.nugget);
  const ProfiledLikelihood pl =
      profiled_log_likelihood(data, fit.spec, fit.nugget, options.trend);
  fit.trend_kind = options.trend;
  fit.trend_coefficients = pl.beta;
  fit.log_likelihood = pl.value;
  fit.report = ConvergenceReport{converged, total_iterations, options.restarts};
  return fit;
}

std::vector<KernelMatrix> estimate_local_kernels(const SpatialDataset& data,
                                                 const std::vector<Location>& basis_locs,
                                                 double radius, const FitOptions& options) {
  data.validate();
  if (!(radius > 0.0)) throw input_error("estimate_local_kernels: radius must be positive");

  std::vector<KernelMatrix> kernels;
  kernels.reserve(basis_locs.size());
  for (std::size_t m = 0; m < basis_locs.size(); ++m) {
    SpatialDataset local;
    std::vector<int> idx;
    for (int i = 0; i < data.n(); ++i) {
      if ((data.locations[i] - basis_locs[m]).norm() <= radius) idx.push_back(i);
    }
    if (idx.size() < 10) {
      std::ostringstream os;
      os << "estimate_local_kernels: basis index " << m << " has " << idx.size()
         << " observations within radius " << radius << " (need >= 10)";
      throw input_error(os.str());
    }
    local.locations.reserve(idx.size());
    local.values.resize(data.replicates(), static_cast<int>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      local.locations.push_back(data.locations[idx[k]]);
      local.values.col(static_cast<int>(k)) = data.values.col(idx[k]);
    }

    FitTemplate tmpl =
        default_template(FitTemplate::Kind::StationaryAniso, local, CorrFamily::Gaussian);
    FitOptions lo = options;
    lo.trend = TrendKind::Constant; // absorb the local mean level
    const ModelFit fit = fit_mle(local, tmpl, lo);
    kernels.emplace_back(std::get<StationaryAnisoSpec>(fit.spec).anisotropy.matrix);
  }
  return kernels;
}

ModelFit fit_two_stage(const SpatialDataset& data, const std::vector<Location>& basis_locs,
                       double radius, const TwoStageOptions& options) {
  std::vector<KernelMatrix> kernels = estimate_local_kernels(data, basis_locs, radius, options.fit);
  const double bw = options.bandwidth > 0.0 ? options.bandwidth : default_bandwidth(basis_locs);

  NsModel model;
  model.family = options.family;
  model.smoothness = ScalarField::constant(options.smoothness);
  model.sigma = ScalarField::constant(std::sqrt(std::max(sample_variance(data.values), 1e-12)));
  model.kernels = KernelField::mixture(basis_locs, std::move(kernels), bw);

  FitTemplate tmpl;
  tmpl.kind = FitTemplate::Kind::NsMixture;
  tmpl.initial = model;
  tmpl.initial_nugget = 0.05 * std::max(sample_variance(data.values), 1e-12);
  tmpl.free_smoothness = options.free_smoothness;
  return fit_mle(data, tmpl, options.fit);
}

} // namespace nskrig
