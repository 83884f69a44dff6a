#include "nskrig/covspec.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

#include "nskrig/errors.hpp"
#include "nskrig/rng.hpp"

namespace nskrig {

bool spec_needs_covariates(const CovarianceSpec& spec) {
  if (const auto* ns = std::get_if<NsModel>(&spec)) return ns->needs_covariates();
  if (const auto* dc = std::get_if<DiscreteConvSpec>(&spec)) return dc->field.needs_covariates();
  return false;
}

namespace {

using EntryFn = std::function<double(int, int)>;

const Eigen::VectorXd* covariate_at(const CovariateTable* covariates, int i) {
  if (covariates == nullptr) return nullptr;
  return &(*covariates)[i];
}

void check_covariates(const CovarianceSpec& spec, std::size_t n, const CovariateTable* covariates) {
  if (!spec_needs_covariates(spec)) return;
  if (covariates == nullptr || covariates->size() != n) {
    throw input_error("covariate-driven covariance requires one covariate vector per location");
  }
}

// Builds the per-pair entry function with all per-location work hoisted out,
// so entries are independent and cheap inside the fill loop.
EntryFn make_entry_fn(const CovarianceSpec& spec, const std::vector<Location>& locs,
                      const CovariateTable* covariates) {
  const int n = static_cast<int>(locs.size());

  if (const auto* iso = std::get_if<StationaryIsoSpec>(&spec)) {
    iso->params.validate();
    const StationaryIsoSpec m = *iso;
    return [m, &locs](int i, int j) {
      const double h = (locs[i] - locs[j]).norm();
      return m.params.variance * correlation(m.family, h / m.params.range, m.params.smoothness);
    };
  }

  if (const auto* aniso = std::get_if<StationaryAnisoSpec>(&spec)) {
    aniso->anisotropy.validate();
    if (!(aniso->variance > 0.0)) throw input_error("anisotropic spec: variance must be positive");
    const StationaryAnisoSpec m = *aniso;
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(m.anisotropy.matrix);
    if (llt->info() != Eigen::Success) {
      throw input_error("anisotropic spec: anisotropy matrix not SPD");
    }
    return [m, llt, &locs](int i, int j) {
      const double h = llt->matrixL().solve(locs[i] - locs[j]).norm();
      return m.variance * correlation(m.family, h, m.smoothness);
    };
  }

  if (const auto* ns = std::get_if<NsModel>(&spec)) {
    auto points = std::make_shared<std::vector<NsPoint>>();
    points->reserve(n);
    for (int i = 0; i < n; ++i) {
      try {
        points->push_back(ns_point(*ns, locs[i], covariate_at(covariates, i)));
      } catch (const error& e) {
        std::ostringstream os;
        os << "field evaluation failed at location index " << i << ": " << e.what();
        throw input_error(os.str());
      }
    }
    const CorrFamily family = ns->family;
    return [points, family](int i, int j) {
      return cov_ns_pair((*points)[i], (*points)[j], family);
    };
  }

  if (const auto* fu = std::get_if<FuentesSpec>(&spec)) {
    fu->validate();
    const auto m = std::make_shared<FuentesSpec>(*fu);
    const int L = static_cast<int>(m->grid.locations.size());
    auto weights = std::make_shared<Eigen::MatrixXd>(n, L);
    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < L; ++l) {
        (*weights)(i, l) = gaussian_kernel_density(locs[i] - m->grid.locations[l], m->kernel);
      }
    }
    return [m, weights, &locs](int i, int j) {
      const double h = (locs[i] - locs[j]).norm();
      double acc = 0.0;
      for (int l = 0; l < weights->cols(); ++l) {
        const IsotropicParams& p = m->local_params[l];
        acc += (*weights)(i, l) * (*weights)(j, l) * p.variance *
               correlation(m->family, h / p.range, p.smoothness);
      }
      return m->cell_volume * acc;
    };
  }

  if (const auto* dc = std::get_if<DiscreteConvSpec>(&spec)) {
    dc->grid.validate();
    const int L = static_cast<int>(dc->grid.locations.size());
    const double var = dc->grid.white_noise_variance;
    auto weights = std::make_shared<Eigen::MatrixXd>(n, L);
    for (int i = 0; i < n; ++i) {
      KernelMatrix sigma;
      try {
        sigma = dc->field.eval(locs[i], covariate_at(covariates, i));
      } catch (const error& e) {
        std::ostringstream os;
        os << "field evaluation failed at location index " << i << ": " << e.what();
        throw input_error(os.str());
      }
      for (int l = 0; l < L; ++l) {
        (*weights)(i, l) = gaussian_kernel_density(locs[i] - dc->grid.locations[l], sigma);
      }
    }
    return [weights, var](int i, int j) {
      return var * weights->row(i).dot(weights->row(j));
    };
  }

  const auto& kl = std::get<KlTruncatedSpec>(spec);
  if (kl.matrix.rows() != n || kl.matrix.cols() != n) {
    throw input_error("KL-truncated spec: matrix size does not match the location count");
  }
  auto m = std::make_shared<Eigen::MatrixXd>(kl.matrix);
  return [m](int i, int j) { return (*m)(i, j); };
}

} // namespace

double cov_value(const CovarianceSpec& spec, const Location& s, const Location& sp,
                 const Eigen::VectorXd* cov_s, const Eigen::VectorXd* cov_sp) {
  std::vector<Location> locs{s, sp};
  CovariateTable table;
  const CovariateTable* tp = nullptr;
  if (cov_s != nullptr && cov_sp != nullptr) {
    table = {*cov_s, *cov_sp};
    tp = &table;
  }
  check_covariates(spec, 2, tp);
  return make_entry_fn(spec, locs, tp)(0, 1);
}

Eigen::MatrixXd build_cov_matrix_serial(const CovarianceSpec& spec,
                                        const std::vector<Location>& locs,
                                        const CovariateTable* covariates) {
  const int n = static_cast<int>(locs.size());
  check_covariates(spec, locs.size(), covariates);
  EntryFn entry = make_entry_fn(spec, locs, covariates);
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = entry(i, j);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Eigen::MatrixXd build_cov_matrix(const CovarianceSpec& spec, const std::vector<Location>& locs,
                                 const CovariateTable* covariates) {
  const int n = static_cast<int>(locs.size());
  check_covariates(spec, locs.size(), covariates);
  EntryFn entry = make_entry_fn(spec, locs, covariates);
  Eigen::MatrixXd c(n, n);
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      c(i, j) = entry(i, j);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  }
  return c;
}

JitteredChol cholesky_with_jitter(const Eigen::MatrixXd& C) {
  const double mean_diag = C.diagonal().mean();
  JitteredChol out;
  out.llt.compute(C);
  if (out.llt.info() == Eigen::Success) return out;
  for (double rel = 1e-10; rel <= 1e-6 * 1.0000001; rel *= 10.0) {
    const double jitter = rel * mean_diag;
    out.llt.compute(C + jitter * Eigen::MatrixXd::Identity(C.rows(), C.cols()));
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << "covariance factorization failed after jitter escalation; smallest eigenvalue "
     << es.eigenvalues().minCoeff();
  throw conditioning_error(os.str());
}

FieldRealization simulate_gp(const CovarianceSpec& spec, const std::vector<Location>& locs,
                             std::uint64_t seed, int replicates,
                             const CovariateTable* covariates) {
  if (replicates < 1) throw input_error("simulate_gp: replicates >= 1");
  const int n = static_cast<int>(locs.size());
  FieldRealization out;
  out.locations = locs;
  out.seed = seed;
  out.values = Eigen::MatrixXd::Zero(replicates, n);
  if (n == 0) return out;

  Eigen::MatrixXd c = build_cov_matrix(spec, locs, covariates);
  if (c.cwiseAbs().maxCoeff() == 0.0) return out; // degenerate zero-variance field

  JitteredChol chol = cholesky_with_jitter(c);
  const Eigen::MatrixXd l = chol.llt.matrixL();
#pragma omp parallel for schedule(static)
  for (int r = 0; r < replicates; ++r) {
    auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = normal(rng);
    out.values.row(r) = (l * z).transpose();
  }
  return out;
}

} // namespace nskrig
