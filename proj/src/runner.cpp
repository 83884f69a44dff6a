#include "nskrig/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nskrig/errors.hpp"
#include "nskrig/io.hpp"
#include "nskrig/rng.hpp"

namespace nskrig {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    throw input_error("config: bad numeric value '" + s + "' for " + key);
  }
  return v;
}

CorrFamily family_from_string(const std::string& s) {
  if (s == "exponential") return CorrFamily::Exponential;
  if (s == "gaussian") return CorrFamily::Gaussian;
  if (s == "matern") return CorrFamily::Matern;
  throw input_error("config: unknown correlation family '" + s + "'");
}

TrendKind trend_from_string(const std::string& s) {
  if (s == "zero") return TrendKind::Zero;
  if (s == "constant") return TrendKind::Constant;
  if (s == "linear") return TrendKind::Linear;
  throw input_error("config: unknown trend '" + s + "'");
}

std::uint64_t required_seed(const RunConfig& config) {
  if (!config.has("seed")) throw input_error("config: seed is required for " + config.mode);
  const std::string s = config.require("seed");
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    throw input_error("config: bad seed '" + s + "'");
  }
  return static_cast<std::uint64_t>(v);
}

std::string out_path(const RunConfig& config, const std::string& name) {
  const std::string dir = config.get("out", ".");
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

KernelMatrix kernel_from_config(const RunConfig& config) {
  const double e1 = config.get_double("eig1", 1.0);
  const double e2 = config.get_double("eig2", e1);
  const double angle = config.get_double("angle", 0.0);
  return KernelMatrix::from_spectral(std::max(e1, e2), std::min(e1, e2), angle);
}

std::vector<Location> run_locations(const RunConfig& config) {
  if (config.has("grid")) return parse_grid(config.require("grid"));
  if (config.has("input")) return ingest_csv(config.require("input")).locations;
  throw input_error("config: " + config.mode + " needs a grid or an input file");
}

std::vector<Location> square_basis_grid(const std::vector<Location>& locs, int m) {
  if (m < 1) throw input_error("config: basis must be >= 1");
  double xmin = locs[0](0), xmax = xmin, ymin = locs[0](1), ymax = ymin;
  for (const auto& s : locs) {
    xmin = std::min(xmin, s(0));
    xmax = std::max(xmax, s(0));
    ymin = std::min(ymin, s(1));
    ymax = std::max(ymax, s(1));
  }
  std::vector<Location> basis;
  for (int iy = 0; iy < m; ++iy) {
    for (int ix = 0; ix < m; ++ix) {
      Location b(2);
      // cell centroids of an m x m partition of the bounding box
      b(0) = xmin + (xmax - xmin) * (ix + 0.5) / m;
      b(1) = ymin + (ymax - ymin) * (iy + 0.5) / m;
      basis.push_back(b);
    }
  }
  return basis;
}

FitOptions fit_options_from_config(const RunConfig& config) {
  FitOptions opt;
  opt.max_iterations = static_cast<int>(config.get_long("max_iterations", opt.max_iterations));
  opt.tolerance = config.get_double("tolerance", opt.tolerance);
  opt.restarts = static_cast<int>(config.get_long("restarts", opt.restarts));
  opt.seed = static_cast<std::uint64_t>(config.get_long("seed", 1));
  opt.trend = trend_from_string(config.get("trend", "zero"));
  return opt;
}

void run_simulate(const RunConfig& config) {
  const std::uint64_t seed = required_seed(config);
  const std::vector<Location> locs = run_locations(config);
  const int replicates = static_cast<int>(config.get_long("replicates", 1));
  if (replicates < 1) throw input_error("config: replicates must be >= 1");

  FieldRealization real;
  double nugget = config.get_double("nugget", 0.0);
  Eigen::VectorXd trend_mean = Eigen::VectorXd::Zero(static_cast<int>(locs.size()));
  const std::string model = config.get("model", "iso");

  if (config.has("model_file")) {
    std::ifstream in(config.require("model_file"));
    if (!in) throw input_error("cannot open model file: " + config.require("model_file"));
    std::stringstream buf;
    buf << in.rdbuf();
    const ModelFit fit = deserialize_model_fit(buf.str());
    real = simulate_gp(fit.spec, locs, seed, replicates);
    nugget = fit.nugget;
    if (fit.trend_kind != TrendKind::Zero) {
      trend_mean = trend_basis(fit.trend_kind, locs) * fit.trend_coefficients;
    }
  } else if (model == "iso") {
    StationaryIsoSpec spec;
    spec.family = family_from_string(config.get("family", "exponential"));
    spec.params.variance = config.get_double("variance", 1.0);
    spec.params.range = config.get_double("range", 1.0);
    spec.params.smoothness = config.get_double("smoothness", 0.5);
    spec.params.validate();
    real = simulate_gp(spec, locs, seed, replicates);
  } else if (model == "ns") {
    NsModel spec;
    spec.family = family_from_string(config.get("family", "exponential"));
    spec.sigma = ScalarField::constant(config.get_double("sigma", 1.0));
    spec.smoothness = ScalarField::constant(config.get_double("smoothness", 0.5));
    spec.kernels = KernelField::constant(kernel_from_config(config));
    real = simulate_gp(spec, locs, seed, replicates);
  } else if (model == "conv") {
    const KernelField field = KernelField::constant(kernel_from_config(config));
    const int nodes = static_cast<int>(config.get_long("conv_grid", 8));
    const ConvolutionGrid grid = default_convolution_grid(
        locs, field, nodes, config.get_double("white_noise_variance", 1.0));
    real = simulate_discrete_convolution(field, grid, locs, seed, replicates);
  } else {
    throw input_error("config: unknown simulate model '" + model + "'");
  }

  for (int r = 0; r < replicates; ++r) {
    real.values.row(r) += trend_mean.transpose();
    if (nugget > 0.0) {
      auto rng = make_rng(mix_seed(seed, static_cast<std::uint64_t>(replicates + r)));
      std::normal_distribution<double> gauss(0.0, std::sqrt(nugget));
      for (int i = 0; i < real.values.cols(); ++i) real.values(r, i) += gauss(rng);
    }
  }

  write_file_atomic(out_path(config, "realization.csv"),
                    config_echo(config) + realization_to_csv(real));
}

void run_fit(const RunConfig& config) {
  const SpatialDataset data = ingest_csv(config.require("input"));
  data.validate();
  const CorrFamily family = family_from_string(config.get("family", "exponential"));
  const double smoothness = config.get_double("smoothness", 0.5);
  const std::string model = config.get("model", "iso");
  const FitOptions options = fit_options_from_config(config);

  ModelFit fit;
  if (model == "ns-mixture") {
    const int m = static_cast<int>(config.get_long("basis", 2));
    const std::vector<Location> basis = square_basis_grid(data.locations, m);
    if (!config.has("radius")) throw input_error("config: ns-mixture fit needs radius");
    TwoStageOptions two;
    two.fit = options;
    two.family = family;
    two.smoothness = smoothness;
    two.bandwidth = config.get_double("bandwidth", 0.0);
    two.free_smoothness = config.get_long("free_smoothness", 0) != 0;
    fit = fit_two_stage(data, basis, config.get_double("radius", 0.0), two);
  } else {
    FitTemplate::Kind kind;
    if (model == "iso") kind = FitTemplate::Kind::StationaryIso;
    else if (model == "aniso") kind = FitTemplate::Kind::StationaryAniso;
    else if (model == "ns-covariate") kind = FitTemplate::Kind::NsCovariate;
    else throw input_error("config: unknown fit model '" + model + "'");
    FitTemplate tmpl = default_template(kind, data, family, smoothness);
    tmpl.free_smoothness = config.get_long("free_smoothness", 0) != 0;
    if (config.has("nugget")) tmpl.initial_nugget = config.get_double("nugget", 0.0);
    tmpl.free_nugget = config.get_long("free_nugget", 1) != 0;
    fit = fit_mle(data, tmpl, options);
  }

  const std::string serialized = serialize_model_fit(fit);
  write_file_atomic(out_path(config, "model.txt"), config_echo(config) + serialized);

  std::ostringstream report;
  report << config_echo(config);
  report << "n " << data.n() << '\n';
  report << "replicates " << data.replicates() << '\n';
  report << "log_likelihood " << format_double(fit.log_likelihood) << '\n';
  report << "iterations " << fit.report.iterations << '\n';
  report << "restarts " << fit.report.restarts << '\n';
  report << "converged " << (fit.report.converged ? 1 : 0) << '\n';
  report << "parameters:\n" << serialized;
  write_file_atomic(out_path(config, "report.txt"), report.str());
}

ModelFit load_model(const RunConfig& config) {
  const std::string path =
      config.has("model_file") ? config.require("model_file")
                               : (std::filesystem::path(config.get("out", ".")) / "model.txt")
                                     .string();
  std::ifstream in(path);
  if (!in) throw input_error("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  // strip any config-echo comment prefix
  std::istringstream lines(text);
  std::string line, body;
  while (std::getline(lines, line)) {
    if (!line.empty() && line[0] == '#') continue;
    body += line;
    body += '\n';
  }
  return deserialize_model_fit(body);
}

void run_predict(const RunConfig& config) {
  const SpatialDataset data = ingest_csv(config.require("input"));
  data.validate();
  const ModelFit fit = load_model(config);
  std::vector<Location> query;
  if (config.has("grid")) query = parse_grid(config.require("grid"));
  else query = data.locations;
  if (spec_needs_covariates(fit.spec) && config.has("grid")) {
    throw input_error(
        "predict: covariate-driven models need query covariates; predict at the "
        "observation locations (omit grid) so the input covariates apply");
  }
  const PredictionResult pred = krige(fit, data, query, data.covariate_table() && !config.has("grid")
                                                            ? data.covariate_table()
                                                            : nullptr);
  write_file_atomic(out_path(config, "predictions.csv"),
                    config_echo(config) + prediction_to_csv(pred));
}

void run_ellipses(const RunConfig& config) {
  const ModelFit fit = load_model(config);
  const auto* model = std::get_if<NsModel>(&fit.spec);
  if (model == nullptr) {
    throw input_error("ellipses: model file does not hold a nonstationary model");
  }
  const std::vector<Location> grid = parse_grid(config.require("grid"));
  write_file_atomic(out_path(config, "ellipses.csv"),
                    config_echo(config) + ellipse_field_to_csv(*model, grid));
}

} // namespace

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = keys.find(key);
  return it == keys.end() ? fallback : it->second;
}

std::string RunConfig::require(const std::string& key) const {
  const auto it = keys.find(key);
  if (it == keys.end()) throw input_error("config: missing required setting '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const auto it = keys.find(key);
  return it == keys.end() ? fallback : to_double(it->second, key);
}

long RunConfig::get_long(const std::string& key, long fallback) const {
  const auto it = keys.find(key);
  if (it == keys.end()) return fallback;
  return static_cast<long>(to_double(it->second, key));
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config file: " + path);
  std::map<std::string, std::string> keys;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "config line " << row << ": expected key = value";
      throw input_error(os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream os;
      os << "config line " << row << ": empty key";
      throw input_error(os.str());
    }
    keys[key] = value;
  }
  return keys;
}

std::vector<Location> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::string field;
  std::istringstream is(text);
  while (std::getline(is, field, ',')) parts.push_back(to_double(trim(field), "grid"));
  if (parts.size() != 6) {
    throw input_error("config: grid must be 'xmin,xmax,ymin,ymax,nx,ny'");
  }
  const double xmin = parts[0], xmax = parts[1], ymin = parts[2], ymax = parts[3];
  const int nx = static_cast<int>(parts[4]), ny = static_cast<int>(parts[5]);
  if (nx < 2 || ny < 2) throw input_error("config: grid resolutions must be >= 2 per axis");
  if (!(xmax > xmin) || !(ymax > ymin)) throw input_error("config: grid bounds must increase");
  std::vector<Location> locs;
  locs.reserve(static_cast<std::size_t>(nx) * ny);
  // row-major, x fastest
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      Location s(2);
      s(0) = xmin + (xmax - xmin) * ix / (nx - 1);
      s(1) = ymin + (ymax - ymin) * iy / (ny - 1);
      locs.push_back(s);
    }
  }
  return locs;
}

std::string config_echo(const RunConfig& config) {
  std::ostringstream os;
  os << "# nskrig run\n";
  os << "# mode = " << config.mode << '\n';
  for (const auto& [key, value] : config.keys) {
    os << "# " << key << " = " << value << '\n';
  }
  return os.str();
}

int apply_thread_cap() {
  const char* env = std::getenv("NSKRIG_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  const int cap = std::max(1, std::atoi(env));
#ifdef _OPENMP
  omp_set_num_threads(cap);
#endif
  return cap;
}

void run(const RunConfig& config) {
  apply_thread_cap();
  if (config.mode == "simulate") run_simulate(config);
  else if (config.mode == "fit") run_fit(config);
  else if (config.mode == "predict") run_predict(config);
  else if (config.mode == "ellipses") run_ellipses(config);
  else throw input_error("unknown mode '" + config.mode + "'");
}

} // namespace nskrig
