#include "nskrig/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nskrig/errors.hpp"

namespace nskrig {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, int row, const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
    std::ostringstream os;
    os << "row " << row << ": unparseable numeric value '" << s << "' in column " << column;
    throw input_error(os.str());
  }
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "row " << row << ": non-finite value in column " << column;
    throw input_error(os.str());
  }
  return v;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i) os << ' ' << format_double(v(i));
}

void write_matrix_row_major(std::ostream& os, const Eigen::MatrixXd& m) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) os << ' ' << format_double(m(i, j));
  }
}

const char* corr_tag(CorrFamily f) {
  switch (f) {
    case CorrFamily::Exponential: return "exponential";
    case CorrFamily::Gaussian: return "gaussian";
    case CorrFamily::Matern: return "matern";
  }
  return "exponential";
}

CorrFamily parse_corr(const std::string& tag) {
  if (tag == "exponential") return CorrFamily::Exponential;
  if (tag == "gaussian") return CorrFamily::Gaussian;
  if (tag == "matern") return CorrFamily::Matern;
  throw input_error("model file: unknown correlation family '" + tag + "'");
}

class TokenReader {
public:
  explicit TokenReader(const std::string& text) : is_(text) {}

  std::string word() {
    std::string w;
    if (!(is_ >> w)) throw input_error("model file: unexpected end of input");
    return w;
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) throw input_error("model file: expected '" + w + "', got '" + got + "'");
  }
  double number() {
    const std::string w = word();
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0') {
      throw input_error("model file: bad number '" + w + "'");
    }
    return v;
  }
  long integer() { return static_cast<long>(number()); }
  Eigen::VectorXd vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = number();
    return v;
  }
  Eigen::MatrixXd matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = number();
    }
    return m;
  }

private:
  std::istringstream is_;
};

void write_scalar_field(std::ostream& os, const char* label, const ScalarField& f) {
  os << label;
  switch (f.kind()) {
    case ScalarField::Kind::Constant:
      os << " constant " << format_double(f.constant_value()) << '\n';
      break;
    case ScalarField::Kind::Covariate:
      os << " covariate " << f.coef_log_value().size();
      write_vector(os, f.coef_log_value());
      os << '\n';
      break;
    case ScalarField::Kind::Mixture:
      throw input_error("model file: scalar mixture fields are not serializable");
  }
}

ScalarField read_scalar_field(TokenReader& r) {
  const std::string kind = r.word();
  if (kind == "constant") return ScalarField::constant(r.number());
  if (kind == "covariate") {
    const int k = static_cast<int>(r.integer());
    return ScalarField::covariate(r.vector(k));
  }
  throw input_error("model file: unknown scalar field kind '" + kind + "'");
}

void write_kernel_field(std::ostream& os, const KernelField& f) {
  os << "kernel_field";
  switch (f.kind()) {
    case KernelField::Kind::Constant: {
      const auto& m = f.eval(Location::Zero(2)).matrix();
      os << " constant " << m.rows();
      write_matrix_row_major(os, m);
      os << '\n';
      break;
    }
    case KernelField::Kind::Mixture: {
      const auto& locs = f.basis_locations();
      const int d = static_cast<int>(locs[0].size());
      os << " mixture " << locs.size() << ' ' << d << ' ' << format_double(f.bandwidth()) << '\n';
      for (std::size_t i = 0; i < locs.size(); ++i) {
        os << "node";
        write_vector(os, locs[i]);
        write_matrix_row_major(os, f.basis_kernels()[i].matrix());
        os << '\n';
      }
      break;
    }
    case KernelField::Kind::Covariate: {
      os << " covariate " << f.coef_log_eig1().size() << '\n';
      os << "eig1";
      write_vector(os, f.coef_log_eig1());
      os << "\neig2";
      write_vector(os, f.coef_log_eig2());
      os << "\nangle";
      write_vector(os, f.coef_angle());
      os << '\n';
      break;
    }
  }
}

KernelField read_kernel_field(TokenReader& r) {
  r.expect("kernel_field");
  const std::string kind = r.word();
  if (kind == "constant") {
    const int d = static_cast<int>(r.integer());
    return KernelField::constant(KernelMatrix(r.matrix(d, d)));
  }
  if (kind == "mixture") {
    const int m = static_cast<int>(r.integer());
    const int d = static_cast<int>(r.integer());
    const double bw = r.number();
    std::vector<Location> locs;
    std::vector<KernelMatrix> mats;
    for (int i = 0; i < m; ++i) {
      r.expect("node");
      locs.push_back(r.vector(d));
      mats.emplace_back(r.matrix(d, d));
    }
    return KernelField::mixture(std::move(locs), std::move(mats), bw);
  }
  if (kind == "covariate") {
    const int k = static_cast<int>(r.integer());
    r.expect("eig1");
    Eigen::VectorXd c1 = r.vector(k);
    r.expect("eig2");
    Eigen::VectorXd c2 = r.vector(k);
    r.expect("angle");
    Eigen::VectorXd ca = r.vector(k);
    return KernelField::covariate(c1, c2, ca);
  }
  throw input_error("model file: unknown kernel field kind '" + kind + "'");
}

} // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SpatialDataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open input file: " + path);

  std::string line;
  int row_number = 0;
  // leading '#' lines are config-echo comments written by the tool itself
  do {
    if (!std::getline(in, line)) throw input_error(path + ": empty file");
    ++row_number;
  } while (!line.empty() && line[0] == '#');
  const std::vector<std::string> header = split_csv_line(line);

  int col_x = -1, col_y = -1, col_value = -1, col_rep = -1;
  std::vector<int> cov_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    if (h == "x") col_x = static_cast<int>(i);
    else if (h == "y") col_y = static_cast<int>(i);
    else if (h == "value") col_value = static_cast<int>(i);
    else if (h == "replicate") col_rep = static_cast<int>(i);
    else if (h.rfind("cov_", 0) == 0) cov_cols.push_back(static_cast<int>(i));
  }
  if (col_x < 0 || col_y < 0 || col_value < 0) {
    throw input_error(path + ": header must contain columns x, y, value");
  }

  struct Row {
    Location loc;
    double value;
    int replicate;
    Eigen::VectorXd cov;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty() || line[0] == '#' ||
        line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() < header.size()) {
      std::ostringstream os;
      os << "row " << row_number << ": expected " << header.size() << " columns, found "
         << fields.size();
      throw input_error(os.str());
    }
    Row r;
    r.loc = Location(2);
    r.loc(0) = parse_double(fields[col_x], row_number, "x");
    r.loc(1) = parse_double(fields[col_y], row_number, "y");
    r.value = parse_double(fields[col_value], row_number, "value");
    r.replicate =
        col_rep >= 0 ? static_cast<int>(parse_double(fields[col_rep], row_number, "replicate"))
                     : 1;
    if (r.replicate < 1) {
      std::ostringstream os;
      os << "row " << row_number << ": replicate index must be >= 1";
      throw input_error(os.str());
    }
    r.cov.resize(static_cast<int>(cov_cols.size()));
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      r.cov(static_cast<int>(c)) = parse_double(fields[cov_cols[c]], row_number, header[cov_cols[c]]);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw input_error(path + ": no data rows");

  int n_rep = 1;
  for (const auto& r : rows) n_rep = std::max(n_rep, r.replicate);

  SpatialDataset data;
  std::map<std::pair<double, double>, int> index;
  for (const auto& r : rows) {
    const std::pair<double, double> key{r.loc(0), r.loc(1)};
    if (index.find(key) == index.end()) {
      index[key] = static_cast<int>(data.locations.size());
      data.locations.push_back(r.loc);
      if (!cov_cols.empty()) data.covariates.push_back(r.cov);
    }
  }
  const int n = data.n();
  data.values.resize(n_rep, n);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n_rep, n);
  for (const auto& r : rows) {
    const int i = index[{r.loc(0), r.loc(1)}];
    if (seen(r.replicate - 1, i)++) {
      std::ostringstream os;
      os << "duplicate observation for replicate " << r.replicate << " at (" << r.loc(0) << ", "
         << r.loc(1) << ")";
      throw input_error(os.str());
    }
    data.values(r.replicate - 1, i) = r.value;
  }
  if (seen.minCoeff() == 0) {
    throw input_error(path + ": some replicates do not cover every location");
  }
  return data;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot open output file: " + tmp);
    out << content;
    if (!out.good()) {
      std::remove(tmp.c_str());
      throw input_error("failed writing output file: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw input_error("failed to move output into place: " + path + " (" + ec.message() + ")");
  }
}

std::string dataset_to_csv(const SpatialDataset& data) {
  std::ostringstream os;
  os << "x,y,value";
  if (data.replicates() > 1) os << ",replicate";
  const int pc = data.covariates.empty() ? 0 : static_cast<int>(data.covariates[0].size());
  for (int c = 0; c < pc; ++c) os << ",cov_" << c + 1;
  os << '\n';
  for (int r = 0; r < data.replicates(); ++r) {
    for (int i = 0; i < data.n(); ++i) {
      os << format_double(data.locations[i](0)) << ',' << format_double(data.locations[i](1))
         << ',' << format_double(data.values(r, i));
      if (data.replicates() > 1) os << ',' << r + 1;
      for (int c = 0; c < pc; ++c) os << ',' << format_double(data.covariates[i](c));
      os << '\n';
    }
  }
  return os.str();
}

std::string realization_to_csv(const FieldRealization& realization) {
  std::ostringstream os;
  os << "x,y,value,replicate\n";
  for (int r = 0; r < realization.values.rows(); ++r) {
    for (std::size_t i = 0; i < realization.locations.size(); ++i) {
      os << format_double(realization.locations[i](0)) << ','
         << format_double(realization.locations[i](1)) << ','
         << format_double(realization.values(r, static_cast<int>(i))) << ',' << r + 1 << '\n';
    }
  }
  return os.str();
}

std::string prediction_to_csv(const PredictionResult& prediction) {
  std::ostringstream os;
  os << "x,y,mean,se\n";
  for (std::size_t i = 0; i < prediction.locations.size(); ++i) {
    os << format_double(prediction.locations[i](0)) << ','
       << format_double(prediction.locations[i](1)) << ','
       << format_double(prediction.mean(static_cast<int>(i))) << ','
       << format_double(prediction.standard_error(static_cast<int>(i))) << '\n';
  }
  return os.str();
}

std::string ellipse_field_to_csv(const NsModel& model, const std::vector<Location>& grid,
                                 const CovariateTable* covariates) {
  if (model.needs_covariates() && (covariates == nullptr || covariates->size() != grid.size())) {
    throw input_error("ellipse export: covariates required at every grid location");
  }
  std::ostringstream os;
  os << "x,y,lambda1,lambda2,angle,sigma,kappa\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::VectorXd* x = covariates ? &(*covariates)[i] : nullptr;
    const KernelMatrix k = model.kernels.eval(grid[i], x);
    os << format_double(grid[i](0)) << ',' << format_double(grid[i](1)) << ','
       << format_double(k.eigenvalue1()) << ',' << format_double(k.eigenvalue2()) << ','
       << format_double(k.angle()) << ',' << format_double(model.sigma.eval(grid[i], x)) << ','
       << format_double(model.smoothness.eval(grid[i], x)) << '\n';
  }
  return os.str();
}

std::string eofs_to_csv(const EOFBasis& basis) {
  std::ostringstream os;
  os << "location,component,loading\n";
  for (int j = 0; j < basis.eigenvectors.cols(); ++j) {
    for (int i = 0; i < basis.eigenvectors.rows(); ++i) {
      os << i + 1 << ',' << j + 1 << ',' << format_double(basis.eigenvectors(i, j)) << '\n';
    }
  }
  return os.str();
}

std::string serialize_model_fit(const ModelFit& fit) {
  std::ostringstream os;
  os << "nskrig-model 1\n";

  if (const auto* iso = std::get_if<StationaryIsoSpec>(&fit.spec)) {
    os << "family stationary-iso\n";
    os << "corr " << corr_tag(iso->family) << '\n';
    os << "params " << format_double(iso->params.variance) << ' '
       << format_double(iso->params.range) << ' ' << format_double(iso->params.smoothness)
       << '\n';
  } else if (const auto* an = std::get_if<StationaryAnisoSpec>(&fit.spec)) {
    os << "family stationary-aniso\n";
    os << "corr " << corr_tag(an->family) << '\n';
    os << "variance " << format_double(an->variance) << '\n';
    os << "smoothness " << format_double(an->smoothness) << '\n';
    os << "aniso " << an->anisotropy.matrix.rows();
    write_matrix_row_major(os, an->anisotropy.matrix);
    os << '\n';
  } else if (const auto* ns = std::get_if<NsModel>(&fit.spec)) {
    os << "family ns\n";
    os << "corr " << corr_tag(ns->family) << '\n';
    write_scalar_field(os, "sigma_field", ns->sigma);
    write_scalar_field(os, "kappa_field", ns->smoothness);
    write_kernel_field(os, ns->kernels);
  } else {
    throw input_error("model file: this covariance family is not serializable");
  }

  os << "nugget " << format_double(fit.nugget) << '\n';
  os << "trend ";
  switch (fit.trend_kind) {
    case TrendKind::Zero: os << "zero"; break;
    case TrendKind::Constant: os << "constant"; break;
    case TrendKind::Linear: os << "linear"; break;
  }
  os << ' ' << fit.trend_coefficients.size();
  write_vector(os, fit.trend_coefficients);
  os << '\n';
  os << "loglik " << format_double(fit.log_likelihood) << '\n';
  os << "seed " << fit.seed << '\n';
  os << "converged " << (fit.report.converged ? 1 : 0) << '\n';
  os << "iterations " << fit.report.iterations << '\n';
  os << "restarts " << fit.report.restarts << '\n';
  os << "end\n";
  return os.str();
}

ModelFit deserialize_model_fit(const std::string& text) {
  // Tolerate '#' comment lines (the batch runner prepends a config echo).
  std::string stripped;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line[0] == '#') continue;
    stripped += line;
    stripped += '\n';
  }
  TokenReader r(stripped);
  r.expect("nskrig-model");
  if (r.integer() != 1) throw input_error("model file: unsupported version");

  ModelFit fit;
  r.expect("family");
  const std::string family = r.word();
  if (family == "stationary-iso") {
    StationaryIsoSpec m;
    r.expect("corr");
    m.family = parse_corr(r.word());
    r.expect("params");
    m.params.variance = r.number();
    m.params.range = r.number();
    m.params.smoothness = r.number();
    fit.spec = m;
  } else if (family == "stationary-aniso") {
    StationaryAnisoSpec m;
    r.expect("corr");
    m.family = parse_corr(r.word());
    r.expect("variance");
    m.variance = r.number();
    r.expect("smoothness");
    m.smoothness = r.number();
    r.expect("aniso");
    const int d = static_cast<int>(r.integer());
    m.anisotropy.matrix = r.matrix(d, d);
    fit.spec = m;
  } else if (family == "ns") {
    NsModel m;
    r.expect("corr");
    m.family = parse_corr(r.word());
    r.expect("sigma_field");
    m.sigma = read_scalar_field(r);
    r.expect("kappa_field");
    m.smoothness = read_scalar_field(r);
    m.kernels = read_kernel_field(r);
    fit.spec = m;
  } else {
    throw input_error("model file: unknown family '" + family + "'");
  }

  r.expect("nugget");
  fit.nugget = r.number();
  r.expect("trend");
  const std::string trend = r.word();
  if (trend == "zero") fit.trend_kind = TrendKind::Zero;
  else if (trend == "constant") fit.trend_kind = TrendKind::Constant;
  else if (trend == "linear") fit.trend_kind = TrendKind::Linear;
  else throw input_error("model file: unknown trend '" + trend + "'");
  const int p = static_cast<int>(r.integer());
  fit.trend_coefficients = r.vector(p);
  r.expect("loglik");
  fit.log_likelihood = r.number();
  r.expect("seed");
  fit.seed = static_cast<std::uint64_t>(r.integer());
  r.expect("converged");
  fit.report.converged = r.integer() != 0;
  r.expect("iterations");
  fit.report.iterations = static_cast<int>(r.integer());
  r.expect("restarts");
  fit.report.restarts = static_cast<int>(r.integer());
  r.expect("end");
  return fit;
}

} // namespace nskrig
