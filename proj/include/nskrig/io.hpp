#ifndef NSKRIG_IO_HPP
#define NSKRIG_IO_HPP

#include <string>
#include <vector>

#include "nskrig/basis.hpp"
#include "nskrig/engine.hpp"

namespace nskrig {

// Round-trip-exact decimal formatting (17 significant digits) used for every
// number the tool writes, so identical runs produce identical bytes.
std::string format_double(double v);

// CSV with header x,y,value and optional replicate and cov_* columns.
// Non-finite values and malformed rows are rejected with their row number.
SpatialDataset ingest_csv(const std::string& path);

// Atomic file write: content goes to a temporary sibling, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string dataset_to_csv(const SpatialDataset& data);
std::string realization_to_csv(const FieldRealization& realization);
std::string prediction_to_csv(const PredictionResult& prediction);

// Per-location ellipse-field records (x, y, lambda1, lambda2, angle, sigma,
// kappa) for plotting kernel maps.
std::string ellipse_field_to_csv(const NsModel& model, const std::vector<Location>& grid,
                                 const CovariateTable* covariates = nullptr);

// EOF loadings as (location index, component index, loading).
std::string eofs_to_csv(const EOFBasis& basis);

// Structured text serialization of a ModelFit; reproduces predictions
// bit-exactly on reload. Covers the families fit_mle can produce.
std::string serialize_model_fit(const ModelFit& fit);
ModelFit deserialize_model_fit(const std::string& text);

} // namespace nskrig

#endif
