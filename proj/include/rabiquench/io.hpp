#pragma once

// CSV / JSON formats shared by the CLI and the Python module.
//
//   time series   t,<column>
//   spectrum      nu,power
//   sweep         '#' provenance line, then
//                 p,pressure_bar,nu0,b,A,converged,n_traj,nu0_se,b_se
//   dataset       '#' comment lines, then pressure_bar,nu0_norm,b_norm
//
// Numbers are written in shortest round-trip form, so files are byte
// identical for identical results.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "rabiquench/qdyn.hpp"
#include "rabiquench/spectra.hpp"
#include "rabiquench/sweep.hpp"

namespace rabiquench {

using Json = nlohmann::ordered_json;

std::string format_double(double value);

/// FNV-1a 64-bit hash, hex encoded.
std::string content_hash(std::string_view text);

Json config_to_json(const QuantumModelConfig& config);
Json config_to_json(const ClassicalModelConfig& config);
Json config_to_json(const ModelConfig& config);

Json fit_to_json(const LineshapeFit& fit);
Json comparison_to_json(const ComparisonReport& report);
Json coherence_to_json(const CoherenceStatistics& stats);

void write_timeseries_csv(std::ostream& out, const TimeSeries& series, std::string_view column = "y");
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);
Spectrum read_spectrum_csv(std::istream& in);

void write_sweep_csv(std::ostream& out, const SweepResult& result,
                     std::optional<PressureScaling> scaling = std::nullopt);
/// Requires columns p, nu0, b; throws SchemaError otherwise.
SweepResult read_sweep_csv(std::istream& in);

void write_dataset_csv(std::ostream& out, const ExperimentalDataset& data);
/// Requires columns pressure_bar, nu0_norm, b_norm; '#' lines become the
/// source label.
ExperimentalDataset read_dataset_csv(std::istream& in);

}  // namespace rabiquench
