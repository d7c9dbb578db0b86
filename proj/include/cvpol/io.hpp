#pragma once

// JSON serialization for states, reports and trace metadata.

#include <string>

#include "json.hpp"

#include "cvpol/entanglement.hpp"
#include "cvpol/gaussian_state.hpp"
#include "cvpol/homodyne.hpp"
#include "cvpol/stokes.hpp"

namespace cvpol {

inline constexpr const char* kConventionTag = "vacuum_variance_1";

nlohmann::json matrix_to_json(const Matrix2c<double>& m);

/// Parses [[[re,im],[re,im]],[[re,im],[re,im]]]; `field` names the value in diagnostics.
Matrix2c<double> matrix_from_json(const nlohmann::json& j, const std::string& field);

nlohmann::json state_to_json(const GaussianState& s);

/// Validates schema, convention tag, structural invariants and the Heisenberg condition.
/// Throws FormatError (syntax, with line/column) or PreconditionError (field diagnostics).
GaussianState state_from_json(const nlohmann::json& j);
GaussianState parse_state(const std::string& text);
GaussianState read_state_file(const std::string& path);

nlohmann::json report_to_json(const EntanglementReport& r);
nlohmann::json stokes_report_to_json(const StokesReport& r);

nlohmann::json trace_sidecar_json(const HomodyneTrace& trace);
/// Copies analysis_frequency_mhz, seed and state_ref from a sidecar document into `trace`.
void apply_trace_sidecar(const nlohmann::json& j, HomodyneTrace& trace);

/// Parses JSON text, converting syntax errors to FormatError with line and column.
nlohmann::json parse_json_text(const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace cvpol
