#include "cvpol/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cvpol/errors.hpp"

namespace cvpol {

using nlohmann::json;

namespace {

double number_at(const json& j, const std::string& field) {
  if (!j.is_number()) throw PreconditionError("field '" + field + "': expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw PreconditionError("field '" + field + "': value must be finite");
  return v;
}

const json& member(const json& j, const char* key) {
  if (!j.contains(key)) throw PreconditionError(std::string("missing field '") + key + "'");
  return j.at(key);
}

json complex_to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

}  // namespace

json matrix_to_json(const Matrix2c<double>& m) {
  json rows = json::array();
  for (int i = 0; i < 2; ++i) rows.push_back(json::array({complex_to_json(m(i, 0)), complex_to_json(m(i, 1))}));
  return rows;
}

Matrix2c<double> matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2) throw PreconditionError("field '" + field + "': expected 2 rows");
  Matrix2c<double> m;
  for (int i = 0; i < 2; ++i) {
    const std::string row_name = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 2) throw PreconditionError("field '" + row_name + "': expected 2 entries");
    for (int k = 0; k < 2; ++k) {
      const std::string name = row_name + "[" + std::to_string(k) + "]";
      const json& z = j[i][k];
      if (!z.is_array() || z.size() != 2) throw PreconditionError("field '" + name + "': expected [re, im]");
      m(i, k) = {number_at(z[0], name + ".re"), number_at(z[1], name + ".im")};
    }
  }
  return m;
}

json state_to_json(const GaussianState& s) {
  return json{{"convention", kConventionTag},
              {"basis_label", s.basis_label()},
              {"M", matrix_to_json(s.m())},
              {"N", matrix_to_json(s.n())}};
}

GaussianState state_from_json(const json& j) {
  if (!j.is_object()) throw PreconditionError("state: expected a JSON object");
  const json& convention = member(j, "convention");
  if (!convention.is_string() || convention.get<std::string>() != kConventionTag)
    throw PreconditionError(std::string("field 'convention': expected \"") + kConventionTag + "\"");
  const json& label = member(j, "basis_label");
  if (!label.is_string()) throw PreconditionError("field 'basis_label': expected a string");
  const Matrix2c<double> m = matrix_from_json(member(j, "M"), "M");
  const Matrix2c<double> n = matrix_from_json(member(j, "N"), "N");

  GaussianState s = [&] {
    try {
      return GaussianState(m, n, label.get<std::string>());
    } catch (const PreconditionError& e) {
      throw PreconditionError(std::string("fields 'M'/'N': ") + e.what());
    }
  }();
  const double min_eig = heisenberg_min_eigenvalue(s);
  if (min_eig <= -kVerifyTolerance) {
    std::ostringstream os;
    os << "fields 'M'/'N': state violates the Heisenberg condition (min eigenvalue of gamma + i Omega = "
       << min_eig << ")";
    throw PreconditionError(os.str());
  }
  return s;
}

json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw FormatError(std::string("JSON syntax error: ") + e.what(), line, column);
  }
}

GaussianState parse_state(const std::string& text) { return state_from_json(parse_json_text(text)); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

GaussianState read_state_file(const std::string& path) {
  try {
    return parse_state(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw PreconditionError(path + ": " + e.what());
  }
}

json report_to_json(const EntanglementReport& r) {
  json j{{"convention", kConventionTag},
         {"basis_label", r.basis_label},
         {"i_of_theta_min", r.i_of_theta_min},
         {"theta_star", r.theta_star},
         {"theta_star_optimal", r.theta_star_optimal},
         {"i_star", r.i_star},
         {"eof", r.eof},
         {"entangled", r.entangled()},
         {"decoupled_basis", matrix_to_json(r.decoupled_basis.matrix())},
         {"basis_star", matrix_to_json(r.basis_star.matrix())}};
  j["n_param"] = r.n_param ? json(*r.n_param) : json(nullptr);
  j["k_param"] = r.k_param ? json(*r.k_param) : json(nullptr);
  return j;
}

json stokes_report_to_json(const StokesReport& r) {
  return json{{"convention", kConventionTag},
              {"s1_mean_alpha", r.s1_mean_alpha},
              {"s1_mean_beta", r.s1_mean_beta},
              {"var_s2_sum", r.var_s2_sum},
              {"var_s3_sum", r.var_s3_sum},
              {"i_stokes_normalized", r.i_stokes_normalized},
              {"entangled", r.entangled}};
}

json trace_sidecar_json(const HomodyneTrace& trace) {
  return json{{"analysis_frequency_mhz", trace.analysis_frequency_mhz},
              {"seed", trace.seed},
              {"state_ref", trace.state_ref}};
}

void apply_trace_sidecar(const json& j, HomodyneTrace& trace) {
  if (!j.is_object()) throw PreconditionError("trace sidecar: expected a JSON object");
  trace.analysis_frequency_mhz = number_at(member(j, "analysis_frequency_mhz"), "analysis_frequency_mhz");
  const json& seed = member(j, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw PreconditionError("field 'seed': expected a non-negative integer");
  trace.seed = seed.get<std::uint64_t>();
  const json& ref = member(j, "state_ref");
  if (!ref.is_string()) throw PreconditionError("field 'state_ref': expected a string");
  trace.state_ref = ref.get<std::string>();
}

}  // namespace cvpol
