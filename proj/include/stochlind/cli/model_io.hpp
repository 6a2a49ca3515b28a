#pragma once

// Model files and the compiled-in presets.
//
// A model file is a JSON object:
//
//   {
//     "dim": 2,
//     "hamiltonian":  <matrix>,
//     "lindblad_ops": [<matrix>, ...],
//     "weights":      [d_1, ...],          optional when there is one operator
//     "covariance":   [[c_11, ...], ...],  optional, default identity
//     "initial_state": <matrix>            optional, default uniform superposition
//   }
//
// A complex entry is [re, im]; a matrix is a row-major array of rows.

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stochlind/errors.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/operator_algebra.hpp"

namespace stochlind::cli {

using json = nlohmann::json;

/// Malformed model text. The message names the JSON location.
class ModelFormatError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct ModelFile {
    std::string source;
    LindbladModel model;
    DensityMatrix initial_state;
};

namespace detail {

[[noreturn]] inline void format_error(const std::string& where, const std::string& what)
{
    throw ModelFormatError(where + ": " + what);
}

inline double number_at(const json& j, const std::string& where)
{
    if (!j.is_number()) {
        format_error(where, "expected a number, got " + std::string(j.type_name()));
    }
    const double x = j.get<double>();
    if (!std::isfinite(x)) {
        format_error(where, "non-finite number");
    }
    return x;
}

}  // namespace detail

inline ComplexMatrix parse_matrix_literal(const json& j, const std::string& where, Index dim)
{
    if (!j.is_array() || static_cast<Index>(j.size()) != dim) {
        detail::format_error(where, "expected an array of " + std::to_string(dim) + " rows");
    }
    ComplexMatrix m(dim, dim);
    for (Index r = 0; r < dim; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        const std::string rw = where + "/" + std::to_string(r);
        if (!row.is_array() || static_cast<Index>(row.size()) != dim) {
            detail::format_error(rw, "expected a row of " + std::to_string(dim) + " entries");
        }
        for (Index c = 0; c < dim; ++c) {
            const json& e = row[static_cast<std::size_t>(c)];
            const std::string ew = rw + "/" + std::to_string(c);
            if (!e.is_array() || e.size() != 2) {
                detail::format_error(ew, "expected a complex entry [re, im]");
            }
            m(r, c) = Complex(detail::number_at(e[0], ew + "/0"), detail::number_at(e[1], ew + "/1"));
        }
    }
    return m;
}

inline json matrix_literal(const ComplexMatrix& m)
{
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) {
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline RealMatrix parse_real_matrix(const json& j, const std::string& where, Index size)
{
    if (!j.is_array() || static_cast<Index>(j.size()) != size) {
        detail::format_error(where, "expected an array of " + std::to_string(size) + " rows");
    }
    RealMatrix m(size, size);
    for (Index r = 0; r < size; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        const std::string rw = where + "/" + std::to_string(r);
        if (!row.is_array() || static_cast<Index>(row.size()) != size) {
            detail::format_error(rw, "expected a row of " + std::to_string(size) + " numbers");
        }
        for (Index c = 0; c < size; ++c) {
            m(r, c) = detail::number_at(row[static_cast<std::size_t>(c)], rw + "/" + std::to_string(c));
        }
    }
    return m;
}

inline DensityMatrix default_initial_state(Index dim)
{
    return DensityMatrix::pure(ComplexVector::Ones(dim));
}

/// Builds the model and checks the hard invariants; throws ModelError with
/// the residual when they fail. The soft drift constraint is not checked.
inline ModelFile parse_model_json(const json& j, const std::string& source)
{
    if (!j.is_object()) {
        detail::format_error(source, "top level must be an object");
    }
    if (!j.contains("dim")) {
        detail::format_error(source + ":/dim", "missing");
    }
    if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1) {
        detail::format_error(source + ":/dim", "expected a positive integer");
    }
    const Index dim = j["dim"].get<Index>();

    if (!j.contains("hamiltonian")) {
        detail::format_error(source + ":/hamiltonian", "missing");
    }
    const ComplexMatrix h = parse_matrix_literal(j["hamiltonian"], source + ":/hamiltonian", dim);

    if (!j.contains("lindblad_ops") || !j["lindblad_ops"].is_array() || j["lindblad_ops"].empty()) {
        detail::format_error(source + ":/lindblad_ops", "expected a nonempty array of matrices");
    }
    std::vector<ComplexMatrix> ops;
    for (std::size_t n = 0; n < j["lindblad_ops"].size(); ++n) {
        ops.push_back(parse_matrix_literal(j["lindblad_ops"][n], source + ":/lindblad_ops/" + std::to_string(n), dim));
    }
    const Index noises = static_cast<Index>(ops.size());

    std::vector<double> weights;
    if (j.contains("weights")) {
        const json& w = j["weights"];
        if (!w.is_array() || static_cast<Index>(w.size()) != noises) {
            detail::format_error(source + ":/weights", "expected " + std::to_string(noises) + " numbers");
        }
        for (std::size_t n = 0; n < w.size(); ++n) {
            weights.push_back(detail::number_at(w[n], source + ":/weights/" + std::to_string(n)));
        }
    } else if (noises == 1) {
        weights = {1.0};
    } else {
        detail::format_error(source + ":/weights", "required when there is more than one Lindblad operator");
    }

    RealMatrix c = RealMatrix::Identity(noises, noises);
    if (j.contains("covariance")) {
        c = parse_real_matrix(j["covariance"], source + ":/covariance", noises);
    }

    ModelFile out{source,
                  LindbladModel(HermitianOperator(h), std::move(ops), std::move(weights), RealSymmetricMatrix(c)),
                  default_initial_state(dim)};
    if (j.contains("initial_state")) {
        out.initial_state = DensityMatrix(parse_matrix_literal(j["initial_state"], source + ":/initial_state", dim));
    }
    require_valid(out.model);
    return out;
}

inline ModelFile parse_model_text(const std::string& text, const std::string& source)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelFormatError(source + ": " + e.what());
    }
    return parse_model_json(j, source);
}

//---------------------------------------------------------------------------//
// Presets
//---------------------------------------------------------------------------//

inline std::vector<std::string> preset_names()
{
    return {"dephasing", "amplitude-damping", "stochastic-unitary-larmor", "two-noise-correlated"};
}

/// JSON text of a preset, in model-file form.
inline std::optional<json> preset_json(const std::string& name)
{
    using namespace qubit;
    const ComplexMatrix zero = ComplexMatrix::Zero(2, 2);
    const double r2 = std::sqrt(2.0);
    json j;
    j["dim"] = 2;
    if (name == "dephasing") {
        // v = -i sigma_z / sqrt(2): coherences decay as e^{-t}.
        j["hamiltonian"] = matrix_literal(zero);
        j["lindblad_ops"] = json::array({matrix_literal(-kI * sigma_z() / r2)});
        j["weights"] = {1.0};
        j["covariance"] = json::array({json::array({1.0})});
        j["initial_state"] = matrix_literal(plus_state() * plus_state().adjoint());
    } else if (name == "amplitude-damping") {
        // v = sigma_minus (gamma = 1): excited population decays as e^{-t}.
        j["hamiltonian"] = matrix_literal(zero);
        j["lindblad_ops"] = json::array({matrix_literal(sigma_minus())});
        j["weights"] = {1.0};
        j["covariance"] = json::array({json::array({1.0})});
        j["initial_state"] = matrix_literal(plus_state() * plus_state().adjoint());
    } else if (name == "stochastic-unitary-larmor") {
        // H = sigma_z, K = sigma_z (v = -iK).
        j["hamiltonian"] = matrix_literal(sigma_z());
        j["lindblad_ops"] = json::array({matrix_literal(-kI * sigma_z())});
        j["weights"] = {1.0};
        j["covariance"] = json::array({json::array({1.0})});
        j["initial_state"] = matrix_literal(plus_state() * plus_state().adjoint());
    } else if (name == "two-noise-correlated") {
        // Fully correlated noises (c = all ones). The Hermitian parts of v_1
        // and v_2 cancel in the sum, so the drift constraint holds only
        // because the two increments coincide.
        const ComplexMatrix v1 = 0.5 * sigma_minus() - 0.5 * kI * sigma_z();
        const ComplexMatrix v2 = -0.5 * sigma_minus() - 0.5 * kI * sigma_x();
        j["hamiltonian"] = matrix_literal(0.5 * sigma_x());
        j["lindblad_ops"] = json::array({matrix_literal(v1), matrix_literal(v2)});
        j["weights"] = {1.0 / r2, 1.0 / r2};
        j["covariance"] = json::array({json::array({1.0, 1.0}), json::array({1.0, 1.0})});
        j["initial_state"] = matrix_literal(plus_state() * plus_state().adjoint());
    } else {
        return std::nullopt;
    }
    return j;
}

inline ModelFile load_preset(const std::string& name)
{
    const auto j = preset_json(name);
    if (!j) {
        throw ModelFormatError("unknown preset '" + name + "'");
    }
    return parse_model_json(*j, "preset:" + name);
}

/// `spec` is a file path, "preset:NAME", or a bare preset name when no file
/// of that name exists.
inline ModelFile load_model(const std::string& spec)
{
    const std::string prefix = "preset:";
    if (spec.rfind(prefix, 0) == 0) {
        return load_preset(spec.substr(prefix.size()));
    }
    if (!std::filesystem::exists(spec)) {
        if (preset_json(spec)) {
            return load_preset(spec);
        }
        throw ModelFormatError(spec + ": no such file or preset");
    }
    std::ifstream in(spec);
    if (!in) {
        throw ModelFormatError(spec + ": cannot open");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_text(buf.str(), spec);
}

/// Observables file: a JSON array of Hermitian matrix literals.
inline std::vector<HermitianOperator> load_observables(const std::string& path, Index dim)
{
    std::ifstream in(path);
    if (!in) {
        throw ModelFormatError(path + ": cannot open");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ModelFormatError(path + ": " + e.what());
    }
    if (!j.is_array()) {
        throw ModelFormatError(path + ": expected an array of matrices");
    }
    std::vector<HermitianOperator> out;
    for (std::size_t k = 0; k < j.size(); ++k) {
        out.emplace_back(parse_matrix_literal(j[k], path + ":/" + std::to_string(k), dim));
    }
    return out;
}

}  // namespace stochlind::cli
