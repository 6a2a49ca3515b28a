#pragma once

// Flat CSV for state histories: time, re/im of every rho entry (row-major),
// trace_re, min_eigenvalue, purity, then stderr for ensembles and one
// column per observable when requested. Numbers use %.17g so values
// round-trip.

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "stochlind/operator_algebra.hpp"

namespace stochlind::cli {

inline std::string format_number(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct CsvColumns {
    bool with_stderr = false;
    std::size_t observables = 0;
};

inline void write_state_header(std::ostream& os, Index dim, const CsvColumns& cols)
{
    os << "time";
    for (Index r = 0; r < dim; ++r) {
        for (Index c = 0; c < dim; ++c) {
            os << ",re_" << r << "_" << c << ",im_" << r << "_" << c;
        }
    }
    os << ",trace_re,min_eigenvalue,purity";
    if (cols.with_stderr) {
        os << ",stderr";
    }
    for (std::size_t k = 0; k < cols.observables; ++k) {
        os << ",obs_" << k;
    }
    os << "\n";
}

inline void write_state_row(std::ostream& os, double t, const ComplexMatrix& rho, const double* standard_error,
                            std::span<const HermitianOperator> observables)
{
    os << format_number(t);
    for (Index r = 0; r < rho.rows(); ++r) {
        for (Index c = 0; c < rho.cols(); ++c) {
            os << "," << format_number(rho(r, c).real()) << "," << format_number(rho(r, c).imag());
        }
    }
    os << "," << format_number(rho.trace().real()) << "," << format_number(min_eigenvalue(rho)) << ","
       << format_number(purity(rho));
    if (standard_error) {
        os << "," << format_number(*standard_error);
    }
    for (const auto& o : observables) {
        os << "," << format_number((rho * o.matrix()).trace().real());
    }
    os << "\n";
}

}  // namespace stochlind::cli
