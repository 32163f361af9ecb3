#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opplab/qform.hpp"

namespace opplab {

/// One row of the quantitative Oppenheim table.
struct ExperimentRow {
    double T = 0;
    std::int64_t total = 0;
    double main = 0;  // C_Q (b - a) T
    std::int64_t special = 0;
    double residual = 0;  // total - main - special
    double residual_over_T = 0;
};

/// Counts, main term and the exceptional contribution at t = log T for each
/// T of an ascending list. C_Q is computed once, by quadrature to tol.
std::vector<ExperimentRow> experiment_quantitative(const QForm& q, double a, double b,
                                                   const std::vector<double>& T_list, double rho, double A,
                                                   NormKind norm = NormKind::Euclidean, double tol = 1e-8);

/// Loads a form file: {"coeffs": [c11,c22,c33,c12,c13,c23]} or
/// {"matrix": [[...],[...],[...]]}, optionally with
/// {"exact": {"num": [[...],[...],[...]], "den": d}}. When "exact" is present
/// it must agree with the floating-point coefficients (if any) to 1e-12.
QForm load_form(const std::string& path);
QForm parse_form_json(const std::string& text);

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBudget = 3;

/// Entry point of the opplab tool; args excludes the program name.
/// Results go to `out` (or to the --out file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opplab
