#pragma once

#include <string>
#include <vector>

namespace qgbsde {

/// One convergence-study record: scheme estimate against the oracle at a
/// given partition size, with the stability maxima snapshot.
struct ConvergenceRow {
    int n = 0;
    double y0 = 0.0;
    double oracle = 0.0;
    double rel_error = 0.0;  // (y0 - oracle) / oracle
    double runtime_s = 0.0;
    double max_u = 0.0;
    double max_du = 0.0;
    double max_d2u = 0.0;
    double max_d3u = 0.0;
    std::string flags;  // semicolon-joined markers, e.g. "divergent"

    bool divergent() const { return flags.find("divergent") != std::string::npos; }
};

/// Least-squares slope of log10|rel_error| against log10 n. Divergent rows
/// are excluded; fewer than 3 usable rows is an error.
double fit_rate(const std::vector<ConvergenceRow>& rows);

/// Writes rows as CSV: fixed header, 17 significant digits, LF endings.
void emit_csv(const std::vector<ConvergenceRow>& rows, const std::string& path);
std::string csv_string(const std::vector<ConvergenceRow>& rows);

/// Parses a file produced by emit_csv.
std::vector<ConvergenceRow> read_csv(const std::string& path);

}  // namespace qgbsde
