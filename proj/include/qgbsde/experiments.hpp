#pragma once

#include "qgbsde/fit.hpp"
#include "qgbsde/model.hpp"
#include "qgbsde/oracle.hpp"
#include "qgbsde/solver.hpp"

#include <string>
#include <vector>

namespace qgbsde {

enum class OracleBinding { quadrature, black_scholes, reference, refinement_proxy };

/// One registered benchmark: a model/driver/terminal preset, a solver
/// template (n comes from the n-list) and the oracle the results are
/// compared against.
struct ExperimentCase {
    std::string id;
    std::string model_preset;  // "qg_2d" or "two_rate"

    // qg_2d parameters
    double b1 = 0.05, b2 = 0.05;
    double sigma1 = 0.5, sigma2 = 0.5;
    double rho = 0.3;
    double a = 1.0;

    // two_rate parameters
    double mu = 0.06, sigma = 0.3, r = 0.01, R = 0.06;

    TerminalKind terminal_kind = TerminalKind::sin2;
    TerminalParams terminal_params;
    bool log_coords = true;  // solve in v = log x

    Vec x0;                  // initial point in original coordinates
    SolverConfig solver;     // template; n is overridden per run
    OracleBinding oracle = OracleBinding::quadrature;
    std::string reference_id;
    std::vector<int> n_list;
};

/// Model/driver/terminal instances ready for backward_sweep, with the
/// initial point mapped into solver coordinates.
struct Problem {
    ForwardModel model;
    Driver driver;
    TerminalFunction terminal;
    Vec x0_solver;
};

Problem build_problem(const ExperimentCase& c);

/// Quadrature oracle setup for a qg case, including the terminal's kink
/// locations as panel boundaries.
QuadratureSpec quadrature_spec(const ExperimentCase& c);

/// Reference Y_0 for quadrature / black_scholes / reference bindings.
double oracle_value(const ExperimentCase& c);

const std::vector<ExperimentCase>& experiment_registry();
const ExperimentCase& find_case(const std::string& id);
std::vector<std::string> case_ids();

struct CaseResult {
    std::vector<ConvergenceRow> rows;
    std::vector<SolveReport> reports;
    StabilityResult stability;
    bool stability_valid = false;
};

/// Runs one sweep per n in ascending order. A divergent sweep produces a
/// flagged row, not an abort. The stability verdict over the collected
/// reports is attached when at least three are available.
CaseResult run_case(const ExperimentCase& c, int threads = 0);

/// One sweep of a registered case at a given partition size.
SweepResult solve_case(const ExperimentCase& c, int n, int threads = 0,
                       bool keep_grids = false);

}  // namespace qgbsde
