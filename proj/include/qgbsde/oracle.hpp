#pragma once

#include "qgbsde/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgbsde {

/// Exponential-transform reference problem: 2-d lognormal forward with
/// correlated Brownian drivers and the purely quadratic driver (a/2)|z|^2,
/// for which Y_0 = (1/a) log E[exp(a xi(X_T))].
struct QuadratureSpec {
    int order = 16;  // Gauss-Legendre points per panel of the graded axis rule
    double a = 1.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double sigma1 = 0.5;
    double sigma2 = 0.5;
    double rho = 0.0;
    double T = 1.0;
    Vec x0;
    TerminalFunction terminal;
    // Kink locations of the terminal per axis (in x), used as panel
    // boundaries so piecewise-smooth payoffs keep spectral accuracy.
    std::vector<double> kinks1;
    std::vector<double> kinks2;
};

struct OracleValue {
    double value = 0.0;
    double check_discrepancy = 0.0;  // |order vs 2*order| Richardson gap
};

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long paths = 0;
};

class QuadratureNotConverged : public std::runtime_error {
public:
    QuadratureNotConverged(const std::string& what, double coarse, double fine)
        : std::runtime_error(what), coarse_value(coarse), fine_value(fine) {}
    double coarse_value;
    double fine_value;
};

/// Gauss-Hermite nodes and weights for weight e^{-s^2} (Golub-Welsch).
/// Weights sum to sqrt(pi) to 1e-12 or the call throws.
void gauss_hermite(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Y_0 by tensor quadrature in shifted log-space: per axis a composite
/// Gauss-Legendre rule in the standardized normal variable whose panels
/// shrink with the local oscillation period of xi composed with the
/// lognormal map. Verified by doubling the panel resolution; throws
/// QuadratureNotConverged when the two values disagree beyond 1e-8 relative.
OracleValue qg_closed_form(const QuadratureSpec& spec);

/// Plain Monte Carlo of the same expectation with a delta-method standard
/// error. Deterministic given the seed, independent of the worker count.
McEstimate mc_check(const QuadratureSpec& spec, long paths, std::uint64_t seed,
                    int threads = 0);

double black_scholes_call(double x0, double strike, double sigma, double rate,
                          double T);
double black_scholes_put(double x0, double strike, double sigma, double rate,
                         double T);

struct ReferenceValue {
    double value = 0.0;
    double tolerance = 0.0;
    std::string note;
};

/// Published comparison values for the two-rate experiments.
ReferenceValue reference_value(const std::string& case_id);

}  // namespace qgbsde
