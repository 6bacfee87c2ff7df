#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

namespace qgbsde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

/// Coefficients of the forward diffusion dX = b dt + sigma dW.
///
/// The Jacobian convention is [db_dx]_{j,k} = d b^k / d x^j, so the
/// transported gradient reads grad + h * db_dx * grad.
struct ForwardModel {
    int d = 1;
    std::function<Vec(double, const Vec&)> b;
    std::function<Mat(double, const Vec&)> sigma;
    std::function<Mat(double, const Vec&)> db_dx;
    /// Hessian of drift component m; only needed for non-affine drifts.
    bool has_drift_hessian = false;
    std::function<Mat(double, const Vec&, int)> d2b_dx2;
};

/// Generator f(t, x, y, z) together with the structure-condition
/// parameters |f| <= l_bound + beta |y| + (gamma/2) |z|^2.
struct Driver {
    std::function<double(double, const Vec&, double, const RowVec&)> f;
    double beta = 0.0;
    double gamma = 1.0;
    double l_bound = 0.0;
    std::optional<double> lipschitz_in_z;
    /// Set when truncate_driver was asked to run with a disabled rule.
    bool truncation_skipped = false;
};

struct TerminalFunction {
    std::function<double(const Vec&)> xi;
    std::optional<double> sup_bound;
    bool smooth = true;
};

/// Radial clamp rule for the z-argument of the driver, radius N(n)/gamma
/// with N(n) = c_N * n^alpha.
struct TruncationRule {
    double alpha = 1.0 / 3.0;
    double c_N = 1.0;
    bool enabled = false;

    double cap(int n) const;                    // N(n)
    double radius(int n, double gamma) const;   // N(n) / gamma
};

struct UniversalBound {
    double y_bound = 0.0;
    double z_bmo_bound = 0.0;
};

/// A priori sup-norm bound on Y and BMO-norm bound on Z implied by the
/// structure condition. Throws std::invalid_argument for gamma <= 0.
UniversalBound universal_bound(double beta, double gamma, double l_bound,
                               double xi_bound, double T);

/// Wraps the driver's z-argument with the radial clamp so the result has a
/// finite global Lipschitz constant in z. Disabled rule returns the driver
/// unchanged with truncation_skipped set.
Driver truncate_driver(const Driver& driver, const TruncationRule& rule, int n);

/// 2-d lognormal forward model with correlated Brownian drivers and the
/// purely quadratic driver f = (a/2)|z|^2.
std::pair<ForwardModel, Driver> preset_qg_2d(double b1, double b2,
                                             double sigma1, double sigma2,
                                             double rho, double a);

/// 1-d Black-Scholes-type model with distinct lending rate r and borrowing
/// rate R. Sign convention Y_t = xi + int f - int Z dW, so
/// f = -( r y + (mu-r)/sigma z - (y - z/sigma)^- (R - r) ).
std::pair<ForwardModel, Driver> preset_two_rate(double mu, double sigma,
                                                double r, double R);

enum class TerminalKind { sin2, capped_spread, call, call_spread, custom };

struct TerminalParams {
    double strike = 0.0;     // call
    double strike1 = 0.0;    // call_spread
    double strike2 = 0.0;
    double weight = 1.0;     // call_spread short leg
    std::function<double(const Vec&)> custom;
    std::optional<double> custom_sup_bound;
    bool custom_smooth = false;
};

TerminalFunction preset_terminal(TerminalKind kind, const TerminalParams& params = {});
TerminalKind terminal_kind_from_string(const std::string& name);

/// Same dynamics as preset_qg_2d expressed in v = log x coordinates: the
/// drift becomes the constant (b_i - sigma_i^2/2) and the diffusion matrix
/// constant, while Y and Z are unchanged as processes.
std::pair<ForwardModel, Driver> preset_qg_2d_log(double b1, double b2,
                                                 double sigma1, double sigma2,
                                                 double rho, double a);

std::pair<ForwardModel, Driver> preset_two_rate_log(double mu, double sigma,
                                                    double r, double R);

/// Composes a terminal with exp so it can be used with the log-coordinate
/// models above.
TerminalFunction log_wrap_terminal(const TerminalFunction& terminal);

}  // namespace qgbsde
