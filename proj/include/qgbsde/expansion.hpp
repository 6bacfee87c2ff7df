#pragma once

#include "qgbsde/model.hpp"

namespace qgbsde {

/// Euler-flow coefficient bundle for one interval [t_start, t_end]:
/// the value transported along the drift flow, the transported gradient,
/// the symmetrized second-order matrix and the trace correction.
struct CoeffBundle {
    double y_bar = 0.0;
    Vec y1_bar;
    Mat G2_bar;
    double y20_bar = 0.0;
};

struct StepValues {
    double Y_hat = 0.0;
    RowVec Z_hat;
    Vec y1_bar;
    bool finite = true;
};

/// One-step Euler flow endpoint x + (t - t_start) b(t_start, x).
Vec euler_flow(const ForwardModel& model, double t_start, double t, const Vec& x);

/// Coefficient functions at a general t in [t_start, t_end]. The
/// (value, gradient, hessian) inputs are the next terminal function and its
/// derivatives evaluated at the flow endpoint chi_bar(t_end, x).
CoeffBundle coeff_bundle(const ForwardModel& model, double t_start, double t_end,
                         double t, const Vec& x, double value, const Vec& gradient,
                         const Mat& hessian);

/// Node values of the short-term expansion at t = t_start:
///   Z_hat = y1_bar^T sigma(t_start, x)
///   Y_hat = y_tilde + h f(t_start, x, y_tilde, Z_hat),  y_tilde = y_bar + y20_bar/2.
StepValues step_values(const ForwardModel& model, const Driver& driver,
                       double t_start, double t_end, const Vec& x, double value,
                       const Vec& gradient, const Mat& hessian);

}  // namespace qgbsde
