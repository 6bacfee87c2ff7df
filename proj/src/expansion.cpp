#include "qgbsde/expansion.hpp"

#include <cmath>
#include <stdexcept>

namespace qgbsde {

Vec euler_flow(const ForwardModel& model, double t_start, double t, const Vec& x) {
    if (t < t_start) throw std::invalid_argument("euler_flow: t must be >= t_start");
    return x + (t - t_start) * model.b(t_start, x);
}

CoeffBundle coeff_bundle(const ForwardModel& model, double t_start, double t_end,
                         double t, const Vec& x, double value, const Vec& gradient,
                         const Mat& hessian) {
    if (t < t_start || t > t_end) {
        throw std::invalid_argument("coeff_bundle: t outside the interval");
    }
    if (!hessian.isApprox(hessian.transpose(), 1e-12)) {
        throw std::invalid_argument("coeff_bundle: hessian must be symmetric");
    }
    const double delta_t = t_end - t;
    const Vec chi = euler_flow(model, t_start, t_end, x);
    const Mat jac = model.db_dx(t_end, chi);

    CoeffBundle out;
    out.y_bar = value;
    out.y1_bar = gradient + delta_t * (jac * gradient);

    Mat transported = jac * hessian;
    out.G2_bar = hessian + delta_t * (transported + transported.transpose());
    if (model.has_drift_hessian) {
        const int d = model.d;
        for (int m = 0; m < d; ++m) {
            out.G2_bar += delta_t * gradient(m) * model.d2b_dx2(t_end, chi, m);
        }
    }
    // G2_bar at t = t_end is the raw hessian, so the trace uses it directly.
    const Mat vol = model.sigma(t_end, chi);
    out.y20_bar = delta_t * (hessian * (vol * vol.transpose())).trace();
    return out;
}

StepValues step_values(const ForwardModel& model, const Driver& driver,
                       double t_start, double t_end, const Vec& x, double value,
                       const Vec& gradient, const Mat& hessian) {
    const double h = t_end - t_start;
    const CoeffBundle cb =
        coeff_bundle(model, t_start, t_end, t_start, x, value, gradient, hessian);

    StepValues out;
    out.y1_bar = cb.y1_bar;
    out.Z_hat = cb.y1_bar.transpose() * model.sigma(t_start, x);
    const double y_tilde = cb.y_bar + 0.5 * cb.y20_bar;
    const double f_val = driver.f(t_start, x, y_tilde, out.Z_hat);
    out.Y_hat = y_tilde + h * f_val;
    out.finite = std::isfinite(out.Y_hat) && out.Z_hat.allFinite();
    return out;
}

}  // namespace qgbsde
