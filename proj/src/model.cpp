#include "qgbsde/model.hpp"

#include <cmath>
#include <stdexcept>

namespace qgbsde {

double TruncationRule::cap(int n) const {
    return c_N * std::pow(static_cast<double>(n), alpha);
}

double TruncationRule::radius(int n, double gamma) const {
    return cap(n) / gamma;
}

UniversalBound universal_bound(double beta, double gamma, double l_bound,
                               double xi_bound, double T) {
    if (gamma <= 0.0) {
        throw std::invalid_argument("universal_bound: gamma must be positive");
    }
    if (beta < 0.0 || l_bound < 0.0 || xi_bound < 0.0 || T <= 0.0) {
        throw std::invalid_argument("universal_bound: inputs must be nonnegative, T > 0");
    }
    UniversalBound out;
    out.y_bound = std::exp(beta * T) * (xi_bound + T * l_bound);
    out.z_bmo_bound = std::exp(4.0 * gamma * out.y_bound) / (gamma * gamma) *
                      (3.0 + 6.0 * gamma * T * (beta * out.y_bound + l_bound));
    return out;
}

Driver truncate_driver(const Driver& driver, const TruncationRule& rule, int n) {
    if (!rule.enabled) {
        Driver out = driver;
        out.truncation_skipped = true;
        return out;
    }
    if (driver.gamma <= 0.0) {
        throw std::invalid_argument("truncate_driver: driver.gamma must be positive");
    }
    const double cap = rule.cap(n);
    const double radius = cap / driver.gamma;
    Driver out = driver;
    auto inner = driver.f;
    out.f = [inner, radius](double t, const Vec& x, double y, const RowVec& z) {
        const double norm = z.norm();
        if (norm <= radius) return inner(t, x, y, z);
        RowVec clamped = z * (radius / norm);
        return inner(t, x, y, clamped);
    };
    // gamma * radius is exact for the quadratic preset; 2N bounds the rest.
    double lip = cap;
    if (driver.lipschitz_in_z) lip = std::min(*driver.lipschitz_in_z, 2.0 * cap);
    out.lipschitz_in_z = lip;
    return out;
}

std::pair<ForwardModel, Driver> preset_qg_2d(double b1, double b2,
                                             double sigma1, double sigma2,
                                             double rho, double a) {
    if (std::abs(rho) > 1.0) {
        throw std::invalid_argument("preset_qg_2d: |rho| must be <= 1");
    }
    if (sigma1 <= 0.0 || sigma2 <= 0.0) {
        throw std::invalid_argument("preset_qg_2d: volatilities must be positive");
    }
    ForwardModel model;
    model.d = 2;
    model.b = [b1, b2](double, const Vec& x) {
        Vec out(2);
        out << b1 * x(0), b2 * x(1);
        return out;
    };
    const double root = std::sqrt(1.0 - rho * rho);
    model.sigma = [sigma1, sigma2, rho, root](double, const Vec& x) {
        Mat out(2, 2);
        out << sigma1 * x(0), 0.0,
               sigma2 * x(1) * rho, sigma2 * x(1) * root;
        return out;
    };
    model.db_dx = [b1, b2](double, const Vec&) {
        Mat out = Mat::Zero(2, 2);
        out(0, 0) = b1;
        out(1, 1) = b2;
        return out;
    };
    model.has_drift_hessian = true;
    model.d2b_dx2 = [](double, const Vec&, int) { return Mat::Zero(2, 2); };

    Driver driver;
    driver.f = [a](double, const Vec&, double, const RowVec& z) {
        return 0.5 * a * z.squaredNorm();
    };
    driver.beta = 0.0;
    driver.gamma = a;
    driver.l_bound = 0.0;
    return {model, driver};
}

std::pair<ForwardModel, Driver> preset_two_rate(double mu, double sigma,
                                                double r, double R) {
    if (sigma <= 0.0) {
        throw std::invalid_argument("preset_two_rate: sigma must be positive");
    }
    ForwardModel model;
    model.d = 1;
    model.b = [mu](double, const Vec& x) { return Vec::Constant(1, mu * x(0)); };
    model.sigma = [sigma](double, const Vec& x) {
        return Mat::Constant(1, 1, sigma * x(0));
    };
    model.db_dx = [mu](double, const Vec&) { return Mat::Constant(1, 1, mu); };
    model.has_drift_hessian = true;
    model.d2b_dx2 = [](double, const Vec&, int) { return Mat::Zero(1, 1); };

    const double theta = (mu - r) / sigma;
    Driver driver;
    driver.f = [r, R, sigma, theta](double, const Vec&, double y, const RowVec& z) {
        const double shortfall = std::max(z(0) / sigma - y, 0.0);  // (y - z/sigma)^-
        return -(r * y + theta * z(0) - shortfall * (R - r));
    };
    const double z_lip = std::abs(theta) + std::abs(R - r) / sigma;
    driver.beta = std::abs(r) + std::abs(R - r);
    driver.gamma = 1.0;
    driver.l_bound = 0.5 * z_lip * z_lip;  // c|z| <= c^2/2 + |z|^2/2
    driver.lipschitz_in_z = z_lip;
    return {model, driver};
}

TerminalFunction preset_terminal(TerminalKind kind, const TerminalParams& params) {
    TerminalFunction out;
    switch (kind) {
        case TerminalKind::sin2:
            out.xi = [](const Vec& x) {
                const double s1 = std::sin(x(0));
                const double s2 = std::sin(x(1));
                return 3.0 * (s1 * s1 + s2 * s2);
            };
            out.sup_bound = 6.0;
            out.smooth = true;
            break;
        case TerminalKind::capped_spread:
            out.xi = [](const Vec& x) {
                return std::min(std::max(x(0), 1.0), 3.0) + std::max(2.0 - x(1), 0.0);
            };
            out.smooth = false;
            break;
        case TerminalKind::call: {
            if (params.strike <= 0.0) {
                throw std::invalid_argument("preset_terminal: strike must be positive");
            }
            const double k = params.strike;
            out.xi = [k](const Vec& x) { return std::max(x(0) - k, 0.0); };
            out.smooth = false;
            break;
        }
        case TerminalKind::call_spread: {
            if (params.strike1 <= 0.0 || params.strike2 <= 0.0) {
                throw std::invalid_argument("preset_terminal: strikes must be positive");
            }
            const double k1 = params.strike1;
            const double k2 = params.strike2;
            const double c = params.weight;
            out.xi = [k1, k2, c](const Vec& x) {
                return std::max(x(0) - k1, 0.0) - c * std::max(x(0) - k2, 0.0);
            };
            out.smooth = false;
            break;
        }
        case TerminalKind::custom:
            if (!params.custom) {
                throw std::invalid_argument("preset_terminal: custom function missing");
            }
            out.xi = params.custom;
            out.sup_bound = params.custom_sup_bound;
            out.smooth = params.custom_smooth;
            break;
        default:
            throw std::invalid_argument("preset_terminal: unknown kind");
    }
    return out;
}

TerminalKind terminal_kind_from_string(const std::string& name) {
    if (name == "sin2") return TerminalKind::sin2;
    if (name == "capped_spread") return TerminalKind::capped_spread;
    if (name == "call") return TerminalKind::call;
    if (name == "call_spread") return TerminalKind::call_spread;
    if (name == "custom") return TerminalKind::custom;
    throw std::invalid_argument("unknown terminal kind: " + name);
}

namespace {

Driver wrap_driver_log(const Driver& driver) {
    Driver out = driver;
    auto inner = driver.f;
    out.f = [inner](double t, const Vec& v, double y, const RowVec& z) {
        Vec x = v.array().exp().matrix();
        return inner(t, x, y, z);
    };
    return out;
}

}  // namespace

std::pair<ForwardModel, Driver> preset_qg_2d_log(double b1, double b2,
                                                 double sigma1, double sigma2,
                                                 double rho, double a) {
    auto [orig_model, driver] = preset_qg_2d(b1, b2, sigma1, sigma2, rho, a);
    (void)orig_model;
    ForwardModel model;
    model.d = 2;
    Vec drift(2);
    drift << b1 - 0.5 * sigma1 * sigma1, b2 - 0.5 * sigma2 * sigma2;
    const double root = std::sqrt(1.0 - rho * rho);
    Mat vol(2, 2);
    vol << sigma1, 0.0,
           sigma2 * rho, sigma2 * root;
    model.b = [drift](double, const Vec&) { return drift; };
    model.sigma = [vol](double, const Vec&) { return vol; };
    model.db_dx = [](double, const Vec&) { return Mat::Zero(2, 2); };
    model.has_drift_hessian = true;
    model.d2b_dx2 = [](double, const Vec&, int) { return Mat::Zero(2, 2); };
    return {model, wrap_driver_log(driver)};
}

std::pair<ForwardModel, Driver> preset_two_rate_log(double mu, double sigma,
                                                    double r, double R) {
    auto [orig_model, driver] = preset_two_rate(mu, sigma, r, R);
    (void)orig_model;
    ForwardModel model;
    model.d = 1;
    const double drift = mu - 0.5 * sigma * sigma;
    model.b = [drift](double, const Vec&) { return Vec::Constant(1, drift); };
    model.sigma = [sigma](double, const Vec&) { return Mat::Constant(1, 1, sigma); };
    model.db_dx = [](double, const Vec&) { return Mat::Zero(1, 1); };
    model.has_drift_hessian = true;
    model.d2b_dx2 = [](double, const Vec&, int) { return Mat::Zero(1, 1); };
    return {model, wrap_driver_log(driver)};
}

TerminalFunction log_wrap_terminal(const TerminalFunction& terminal) {
    TerminalFunction out = terminal;
    auto inner = terminal.xi;
    out.xi = [inner](const Vec& v) {
        Vec x = v.array().exp().matrix();
        return inner(x);
    };
    return out;
}

}  // namespace qgbsde
