#include "qgbsde/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

namespace qgbsde {

void gauss_hermite(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 2) throw std::invalid_argument("gauss_hermite: order must be >= 2");
    // Jacobi matrix of the Hermite recurrence; eigenvalues are the nodes and
    // the squared first eigenvector components carry the weights.
    Mat J = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = std::sqrt(0.5 * k);
        J(k - 1, k) = off;
        J(k, k - 1) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    const double sqrt_pi = std::sqrt(M_PI);
    nodes.resize(order);
    weights.resize(order);
    double sum = 0.0;
    for (int k = 0; k < order; ++k) {
        nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        weights[k] = sqrt_pi * v0 * v0;
        sum += weights[k];
    }
    if (std::abs(sum - sqrt_pi) > 1e-12) {
        throw std::runtime_error("gauss_hermite: weights do not sum to sqrt(pi)");
    }
}

namespace {

Vec terminal_point(const QuadratureSpec& spec, double g1, double g2) {
    Vec x(2);
    x(0) = spec.x0(0) *
           std::exp((spec.b1 - 0.5 * spec.sigma1 * spec.sigma1) * spec.T +
                    spec.sigma1 * g1);
    x(1) = spec.x0(1) *
           std::exp((spec.b2 - 0.5 * spec.sigma2 * spec.sigma2) * spec.T +
                    spec.sigma2 * g2);
    return x;
}

void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
    if (order < 2) throw std::invalid_argument("gauss_legendre: order must be >= 2");
    Mat J = Mat::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double off = k / std::sqrt(4.0 * k * k - 1.0);
        J(k - 1, k) = off;
        J(k, k - 1) = off;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    nodes.resize(order);
    weights.resize(order);
    for (int k = 0; k < order; ++k) {
        nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        weights[k] = 2.0 * v0 * v0;
    }
}

struct AxisRule {
    std::vector<double> u;      // standardized normal abscissae
    std::vector<double> log_w;  // log of (Gauss weight * normal density)
};

// Composite Gauss-Legendre rule on [-L, L] in the standardized normal
// variable. The terminal is evaluated at x0 exp(drift + st u), so any
// oscillation of xi in x speeds up exponentially in u; panel widths shrink
// with the local period pi / (st x(u)) to keep it resolved.
AxisRule graded_axis_rule(double sigma, double b, double T, double x0, int pts,
                          double pts_per_period, double L, double w_max,
                          const std::vector<double>& x_kinks) {
    std::vector<double> gl_s, gl_w;
    gauss_legendre(pts, gl_s, gl_w);
    const double st = sigma * std::sqrt(T);
    const double drift = (b - 0.5 * sigma * sigma) * T;
    const double half_log_2pi = 0.5 * std::log(2.0 * M_PI);

    // Kink positions mapped into the normal variable; panels end there.
    std::vector<double> breaks;
    for (double xk : x_kinks) {
        if (xk <= 0.0) continue;
        const double uk = (std::log(xk / x0) - drift) / st;
        if (uk > -L && uk < L) breaks.push_back(uk);
    }
    std::sort(breaks.begin(), breaks.end());

    AxisRule rule;
    double u = -L;
    while (u < L) {
        const double far = std::max(std::abs(u), std::abs(std::min(u + w_max, L)));
        const double x_edge = x0 * std::exp(drift + st * far);
        const double period = M_PI / (st * x_edge);
        const double width = std::min(w_max, (pts / pts_per_period) * period);
        double hi = std::min(u + width, L);
        for (double uk : breaks) {
            if (uk > u + 1e-12 && uk < hi - 1e-12) {
                hi = uk;
                break;
            }
        }
        const double mid = 0.5 * (u + hi);
        const double half = 0.5 * (hi - u);
        for (int k = 0; k < pts; ++k) {
            const double uk = mid + half * gl_s[k];
            rule.u.push_back(uk);
            rule.log_w.push_back(std::log(half * gl_w[k]) - 0.5 * uk * uk -
                                 half_log_2pi);
        }
        u = hi;
    }
    return rule;
}

// log E[exp(a xi(X_T))], aggregated in shifted log-space so large a never
// overflows. level doubles the panel resolution for the internal check.
double log_expectation(const QuadratureSpec& spec, int level) {
    const double q = 24.0 * level;
    const double w_max = 0.1 / level;
    const double L = 7.0;
    const AxisRule a1 = graded_axis_rule(spec.sigma1, spec.b1, spec.T, spec.x0(0),
                                         spec.order, q, L, w_max, spec.kinks1);
    const AxisRule a2 = graded_axis_rule(spec.sigma2, spec.b2, spec.T, spec.x0(1),
                                         spec.order, q, L, w_max, spec.kinks2);
    const double sqrt_T = std::sqrt(spec.T);
    const double rho_c = std::sqrt(1.0 - spec.rho * spec.rho);

    // Per-row log-sum-exp, combined in row order so the result is
    // independent of the worker count.
    const long rows = static_cast<long>(a1.u.size());
    const long cols = static_cast<long>(a2.u.size());
    std::vector<double> row_peak(rows);
    std::vector<double> row_acc(rows);
    auto run_row = [&](long i) {
        const double g1 = sqrt_T * a1.u[i];
        double peak = -std::numeric_limits<double>::infinity();
        std::vector<double> t_vals(cols);
        for (long j = 0; j < cols; ++j) {
            const double g2 = sqrt_T * (spec.rho * a1.u[i] + rho_c * a2.u[j]);
            const double xi = spec.terminal.xi(terminal_point(spec, g1, g2));
            t_vals[j] = a1.log_w[i] + a2.log_w[j] + spec.a * xi;
            peak = std::max(peak, t_vals[j]);
        }
        double acc = 0.0;
        for (double t : t_vals) acc += std::exp(t - peak);
        row_peak[i] = peak;
        row_acc[i] = acc;
    };

    int workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, 16);
    if (workers == 1 || rows * cols < (1L << 20)) {
        for (long i = 0; i < rows; ++i) run_row(i);
    } else {
        std::vector<std::thread> pool;
        const long span = (rows + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const long lo = w * span;
            const long hi = std::min(rows, lo + span);
            if (lo >= hi) break;
            pool.emplace_back([lo, hi, &run_row] {
                for (long i = lo; i < hi; ++i) run_row(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    double peak = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < rows; ++i) peak = std::max(peak, row_peak[i]);
    double acc = 0.0;
    for (long i = 0; i < rows; ++i) acc += std::exp(row_peak[i] - peak) * row_acc[i];
    return peak + std::log(acc);
}

}  // namespace

OracleValue qg_closed_form(const QuadratureSpec& spec) {
    if (spec.order < 2) throw std::invalid_argument("qg_closed_form: order must be >= 2");
    if (spec.a == 0.0) throw std::invalid_argument("qg_closed_form: a must be nonzero");
    if (spec.x0.size() != 2) throw std::invalid_argument("qg_closed_form: x0 must be 2-d");
    const double coarse = log_expectation(spec, 1) / spec.a;
    const double fine = log_expectation(spec, 2) / spec.a;
    const double gap = std::abs(fine - coarse);
    if (gap > 1e-8 * std::max(1e-30, std::abs(fine))) {
        throw QuadratureNotConverged("qg_closed_form: resolution-doubling check failed",
                                     coarse, fine);
    }
    return {fine, gap};
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct ChunkMoments {
    double peak = -std::numeric_limits<double>::infinity();
    double s1 = 0.0;  // sum exp(t - peak)
    double s2 = 0.0;  // sum exp(2 (t - peak))
    long count = 0;
};

}  // namespace

McEstimate mc_check(const QuadratureSpec& spec, long paths, std::uint64_t seed,
                    int threads) {
    if (paths < 10000) throw std::invalid_argument("mc_check: need at least 1e4 paths");
    if (spec.x0.size() != 2) throw std::invalid_argument("mc_check: x0 must be 2-d");

    const long chunk_size = 1L << 16;
    const long chunks = (paths + chunk_size - 1) / chunk_size;
    std::vector<ChunkMoments> moments(chunks);
    const double sqrt_T = std::sqrt(spec.T);
    const double rho_c = std::sqrt(1.0 - spec.rho * spec.rho);

    auto run_chunk = [&](long c) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x517cc1b727220a95ULL * (c + 1))));
        std::normal_distribution<double> normal(0.0, 1.0);
        ChunkMoments m;
        m.count = std::min(chunk_size, paths - c * chunk_size);
        std::vector<double> t_vals(m.count);
        for (long p = 0; p < m.count; ++p) {
            const double u = normal(rng);
            const double v = normal(rng);
            const double g1 = sqrt_T * u;
            const double g2 = sqrt_T * (spec.rho * u + rho_c * v);
            const double t = spec.a * spec.terminal.xi(terminal_point(spec, g1, g2));
            t_vals[p] = t;
            m.peak = std::max(m.peak, t);
        }
        for (double t : t_vals) {
            const double e = std::exp(t - m.peak);
            m.s1 += e;
            m.s2 += e * e;
        }
        moments[c] = m;
    };

    int workers = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, 32);
    if (workers == 1) {
        for (long c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        const long span = (chunks + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const long lo = w * span;
            const long hi = std::min(chunks, lo + span);
            if (lo >= hi) break;
            pool.emplace_back([lo, hi, &run_chunk] {
                for (long c = lo; c < hi; ++c) run_chunk(c);
            });
        }
        for (auto& t : pool) t.join();
    }

    // Deterministic combine in chunk order.
    double peak = -std::numeric_limits<double>::infinity();
    for (const ChunkMoments& m : moments) peak = std::max(peak, m.peak);
    double s1 = 0.0, s2 = 0.0;
    for (const ChunkMoments& m : moments) {
        const double scale = std::exp(m.peak - peak);
        s1 += scale * m.s1;
        s2 += scale * scale * m.s2;
    }

    const double np = static_cast<double>(paths);
    const double mean = s1 / np;
    const double var = std::max(0.0, s2 / np - mean * mean) * np / std::max(1.0, np - 1.0);

    McEstimate out;
    out.paths = paths;
    out.value = (peak + std::log(mean)) / spec.a;
    out.std_error = std::sqrt(var / np) / (mean * std::abs(spec.a));
    return out;
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void check_bs_args(double x0, double strike, double sigma, double T) {
    if (x0 <= 0.0 || strike <= 0.0 || sigma <= 0.0 || T <= 0.0) {
        throw std::invalid_argument("black_scholes: x0, strike, sigma, T must be positive");
    }
}

}  // namespace

double black_scholes_call(double x0, double strike, double sigma, double rate,
                          double T) {
    check_bs_args(x0, strike, sigma, T);
    const double vol = sigma * std::sqrt(T);
    const double d1 = (std::log(x0 / strike) + (rate + 0.5 * sigma * sigma) * T) / vol;
    const double d2 = d1 - vol;
    return x0 * normal_cdf(d1) - strike * std::exp(-rate * T) * normal_cdf(d2);
}

double black_scholes_put(double x0, double strike, double sigma, double rate,
                         double T) {
    check_bs_args(x0, strike, sigma, T);
    const double vol = sigma * std::sqrt(T);
    const double d1 = (std::log(x0 / strike) + (rate + 0.5 * sigma * sigma) * T) / vol;
    const double d2 = d1 - vol;
    return strike * std::exp(-rate * T) * normal_cdf(-d2) - x0 * normal_cdf(-d1);
}

ReferenceValue reference_value(const std::string& case_id) {
    if (case_id == "call_spread_gobet") {
        return {2.96, 0.01, "regression Monte Carlo comparison value"};
    }
    if (case_id == "extreme_R301_n181") {
        return {6.43, 0.05, "R = 3.01 call spread at n = 181"};
    }
    if (case_id == "extreme_R301_limit") {
        return {6.38, 0.05, "R = 3.01 call spread, fine-partition limit"};
    }
    throw std::invalid_argument("reference_value: unknown case id '" + case_id + "'");
}

}  // namespace qgbsde
