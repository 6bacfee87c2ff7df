#include "qgbsde/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace qgbsde {

void SolverConfig::validate() const {
    if (n < 1) throw std::invalid_argument("SolverConfig: n must be >= 1");
    if (T <= 0.0) throw std::invalid_argument("SolverConfig: T must be positive");
    if (zeta <= 0.0) throw std::invalid_argument("SolverConfig: zeta must be positive");
    if (nu <= 1.0 / 3.0 || nu > 1.0) {
        throw std::invalid_argument("SolverConfig: nu must lie in (1/3, 1]");
    }
    if (x0.size() == 0) throw std::invalid_argument("SolverConfig: x0 not set");
}

double SolveReport::max_derivative(int order) const {
    double m = 0.0;
    for (const StepStats& s : per_step) {
        switch (order) {
            case 0: m = std::max(m, s.max_u); break;
            case 1: m = std::max(m, s.max_du); break;
            case 2: m = std::max(m, s.max_d2u); break;
            case 3: m = std::max(m, s.max_d3u); break;
            default: throw std::invalid_argument("max_derivative: order in {0,..,3}");
        }
    }
    return m;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename Fn>
void parallel_for(long count, int threads, Fn&& body) {
    int workers = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, 32);
    if (workers == 1 || count < 256) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const long chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long lo = w * chunk;
        const long hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (long i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

double probe_vol_scale(const ForwardModel& model, const Vec& x0) {
    const Mat vol = model.sigma(0.0, x0);
    double m = 0.0;
    for (int j = 0; j < vol.rows(); ++j) m = std::max(m, vol.row(j).norm());
    return m;
}

}  // namespace

std::string SolveReport::to_json() const {
    std::ostringstream os;
    os << "{\n";
    os << "  \"y0\": " << fmt(y0) << ",\n";
    os << "  \"z0\": [";
    for (int j = 0; j < z0.size(); ++j) {
        if (j) os << ", ";
        os << fmt(z0(j));
    }
    os << "],\n";
    os << "  \"divergent\": " << (divergent ? "true" : "false") << ",\n";
    os << "  \"divergent_step\": " << divergent_step << ",\n";
    os << "  \"runtime_seconds\": " << fmt(runtime_seconds) << ",\n";
    os << "  \"config\": {"
       << "\"n\": " << config.n << ", \"T\": " << fmt(config.T)
       << ", \"zeta\": " << fmt(config.zeta) << ", \"nu\": " << fmt(config.nu)
       << ", \"delta_exp\": " << fmt(config.delta_exp)
       << ", \"C_M\": " << fmt(config.C_M) << ", \"lambda\": " << fmt(config.lambda)
       << ", \"cone\": " << (config.cone ? "true" : "false")
       << ", \"truncation_enabled\": " << (config.truncation.enabled ? "true" : "false")
       << ", \"truncation_alpha\": " << fmt(config.truncation.alpha)
       << ", \"truncation_c_N\": " << fmt(config.truncation.c_N)
       << ", \"x0\": [";
    for (int j = 0; j < config.x0.size(); ++j) {
        if (j) os << ", ";
        os << fmt(config.x0(j));
    }
    os << "]},\n";
    os << "  \"per_step\": [\n";
    for (size_t i = 0; i < per_step.size(); ++i) {
        const StepStats& s = per_step[i];
        os << "    {\"max_u\": " << fmt(s.max_u) << ", \"max_du\": " << fmt(s.max_du)
           << ", \"max_d2u\": " << fmt(s.max_d2u) << ", \"max_d3u\": " << fmt(s.max_d3u)
           << ", \"divergent_nodes\": " << s.divergent_nodes
           << ", \"out_of_box\": " << s.out_of_box << "}";
        if (i + 1 < per_step.size()) os << ",";
        os << "\n";
    }
    os << "  ]\n}";
    return os.str();
}

SweepResult backward_sweep(const ForwardModel& model, const Driver& driver,
                           const TerminalFunction& terminal, const SolverConfig& config) {
    config.validate();
    const auto wall_start = std::chrono::steady_clock::now();

    const Driver driver_eff = config.truncation.enabled
                                  ? truncate_driver(driver, config.truncation, config.n)
                                  : driver;

    const TimeGrid tg = build_time_grid(config.T, config.n);
    const double vol_scale =
        config.vol_scale > 0.0 ? config.vol_scale : probe_vol_scale(model, config.x0);
    std::vector<SpatialGrid> grids =
        build_grid_sequence(tg, config.x0, config.zeta, config.nu, config.delta_exp,
                            config.C_M, config.lambda, config.cone, vol_scale);
    if (config.drift_shift) {
        for (int i = 1; i <= tg.n; ++i) {
            grids[i].center = euler_flow(model, tg.nodes[i - 1], tg.nodes[i],
                                         grids[i - 1].center);
        }
    }

    SweepResult result;
    result.report.config = config;
    result.report.config.vol_scale = vol_scale;
    result.report.per_step.assign(config.n, StepStats{});
    result.report.z0 = RowVec::Zero(model.d);
    result.report.y0 = std::numeric_limits<double>::quiet_NaN();

    // Seed u^{n+1} = xi on B_{n+1}.
    auto u_next = std::make_shared<GridFunction>();
    u_next->grid = &grids[config.n];
    {
        const long count = grids[config.n].node_count();
        u_next->values.resize(count);
        const SpatialGrid& g = grids[config.n];
        parallel_for(count, config.threads, [&](long idx) {
            u_next->values[idx] = terminal.xi(g.coordinate(g.multi_index(idx)));
        });
        u_next->build_derivative_cache();
    }

    if (config.keep_grids) {
        result.retained = true;
        result.time_grid = tg;
        result.u_hat.assign(config.n + 1, nullptr);
        result.u_hat[config.n] = u_next;
        result.z_rows.assign(config.n, {});
        result.terminal = terminal.xi;
        result.sigma = model.sigma;
    }

    for (int i = config.n; i >= 1; --i) {
        const double t0 = tg.nodes[i - 1];
        const double t1 = tg.nodes[i];
        const SpatialGrid& grid_i = grids[i - 1];
        const long count = grid_i.node_count();
        StepStats& stats = result.report.per_step[i - 1];

        auto u_cur = std::make_shared<GridFunction>();
        u_cur->grid = &grids[i - 1];
        u_cur->values.resize(count);
        std::vector<unsigned char> oob(count, 0);
        std::vector<RowVec>* z_store = nullptr;
        if (config.keep_grids) {
            result.z_rows[i - 1].resize(count);
            z_store = &result.z_rows[i - 1];
        }

        parallel_for(count, config.threads, [&](long idx) {
            const std::vector<int> multi = grid_i.multi_index(idx);
            const Vec x = grid_i.coordinate(multi);
            const Vec chi = euler_flow(model, t0, t1, x);
            const TaylorEval te = taylor_eval(*u_next, chi, config.taylor_band);
            if (te.out_of_box) oob[idx] = 1;
            const StepValues sv = step_values(model, driver_eff, t0, t1, x, te.value,
                                              te.gradient, te.hessian);
            double y = sv.Y_hat;
            if (config.value_bound > 0.0) {
                // NaN passes through so divergence stays detectable.
                if (y > config.value_bound) y = config.value_bound;
                if (y < -config.value_bound) y = -config.value_bound;
            }
            u_cur->values[idx] = y;
            if (z_store) (*z_store)[idx] = sv.Z_hat;
        });

        for (long idx = 0; idx < count; ++idx) {
            stats.out_of_box += oob[idx];
            if (!std::isfinite(u_cur->values[idx])) ++stats.divergent_nodes;
        }
        if (stats.divergent_nodes > 0) {
            result.report.divergent = true;
            result.report.divergent_step = i;
            break;
        }

        u_cur->build_derivative_cache();

        const int d = grid_i.d;
        const bool third_ok = grid_i.nodes_per_axis() >= 4;
        // Ledger cone: boundary-closure noise lives in the outer band of the
        // lambda-cone and is damped to nothing before it can reach x0, so the
        // derivative maxima are recorded over the lambda_report cone only.
        const double report_hw = 3.0 * grid_i.delta +
                                 config.lambda_report * vol_scale * std::sqrt(t0);
        const int report_nodes = std::max(
            1, static_cast<int>(std::ceil(report_hw / grid_i.delta - 1e-12)));
        for (long idx = 0; idx < count; ++idx) {
            stats.max_u = std::max(stats.max_u, std::abs(u_cur->values[idx]));
            const std::vector<int> multi = grid_i.multi_index(idx);
            {
                int far = 0;
                for (int j = 0; j < d; ++j) far = std::max(far, std::abs(multi[j]));
                if (far > report_nodes) continue;
            }
            // Distance (in nodes) to the nearest face: the margin rings use
            // one-sided stencils whose closure error would dominate the ledger
            // without reflecting the interior solution, so the derivative
            // maxima are taken over the active cube only.
            int ring = grid_i.extent();
            for (int j = 0; j < d; ++j) {
                ring = std::min(ring, grid_i.extent() - std::abs(multi[j]));
            }
            if (ring < grid_i.margin_nodes) continue;
            Vec scale = Vec::Ones(d);
            if (config.exp_stats) {
                scale = (-grid_i.coordinate(multi)).array().exp().matrix();
            }
            double gnorm2 = 0.0;
            for (int j = 0; j < d; ++j) {
                const double gj = u_cur->grad[idx * d + j];
                gnorm2 += scale(j) * scale(j) * gj * gj;
                for (int k = 0; k < d; ++k) {
                    double h2 = u_cur->hess[idx * d * d + j * d + k];
                    // d^2/dx^2 = e^{-2v} (d^2/dv^2 - d/dv) on the diagonal
                    if (config.exp_stats && j == k) h2 -= gj;
                    stats.max_d2u = std::max(stats.max_d2u,
                                             std::abs(scale(j) * scale(k) * h2));
                }
            }
            stats.max_du = std::max(stats.max_du, std::sqrt(gnorm2));
            if (third_ok && ring > grid_i.margin_nodes) {
                for (int j = 0; j < d; ++j) {
                    double d3 = third_diff(*u_cur, multi, j);
                    if (config.exp_stats) {
                        const double gj = u_cur->grad[idx * d + j];
                        const double hjj = u_cur->hess[idx * d * d + j * d + j];
                        d3 = std::pow(scale(j), 3) * (d3 - 3.0 * hjj + 2.0 * gj);
                    }
                    stats.max_d3u = std::max(stats.max_d3u, std::abs(d3));
                }
            }
        }

        if (i == 1) {
            const std::vector<int> origin = grid_i.nearest_node(config.x0);
            result.report.y0 = u_cur->values[grid_i.flat_index(origin)];
            const Vec chi0 = euler_flow(model, t0, t1, config.x0);
            const TaylorEval te0 = taylor_eval(*u_next, chi0, config.taylor_band);
            const StepValues sv0 = step_values(model, driver_eff, t0, t1, config.x0,
                                               te0.value, te0.gradient, te0.hessian);
            result.report.z0 = sv0.Z_hat;
        }

        if (config.keep_grids) result.u_hat[i - 1] = u_cur;
        u_next = u_cur;
    }

    if (config.keep_grids) {
        result.grids = std::move(grids);
        // Rebind grid pointers to the retained storage.
        for (int i = 0; i <= config.n; ++i) {
            if (result.u_hat[i]) result.u_hat[i]->grid = &result.grids[i];
        }
    }

    result.report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
            .count();
    return result;
}

std::pair<double, RowVec> SweepResult::eval(double t, const Vec& x) const {
    if (!retained) {
        throw std::logic_error("SweepResult::eval requires keep_grids");
    }
    const int n = report.config.n;
    if (t < 0.0 || t > time_grid.T + 1e-12) {
        throw std::invalid_argument("SweepResult::eval: t outside [0, T]");
    }
    if (t >= time_grid.T - 1e-15) {
        return {terminal(x), RowVec::Zero(x.size())};
    }
    int i = 1;
    while (i < n && t >= time_grid.nodes[i]) ++i;
    const SpatialGrid& grid = grids[i - 1];
    const long idx = grid.flat_index(grid.nearest_node(x));
    return {u_hat[i - 1]->values[idx], z_rows[i - 1][idx]};
}

StabilityResult stability_check(const std::vector<SolveReport>& reports,
                                double slope_threshold) {
    if (reports.size() < 3) {
        throw std::invalid_argument("stability_check: need at least 3 reports");
    }
    for (size_t k = 1; k < reports.size(); ++k) {
        const SolverConfig& a = reports[k - 1].config;
        const SolverConfig& b = reports[k].config;
        if (b.n <= a.n) {
            throw std::invalid_argument("stability_check: reports must have increasing n");
        }
        const bool same = a.T == b.T && a.zeta == b.zeta && a.nu == b.nu &&
                          a.delta_exp == b.delta_exp && a.C_M == b.C_M &&
                          a.lambda == b.lambda && a.cone == b.cone &&
                          a.x0.size() == b.x0.size() &&
                          (a.x0.array() == b.x0.array()).all();
        if (!same) {
            throw std::invalid_argument("stability_check: mixed problem definitions");
        }
    }

    StabilityResult out;
    for (const SolveReport& r : reports) {
        if (r.divergent) {
            out.verdict = StabilityVerdict::UNSTABLE;
            out.offending_order = -1;
            out.offending_n = r.config.n;
            return out;
        }
    }

    for (int order = 0; order <= 3; ++order) {
        double peak = 0.0;
        for (const SolveReport& r : reports) peak = std::max(peak, r.max_derivative(order));
        if (peak < 1e-14) continue;  // identically flat ledger

        // Least-squares slope of log(max) against log(n).
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double m = static_cast<double>(reports.size());
        for (const SolveReport& r : reports) {
            const double lx = std::log10(static_cast<double>(r.config.n));
            const double ly = std::log10(std::max(r.max_derivative(order), 1e-14 * peak));
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        out.worst_slope = std::max(out.worst_slope, slope);
        if (slope > slope_threshold) {
            out.verdict = StabilityVerdict::UNSTABLE;
            out.offending_order = order;
            out.offending_n = reports.back().config.n;
            return out;
        }
    }
    return out;
}

}  // namespace qgbsde
