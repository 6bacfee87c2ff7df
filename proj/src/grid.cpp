#include "qgbsde/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qgbsde {

double TimeGrid::mesh() const {
    double m = 0.0;
    for (int i = 1; i <= n; ++i) m = std::max(m, step(i));
    return m;
}

TimeGrid build_time_grid(double T, int n) {
    if (T <= 0.0) throw std::invalid_argument("build_time_grid: T must be positive");
    if (n < 1) throw std::invalid_argument("build_time_grid: n must be >= 1");
    TimeGrid tg;
    tg.T = T;
    tg.n = n;
    tg.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) tg.nodes[i] = T * static_cast<double>(i) / n;
    tg.nodes[n] = T;
    return tg;
}

long SpatialGrid::node_count() const {
    long count = 1;
    for (int j = 0; j < d; ++j) count *= nodes_per_axis();
    return count;
}

long SpatialGrid::flat_index(const std::vector<int>& multi) const {
    const int npa = nodes_per_axis();
    long flat = 0;
    for (int j = 0; j < d; ++j) {
        flat = flat * npa + (multi[j] + extent());
    }
    return flat;
}

std::vector<int> SpatialGrid::multi_index(long flat) const {
    const int npa = nodes_per_axis();
    std::vector<int> multi(d);
    for (int j = d - 1; j >= 0; --j) {
        multi[j] = static_cast<int>(flat % npa) - extent();
        flat /= npa;
    }
    return multi;
}

Vec SpatialGrid::coordinate(const std::vector<int>& multi) const {
    Vec x = center;
    for (int j = 0; j < d; ++j) x(j) += delta * multi[j];
    return x;
}

std::vector<int> SpatialGrid::nearest_node(const Vec& y) const {
    std::vector<int> multi(d);
    const int ext = extent();
    for (int j = 0; j < d; ++j) {
        const double v = (y(j) - center(j)) / delta;
        // ceil(v - 1/2) rounds halves toward the smaller index
        int idx = static_cast<int>(std::ceil(v - 0.5));
        multi[j] = std::clamp(idx, -ext, ext);
    }
    return multi;
}

bool SpatialGrid::contains(const std::vector<int>& multi) const {
    const int ext = extent();
    for (int j = 0; j < d; ++j) {
        if (multi[j] < -ext || multi[j] > ext) return false;
    }
    return true;
}

std::vector<SpatialGrid> build_grid_sequence(const TimeGrid& tg, const Vec& x0,
                                             double zeta, double nu,
                                             double delta_exp, double C_M,
                                             double lambda, bool cone,
                                             double vol_scale) {
    if (zeta <= 0.0) throw std::invalid_argument("build_grid_sequence: zeta must be positive");
    const double delta = zeta * std::pow(tg.mesh(), nu);
    const double M = C_M * std::pow(static_cast<double>(tg.n), delta_exp / 2.0);
    if (M < 2.0 * delta) {
        throw std::invalid_argument("build_grid_sequence: cube half-width below one spacing");
    }
    const int max_half = static_cast<int>(std::floor(M / (2.0 * delta)));

    std::vector<SpatialGrid> grids(tg.n + 1);
    for (int i = 1; i <= tg.n + 1; ++i) {
        SpatialGrid g;
        g.d = static_cast<int>(x0.size());
        g.delta = delta;
        g.center = x0;
        if (cone) {
            const double t = tg.nodes[i - 1];
            const double w0 = 3.0 * delta;
            const double hw = std::min(M / 2.0, w0 + lambda * vol_scale * std::sqrt(t));
            g.half_nodes = std::max(1, static_cast<int>(std::ceil(hw / delta - 1e-12)));
            g.half_nodes = std::min(g.half_nodes, max_half);
        } else {
            g.half_nodes = max_half;
        }
        const double h_i = tg.step(std::min(i, tg.n));
        // Two extra rings keep the one-sided boundary closure (and the value
        // bias it leaks into its stencil neighbourhood) away from the nodes
        // the diagnostics report on.
        g.margin_nodes = 2 + static_cast<int>(
            std::ceil(lambda * vol_scale * std::sqrt(h_i) / (2.0 * delta) - 1e-12));
        grids[i - 1] = g;
    }
    return grids;
}

namespace {

struct Stencil {
    int offsets[4];
    double weights[4];
    int size;
};

// First difference / delta (the 1/(2 delta) factor applied by caller).
Stencil first_stencil(int k, int ext) {
    if (k - 1 >= -ext && k + 1 <= ext) {
        return {{-1, 1, 0, 0}, {-0.5, 0.5, 0.0, 0.0}, 2};
    }
    if (k == -ext) {
        return {{0, 1, 2, 0}, {-1.5, 2.0, -0.5, 0.0}, 3};
    }
    return {{0, -1, -2, 0}, {1.5, -2.0, 0.5, 0.0}, 3};
}

// Pure second difference / delta^2.
Stencil second_stencil(int k, int ext) {
    if (k - 1 >= -ext && k + 1 <= ext) {
        return {{-1, 0, 1, 0}, {1.0, -2.0, 1.0, 0.0}, 3};
    }
    if (k == -ext) {
        return {{0, 1, 2, 0}, {1.0, -2.0, 1.0, 0.0}, 3};
    }
    return {{0, -1, -2, 0}, {1.0, -2.0, 1.0, 0.0}, 3};
}

// Pure third difference / delta^3.
Stencil third_stencil(int k, int ext) {
    if (k - 2 >= -ext && k + 2 <= ext) {
        return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}, 4};
    }
    if (k + 3 <= ext) {
        return {{0, 1, 2, 3}, {-1.0, 3.0, -3.0, 1.0}, 4};
    }
    return {{0, -1, -2, -3}, {1.0, -3.0, 3.0, -1.0}, 4};
}

double apply_axis_stencil(const GridFunction& gf, std::vector<int> node, int axis,
                          const Stencil& st) {
    const int base = node[axis];
    double acc = 0.0;
    for (int m = 0; m < st.size; ++m) {
        node[axis] = base + st.offsets[m];
        acc += st.weights[m] * gf.values[gf.grid->flat_index(node)];
    }
    return acc;
}

void check_axis(const GridFunction& gf, int axis, int min_nodes) {
    if (!gf.grid) throw std::invalid_argument("grid function not bound to a grid");
    if (axis < 0 || axis >= gf.grid->d) throw std::invalid_argument("axis out of range");
    if (gf.grid->nodes_per_axis() < min_nodes) {
        throw std::invalid_argument("grid too small along axis for this stencil");
    }
}

}  // namespace

double central_diff(const GridFunction& gf, const std::vector<int>& node, int axis) {
    check_axis(gf, axis, 3);
    const int ext = gf.grid->extent();
    const Stencil st = first_stencil(node[axis], ext);
    return apply_axis_stencil(gf, node, axis, st) / gf.grid->delta;
}

double second_diff(const GridFunction& gf, const std::vector<int>& node,
                   int axis_j, int axis_k) {
    check_axis(gf, axis_j, 3);
    check_axis(gf, axis_k, 3);
    const int ext = gf.grid->extent();
    const double d2 = gf.grid->delta * gf.grid->delta;
    if (axis_j == axis_k) {
        const Stencil st = second_stencil(node[axis_j], ext);
        return apply_axis_stencil(gf, node, axis_j, st) / d2;
    }
    // Tensorized first differences; commuting axes keep it symmetric.
    const Stencil sj = first_stencil(node[axis_j], ext);
    const Stencil sk = first_stencil(node[axis_k], ext);
    std::vector<int> probe = node;
    double acc = 0.0;
    for (int a = 0; a < sj.size; ++a) {
        for (int b = 0; b < sk.size; ++b) {
            probe[axis_j] = node[axis_j] + sj.offsets[a];
            probe[axis_k] = node[axis_k] + sk.offsets[b];
            acc += sj.weights[a] * sk.weights[b] * gf.values[gf.grid->flat_index(probe)];
        }
    }
    return acc / d2;
}

double third_diff(const GridFunction& gf, const std::vector<int>& node, int axis) {
    check_axis(gf, axis, 4);
    const int ext = gf.grid->extent();
    const Stencil st = third_stencil(node[axis], ext);
    const double d3 = std::pow(gf.grid->delta, 3);
    return apply_axis_stencil(gf, node, axis, st) / d3;
}

void GridFunction::build_derivative_cache() {
    const int d = grid->d;
    const long count = grid->node_count();
    grad.assign(count * d, 0.0);
    hess.assign(count * d * d, 0.0);
    for (long idx = 0; idx < count; ++idx) {
        const std::vector<int> multi = grid->multi_index(idx);
        for (int j = 0; j < d; ++j) {
            grad[idx * d + j] = central_diff(*this, multi, j);
            for (int k = j; k < d; ++k) {
                const double v = second_diff(*this, multi, j, k);
                hess[idx * d * d + j * d + k] = v;
                hess[idx * d * d + k * d + j] = v;
            }
        }
    }
    cache_ready = true;
}

TaylorEval taylor_eval(const GridFunction& gf, const Vec& y, double band_tolerance) {
    const SpatialGrid& grid = *gf.grid;
    const int d = grid.d;
    const int ext = grid.extent();
    const double hull = ext * grid.delta;
    const double band = hull + band_tolerance * grid.delta;

    TaylorEval out;
    Vec target = y;
    for (int j = 0; j < d; ++j) {
        const double rel = y(j) - grid.center(j);
        if (std::abs(rel) > band) {
            target(j) = grid.center(j) + std::copysign(band, rel);
            out.out_of_box = true;
        }
    }

    const std::vector<int> node = grid.nearest_node(target);
    const long idx = grid.flat_index(node);
    const Vec x = grid.coordinate(node);
    const Vec offset = target - x;

    Vec g(d);
    Mat H(d, d);
    if (gf.cache_ready) {
        for (int j = 0; j < d; ++j) {
            g(j) = gf.grad[idx * d + j];
            for (int k = 0; k < d; ++k) H(j, k) = gf.hess[idx * d * d + j * d + k];
        }
    } else {
        for (int j = 0; j < d; ++j) {
            g(j) = central_diff(gf, node, j);
            for (int k = j; k < d; ++k) {
                H(j, k) = second_diff(gf, node, j, k);
                H(k, j) = H(j, k);
            }
        }
    }

    out.value = gf.values[idx] + g.dot(offset) + 0.5 * offset.dot(H * offset);
    out.gradient = g + H * offset;
    out.hessian = H;
    return out;
}

}  // namespace qgbsde
