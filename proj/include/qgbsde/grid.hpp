#pragma once

#include "qgbsde/model.hpp"

#include <vector>

namespace qgbsde {

struct TimeGrid {
    double T = 1.0;
    int n = 1;
    std::vector<double> nodes;  // t_0 = 0 < ... < t_n = T

    double step(int i) const { return nodes[i] - nodes[i - 1]; }  // h_i, i in [1, n]
    double mesh() const;
};

TimeGrid build_time_grid(double T, int n);

/// Tensor grid cube: nodes at center + delta * k for integer multi-indices
/// k with |k_j| <= half_nodes + margin_nodes. The inner box (half_nodes) is
/// the active cube B_i; the margin belongs to the enlarged diagnostic cube
/// B_i' and only feeds the stability ledger and edge stencils.
struct SpatialGrid {
    int d = 1;
    double delta = 0.1;
    Vec center;
    int half_nodes = 1;
    int margin_nodes = 0;

    int extent() const { return half_nodes + margin_nodes; }
    int nodes_per_axis() const { return 2 * extent() + 1; }
    long node_count() const;
    double edge_length() const { return 2.0 * half_nodes * delta; }

    /// Linear index <-> multi-index (each component in [-extent, extent]).
    long flat_index(const std::vector<int>& multi) const;
    std::vector<int> multi_index(long flat) const;
    Vec coordinate(const std::vector<int>& multi) const;

    /// Componentwise rounding, ties toward the smaller index, clamped to
    /// the full (enlarged) box.
    std::vector<int> nearest_node(const Vec& y) const;

    bool contains(const std::vector<int>& multi) const;
};

/// Builds B_1, ..., B_{n+1} (grid index i lives at time t_{i-1}).
/// cone = false: all cubes share the maximal edge in [M/2, M] with
/// M = C_M * n^{delta_exp/2}. cone = true: the active half-width at time t
/// is min(M/2, w0 + lambda * vol_scale * sqrt(t)) rounded up to whole
/// spacings, which keeps the sequence nested.
std::vector<SpatialGrid> build_grid_sequence(const TimeGrid& tg, const Vec& x0,
                                             double zeta, double nu,
                                             double delta_exp, double C_M,
                                             double lambda, bool cone,
                                             double vol_scale);

struct GridFunction {
    const SpatialGrid* grid = nullptr;
    std::vector<double> values;

    // Per-node derivative caches, filled by build_derivative_cache.
    std::vector<double> grad;      // node-major, d entries per node
    std::vector<double> hess;      // node-major, d*d entries per node
    bool cache_ready = false;

    double value_at(long flat) const { return values[flat]; }
    void build_derivative_cache();
};

/// First difference along one axis: central in the interior, second-order
/// one-sided at the box edges.
double central_diff(const GridFunction& gf, const std::vector<int>& node, int axis);

/// Second difference: pure 3-point stencil (one-sided at edges), mixed via
/// the tensorized cross stencil; symmetric in (axis_j, axis_k).
double second_diff(const GridFunction& gf, const std::vector<int>& node,
                   int axis_j, int axis_k);

/// Pure third difference along one axis; diagnostic for the stability
/// ledger only.
double third_diff(const GridFunction& gf, const std::vector<int>& node, int axis);

struct TaylorEval {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
    bool out_of_box = false;
};

/// Second-order Taylor evaluation off-grid from the nearest node, using the
/// finite-difference derivative tables. Points beyond band_tolerance * delta
/// outside the hull are clamped and flagged.
TaylorEval taylor_eval(const GridFunction& gf, const Vec& y,
                       double band_tolerance = 2.0);

}  // namespace qgbsde
