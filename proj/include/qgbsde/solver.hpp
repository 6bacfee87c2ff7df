#pragma once

#include "qgbsde/expansion.hpp"
#include "qgbsde/grid.hpp"
#include "qgbsde/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace qgbsde {

struct SolverConfig {
    int n = 10;
    double T = 1.0;
    Vec x0;
    double zeta = 0.5;
    double nu = 0.5;           // spacing rule Delta = zeta * |pi|^nu
    double delta_exp = 0.5;    // cube scaling M = C_M * n^{delta_exp/2}
    double C_M = 40.0;
    double lambda = 5.0;       // diagnostic enlargement factor
    /// Cone factor for the derivative-ledger region. The grid is built with
    /// `lambda`, but the maxima are recorded over the smaller
    /// w0 + lambda_report * vol * sqrt(t) cone: the band between the two
    /// absorbs boundary-closure noise that never reaches the initial point.
    double lambda_report = 3.0;
    bool cone = true;
    double vol_scale = 0.0;    // 0 -> probed from sigma at (0, x0)
    TruncationRule truncation;
    int threads = 0;           // 0 -> hardware concurrency
    bool keep_grids = false;
    bool drift_shift = false;  // recenters each cube along the Euler flow
    double taylor_band = 2.0;
    /// When the grid variable is the log of the model's state, report the
    /// derivative maxima in the state frame (chain rule through exp), where
    /// boundedness is the meaningful diagnostic.
    bool exp_stats = false;
    /// A-priori sup-norm bound on the value function; node values are clamped
    /// to [-value_bound, value_bound] each step, which keeps the quadratic
    /// z-feedback from amplifying grid-edge noise past the level the solution
    /// itself can attain. 0 disables the clamp (used when the terminal is
    /// unbounded).
    double value_bound = 0.0;

    void validate() const;
};

struct StepStats {
    double max_u = 0.0;
    double max_du = 0.0;
    double max_d2u = 0.0;
    double max_d3u = 0.0;
    long divergent_nodes = 0;
    long out_of_box = 0;
};

struct SolveReport {
    double y0 = 0.0;
    RowVec z0;
    std::vector<StepStats> per_step;  // entry i-1 describes the sweep step i
    bool divergent = false;
    int divergent_step = -1;
    double runtime_seconds = 0.0;
    SolverConfig config;

    double max_derivative(int order) const;  // order in {0,1,2,3}
    std::string to_json() const;
};

class SweepResult {
public:
    SolveReport report;

    /// Piecewise-constant lookup of (Y, Z) at (t, x); requires keep_grids.
    std::pair<double, RowVec> eval(double t, const Vec& x) const;

    // Retained state (populated only with keep_grids).
    TimeGrid time_grid;
    std::vector<SpatialGrid> grids;
    std::vector<std::shared_ptr<GridFunction>> u_hat;       // u_hat[i-1] = u^i
    std::vector<std::vector<RowVec>> z_rows;                // per step, per node
    std::function<double(const Vec&)> terminal;
    std::function<Mat(double, const Vec&)> sigma;
    bool retained = false;
};

/// The connecting backward sweep over the finite-difference grids.
SweepResult backward_sweep(const ForwardModel& model, const Driver& driver,
                           const TerminalFunction& terminal, const SolverConfig& config);

enum class StabilityVerdict { STABLE, UNSTABLE };

struct StabilityResult {
    StabilityVerdict verdict = StabilityVerdict::STABLE;
    int offending_order = -1;
    int offending_n = -1;
    double worst_slope = 0.0;
};

/// A posteriori check: for each derivative order the ledger maxima must stay
/// bounded across the reports (log-log slope vs n below the threshold) and no
/// report may carry a divergence flag.
StabilityResult stability_check(const std::vector<SolveReport>& reports,
                                double slope_threshold = 0.1);

}  // namespace qgbsde
