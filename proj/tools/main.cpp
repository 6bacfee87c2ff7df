#include "qgbsde/experiments.hpp"
#include "qgbsde/toml_lite.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace qgbsde;

constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitOracleFailed = 4;

int resolve_threads(int flag_threads) {
    if (flag_threads > 0) return flag_threads;
    if (const char* env = std::getenv("QGC_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return v;
        } catch (...) {
            throw std::invalid_argument("QGC_THREADS is not a positive integer");
        }
    }
    return 0;
}

OracleBinding binding_from_string(const std::string& s) {
    if (s == "quadrature") return OracleBinding::quadrature;
    if (s == "black_scholes") return OracleBinding::black_scholes;
    if (s == "reference") return OracleBinding::reference;
    if (s == "refinement_proxy") return OracleBinding::refinement_proxy;
    throw std::invalid_argument("unknown oracle binding '" + s + "'");
}

/// Builds a case from a config document, starting from a registry entry when
/// [run] names one and applying section overrides on top.
ExperimentCase case_from_config(const toml::Document& doc) {
    ExperimentCase c;
    const toml::Table& run = doc.section("run");
    if (run.has("case")) {
        c = find_case(run.at("case").as_string());
    } else {
        c.id = "config";
    }

    const toml::Table& model = doc.section("model");
    if (model.has("preset")) c.model_preset = model.at("preset").as_string();
    c.b1 = model.get_number("b1", c.b1);
    c.b2 = model.get_number("b2", c.b2);
    c.sigma1 = model.get_number("sigma1", c.sigma1);
    c.sigma2 = model.get_number("sigma2", c.sigma2);
    c.rho = model.get_number("rho", c.rho);
    c.mu = model.get_number("mu", c.mu);
    c.sigma = model.get_number("sigma", c.sigma);
    c.r = model.get_number("r", c.r);
    c.R = model.get_number("R", c.R);
    c.log_coords = model.get_bool("log_coordinates", c.log_coords);
    if (model.has("x0")) {
        const std::vector<double> x0 = model.get_numbers("x0");
        c.x0 = Eigen::Map<const Vec>(x0.data(), static_cast<long>(x0.size()));
    }
    if (c.x0.size() == 0) {
        c.x0 = c.model_preset == "two_rate" ? Vec::Constant(1, 100.0)
                                            : Vec::Constant(2, 1.0);
    }

    const toml::Table& driver = doc.section("driver");
    c.a = driver.get_number("a", c.a);
    c.solver.truncation.enabled =
        driver.get_bool("truncation", c.solver.truncation.enabled);
    c.solver.truncation.alpha =
        driver.get_number("truncation_alpha", c.solver.truncation.alpha);
    c.solver.truncation.c_N = driver.get_number("truncation_c_N", c.solver.truncation.c_N);

    const toml::Table& terminal = doc.section("terminal");
    if (terminal.has("kind")) {
        c.terminal_kind = terminal_kind_from_string(terminal.at("kind").as_string());
    }
    c.terminal_params.strike = terminal.get_number("strike", c.terminal_params.strike);
    c.terminal_params.strike1 = terminal.get_number("strike1", c.terminal_params.strike1);
    c.terminal_params.strike2 = terminal.get_number("strike2", c.terminal_params.strike2);
    c.terminal_params.weight = terminal.get_number("weight", c.terminal_params.weight);

    const toml::Table& solver = doc.section("solver");
    c.solver.n = static_cast<int>(solver.get_integer("n", c.solver.n));
    c.solver.T = solver.get_number("T", c.solver.T);
    c.solver.zeta = solver.get_number("zeta", c.solver.zeta);
    c.solver.nu = solver.get_number("nu", c.solver.nu);
    c.solver.delta_exp = solver.get_number("delta_exp", c.solver.delta_exp);
    c.solver.C_M = solver.get_number("C_M", c.solver.C_M);
    c.solver.lambda = solver.get_number("lambda", c.solver.lambda);
    c.solver.cone = solver.get_bool("cone", c.solver.cone);
    c.solver.taylor_band = solver.get_number("taylor_band", c.solver.taylor_band);
    c.solver.drift_shift = solver.get_bool("drift_shift", c.solver.drift_shift);
    c.solver.exp_stats = solver.get_bool("exp_stats", c.log_coords);
    c.solver.value_bound = solver.get_number("value_bound", c.solver.value_bound);
    if (solver.has("n_list")) {
        c.n_list.clear();
        for (double v : solver.get_numbers("n_list")) {
            c.n_list.push_back(static_cast<int>(v));
        }
    }

    const toml::Table& oracle = doc.section("oracle");
    if (oracle.has("binding")) c.oracle = binding_from_string(oracle.at("binding").as_string());
    c.reference_id = oracle.get_string("reference_id", c.reference_id);

    return c;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + out_path + "'");
    out << text;
}

ExperimentCase load_case(const std::string& config_path, const std::string& case_id) {
    if (!config_path.empty()) {
        return case_from_config(toml::parse_file(config_path));
    }
    if (!case_id.empty()) return find_case(case_id);
    throw std::invalid_argument("either --config or --case is required");
}

int cmd_solve(const std::string& config_path, const std::string& case_id, int n_override,
              int threads, bool keep_grids, const std::string& out_path,
              const std::string& grid_dump) {
    const ExperimentCase c = load_case(config_path, case_id);
    const int n = n_override > 0 ? n_override : c.solver.n;
    const SweepResult result = solve_case(c, n, threads, keep_grids || !grid_dump.empty());
    write_output(result.report.to_json() + "\n", out_path);

    if (!grid_dump.empty()) {
        // Node dump of u^1: coordinates then value, one node per line.
        std::ostringstream os;
        const SpatialGrid& g = result.grids.front();
        for (int j = 0; j < g.d; ++j) os << "x" << j + 1 << ",";
        os << "u\n";
        char buf[64];
        for (long idx = 0; idx < g.node_count(); ++idx) {
            const Vec x = g.coordinate(g.multi_index(idx));
            for (int j = 0; j < g.d; ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", x(j));
                os << buf << ",";
            }
            std::snprintf(buf, sizeof(buf), "%.17g",
                          result.u_hat.front()->values[idx]);
            os << buf << "\n";
        }
        std::ofstream out(grid_dump, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open grid dump '" + grid_dump + "'");
        out << os.str();
    }
    return result.report.divergent ? kExitDivergence : 0;
}

int cmd_converge(const std::string& config_path, const std::string& case_id, int threads,
                 const std::string& out_path) {
    const ExperimentCase c = load_case(config_path, case_id);
    const CaseResult result = run_case(c, threads);

    std::string csv = csv_string(result.rows);
    std::ostringstream trailer;
    if (result.stability_valid) {
        trailer << "# stability="
                << (result.stability.verdict == StabilityVerdict::STABLE ? "STABLE"
                                                                         : "UNSTABLE")
                << " worst_slope=" << result.stability.worst_slope << "\n";
    }
    bool divergent = false;
    for (const ConvergenceRow& row : result.rows) divergent |= row.divergent();
    try {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.6g", fit_rate(result.rows));
        trailer << "# rate_slope=" << buf << "\n";
    } catch (const std::invalid_argument&) {
        // fewer than 3 usable rows; no slope trailer
    }
    write_output(csv + trailer.str(), out_path);
    return divergent ? kExitDivergence : 0;
}

int cmd_oracle(const std::string& case_id, const std::string& out_path) {
    std::ostringstream os;
    os << "case,value,method,check_discrepancy\n";
    char buf[64];
    for (const ExperimentCase& c : experiment_registry()) {
        if (!case_id.empty() && c.id != case_id) continue;
        if (c.oracle == OracleBinding::refinement_proxy) continue;
        double value = 0.0;
        double check = 0.0;
        const char* method = "";
        switch (c.oracle) {
            case OracleBinding::quadrature: {
                const OracleValue ov = qg_closed_form(quadrature_spec(c));
                value = ov.value;
                check = ov.check_discrepancy;
                method = "quadrature";
                break;
            }
            case OracleBinding::black_scholes:
                value = oracle_value(c);
                method = "black_scholes";
                break;
            case OracleBinding::reference: {
                const ReferenceValue rv = reference_value(c.reference_id);
                value = rv.value;
                check = rv.tolerance;
                method = "reference";
                break;
            }
            default:
                continue;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        os << c.id << "," << buf << "," << method << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", check);
        os << buf << "\n";
    }
    write_output(os.str(), out_path);
    return 0;
}

SolveReport report_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report '" + path + "'");
    nlohmann::json j;
    in >> j;
    SolveReport rep;
    rep.y0 = j.at("y0").get<double>();
    rep.divergent = j.at("divergent").get<bool>();
    rep.divergent_step = j.at("divergent_step").get<int>();
    rep.runtime_seconds = j.at("runtime_seconds").get<double>();
    const nlohmann::json& cfg = j.at("config");
    rep.config.n = cfg.at("n").get<int>();
    rep.config.T = cfg.at("T").get<double>();
    rep.config.zeta = cfg.at("zeta").get<double>();
    rep.config.nu = cfg.at("nu").get<double>();
    rep.config.delta_exp = cfg.at("delta_exp").get<double>();
    rep.config.C_M = cfg.at("C_M").get<double>();
    rep.config.lambda = cfg.at("lambda").get<double>();
    rep.config.cone = cfg.at("cone").get<bool>();
    const auto& x0 = cfg.at("x0");
    rep.config.x0.resize(static_cast<long>(x0.size()));
    for (size_t k = 0; k < x0.size(); ++k) rep.config.x0(static_cast<long>(k)) = x0[k];
    for (const nlohmann::json& s : j.at("per_step")) {
        StepStats st;
        st.max_u = s.at("max_u").get<double>();
        st.max_du = s.at("max_du").get<double>();
        st.max_d2u = s.at("max_d2u").get<double>();
        st.max_d3u = s.at("max_d3u").get<double>();
        st.divergent_nodes = s.at("divergent_nodes").get<long>();
        st.out_of_box = s.at("out_of_box").get<long>();
        rep.per_step.push_back(st);
    }
    return rep;
}

int cmd_stability(const std::vector<std::string>& report_paths,
                  const std::string& out_path) {
    std::vector<SolveReport> reports;
    for (const std::string& p : report_paths) reports.push_back(report_from_json(p));
    const StabilityResult res = stability_check(reports);
    std::ostringstream os;
    os << (res.verdict == StabilityVerdict::STABLE ? "STABLE" : "UNSTABLE")
       << " worst_slope=" << res.worst_slope;
    if (res.verdict == StabilityVerdict::UNSTABLE) {
        os << " offending_order=" << res.offending_order
           << " offending_n=" << res.offending_n;
    }
    os << "\n";
    write_output(os.str(), out_path);
    return res.verdict == StabilityVerdict::STABLE ? 0 : kExitDivergence;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BSDE solver: backward sweep of short-term expansions on "
                 "finite-difference grids"};
    app.require_subcommand(1);

    std::string config_path, case_id, out_path, grid_dump;
    int threads = 0;
    int n_override = 0;
    bool keep_grids = false;
    std::vector<std::string> report_paths;

    CLI::App* solve = app.add_subcommand("solve", "one sweep, report as JSON");
    solve->add_option("--config", config_path, "TOML config file");
    solve->add_option("--case", case_id, "registered case id");
    solve->add_option("--n", n_override, "partition size override");
    solve->add_option("--threads", threads, "worker threads");
    solve->add_option("--out", out_path, "output path (default stdout)");
    solve->add_flag("--keep-grids", keep_grids, "retain grid functions");
    solve->add_option("--dump-grid", grid_dump, "write the t=0 grid nodes as CSV");

    CLI::App* converge = app.add_subcommand("converge", "n-list study, CSV + slope");
    converge->add_option("--config", config_path, "TOML config file");
    converge->add_option("--case", case_id, "registered case id");
    converge->add_option("--threads", threads, "worker threads");
    converge->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* oracle = app.add_subcommand("oracle", "reference value table");
    oracle->add_option("--case", case_id, "restrict to one case id");
    oracle->add_option("--out", out_path, "output path (default stdout)");

    CLI::App* stability = app.add_subcommand("stability", "verdict from stored reports");
    stability->add_option("reports", report_paths, "solve report JSON files")->required();
    stability->add_option("--out", out_path, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        const int workers = resolve_threads(threads);
        if (solve->parsed()) {
            return cmd_solve(config_path, case_id, n_override, workers, keep_grids,
                             out_path, grid_dump);
        }
        if (converge->parsed()) {
            return cmd_converge(config_path, case_id, workers, out_path);
        }
        if (oracle->parsed()) return cmd_oracle(case_id, out_path);
        if (stability->parsed()) return cmd_stability(report_paths, out_path);
    } catch (const qgbsde::QuadratureNotConverged& e) {
        std::cerr << "oracle error: " << e.what() << " (coarse=" << e.coarse_value
                  << ", fine=" << e.fine_value << ")\n";
        return kExitOracleFailed;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return 0;
}
