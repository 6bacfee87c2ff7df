#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qgbsde/experiments.hpp"
#include "qgbsde/fit.hpp"
#include "qgbsde/oracle.hpp"
#include "qgbsde/solver.hpp"

namespace py = pybind11;
using namespace qgbsde;

namespace {

py::dict report_to_dict(const SolveReport& rep) {
    py::dict d;
    d["y0"] = rep.y0;
    std::vector<double> z0(rep.z0.data(), rep.z0.data() + rep.z0.size());
    d["z0"] = z0;
    d["divergent"] = rep.divergent;
    d["divergent_step"] = rep.divergent_step;
    d["runtime_seconds"] = rep.runtime_seconds;
    d["n"] = rep.config.n;
    d["max_u"] = rep.max_derivative(0);
    d["max_du"] = rep.max_derivative(1);
    d["max_d2u"] = rep.max_derivative(2);
    d["max_d3u"] = rep.max_derivative(3);
    return d;
}

py::dict row_to_dict(const ConvergenceRow& r) {
    py::dict d;
    d["n"] = r.n;
    d["y0"] = r.y0;
    d["oracle"] = r.oracle;
    d["rel_error"] = r.rel_error;
    d["runtime_s"] = r.runtime_s;
    d["max_u"] = r.max_u;
    d["max_du"] = r.max_du;
    d["max_d2u"] = r.max_d2u;
    d["max_d3u"] = r.max_d3u;
    d["flags"] = r.flags;
    return d;
}

}  // namespace

PYBIND11_MODULE(_qgbsde, m) {
    m.doc() = "Backward sweep of short-term expansions for quadratic-growth "
              "and Lipschitz BSDEs";

    m.def("case_ids", &case_ids, "Registered benchmark case identifiers.");

    m.def(
        "solve",
        [](const std::string& case_id, int n, int threads) {
            const ExperimentCase& c = find_case(case_id);
            const SweepResult res = solve_case(c, n > 0 ? n : c.solver.n, threads);
            return report_to_dict(res.report);
        },
        py::arg("case_id"), py::arg("n") = 0, py::arg("threads") = 0,
        "One backward sweep of a registered case; returns the run summary.");

    m.def(
        "converge",
        [](const std::string& case_id, int threads) {
            const CaseResult res = run_case(find_case(case_id), threads);
            py::dict out;
            py::list rows;
            for (const ConvergenceRow& r : res.rows) rows.append(row_to_dict(r));
            out["rows"] = rows;
            out["rate_slope"] = fit_rate(res.rows);
            if (res.stability_valid) {
                out["stability"] =
                    res.stability.verdict == StabilityVerdict::STABLE ? "STABLE"
                                                                      : "UNSTABLE";
                out["worst_slope"] = res.stability.worst_slope;
            }
            return out;
        },
        py::arg("case_id"), py::arg("threads") = 0,
        "Full n-list convergence study with the stability verdict.");

    m.def(
        "oracle",
        [](const std::string& case_id) { return oracle_value(find_case(case_id)); },
        py::arg("case_id"), "Reference value the case converges against.");

    m.def(
        "mc_check",
        [](const std::string& case_id, long paths, std::uint64_t seed, int threads) {
            const McEstimate e =
                mc_check(quadrature_spec(find_case(case_id)), paths, seed, threads);
            return py::make_tuple(e.value, e.std_error);
        },
        py::arg("case_id"), py::arg("paths") = 1000000, py::arg("seed") = 42,
        py::arg("threads") = 0,
        "Monte Carlo estimate (value, standard_error) for a quadratic case.");

    m.def("black_scholes_call", &black_scholes_call, py::arg("x0"), py::arg("strike"),
          py::arg("sigma"), py::arg("rate"), py::arg("T"));
    m.def("black_scholes_put", &black_scholes_put, py::arg("x0"), py::arg("strike"),
          py::arg("sigma"), py::arg("rate"), py::arg("T"));

    m.def(
        "universal_bound",
        [](double beta, double gamma, double l_bound, double xi_bound, double T) {
            const UniversalBound ub = universal_bound(beta, gamma, l_bound, xi_bound, T);
            return py::make_tuple(ub.y_bound, ub.z_bmo_bound);
        },
        py::arg("beta"), py::arg("gamma"), py::arg("l_bound"), py::arg("xi_bound"),
        py::arg("T"),
        "A-priori (sup-norm, BMO) bounds from the structure condition.");

    m.def(
        "fit_rate",
        [](const std::vector<int>& ns, const std::vector<double>& rel_errors) {
            if (ns.size() != rel_errors.size()) {
                throw std::invalid_argument("fit_rate: length mismatch");
            }
            std::vector<ConvergenceRow> rows(ns.size());
            for (size_t k = 0; k < ns.size(); ++k) {
                rows[k].n = ns[k];
                rows[k].rel_error = rel_errors[k];
            }
            return fit_rate(rows);
        },
        py::arg("n"), py::arg("rel_error"),
        "Least-squares slope of log10|error| against log10 n.");
}
