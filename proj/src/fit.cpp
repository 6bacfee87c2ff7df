#include "qgbsde/fit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qgbsde {

double fit_rate(const std::vector<ConvergenceRow>& rows) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const ConvergenceRow& r : rows) {
        if (r.divergent()) continue;
        const double e = std::abs(r.rel_error);
        if (!(e > 0.0) || !std::isfinite(e)) continue;
        const double lx = std::log10(static_cast<double>(r.n));
        const double ly = std::log10(e);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 3) throw std::invalid_argument("fit_rate: need at least 3 usable rows");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

const char* kHeader = "n,y0,oracle,rel_error,runtime_s,max_u,max_du,max_d2u,max_d3u,flags";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string csv_string(const std::vector<ConvergenceRow>& rows) {
    std::ostringstream os;
    os << kHeader << "\n";
    for (const ConvergenceRow& r : rows) {
        os << r.n << ',' << fmt(r.y0) << ',' << fmt(r.oracle) << ','
           << fmt(r.rel_error) << ',' << fmt(r.runtime_s) << ',' << fmt(r.max_u)
           << ',' << fmt(r.max_du) << ',' << fmt(r.max_d2u) << ',' << fmt(r.max_d3u)
           << ',' << r.flags << "\n";
    }
    return os.str();
}

void emit_csv(const std::vector<ConvergenceRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
    if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "'");
    out << csv_string(rows);
    if (!out) throw std::runtime_error("emit_csv: write failed for '" + path + "'");
}

std::vector<ConvergenceRow> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw std::runtime_error("read_csv: bad header in '" + path + "'");
    }
    std::vector<ConvergenceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;  // trailer records
        std::istringstream ls(line);
        std::string field;
        ConvergenceRow r;
        auto next = [&]() -> std::string {
            if (!std::getline(ls, field, ',')) {
                throw std::runtime_error("read_csv: short row in '" + path + "'");
            }
            return field;
        };
        r.n = std::stoi(next());
        r.y0 = std::stod(next());
        r.oracle = std::stod(next());
        r.rel_error = std::stod(next());
        r.runtime_s = std::stod(next());
        r.max_u = std::stod(next());
        r.max_du = std::stod(next());
        r.max_d2u = std::stod(next());
        r.max_d3u = std::stod(next());
        std::getline(ls, r.flags, ',');
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace qgbsde
