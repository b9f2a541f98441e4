#include "homomdp/run_record.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace homomdp {

void RunRecord::append(const RunRow& row) {
    if (!rows_.empty()) {
        if (row.iter <= rows_.back().iter)
            throw std::invalid_argument("RunRecord: iter must be strictly increasing");
        if (row.wall_clock_s < rows_.back().wall_clock_s)
            throw std::invalid_argument("RunRecord: wall_clock_s must be non-decreasing");
    }
    rows_.push_back(row);
}

namespace {

// %.17g round-trips doubles and is locale independent for the C locale.
void put(std::ostream& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
}

}  // namespace

void RunRecord::write_csv(std::ostream& out) const {
    out << kCsvHeader << '\n';
    for (const auto& r : rows_) {
        out << r.iter << ',';
        put(out, r.wall_clock_s);
        for (double x : {r.j_s, r.j_u, r.lower_bound, r.grad_norm_theta, r.grad_norm_omega,
                         r.span_residual}) {
            out << ',';
            put(out, x);
        }
        out << '\n';
    }
}

std::string RunRecord::to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
}

RunRecord RunRecord::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error("RunRecord: unexpected CSV header");
    RunRecord rec;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RunRow r;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != 8) throw std::runtime_error("RunRecord: expected 8 columns");
        r.iter = static_cast<int>(cells[0]);
        r.wall_clock_s = cells[1];
        r.j_s = cells[2];
        r.j_u = cells[3];
        r.lower_bound = cells[4];
        r.grad_norm_theta = cells[5];
        r.grad_norm_omega = cells[6];
        r.span_residual = cells[7];
        rec.append(r);
    }
    return rec;
}

}  // namespace homomdp
