#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace homomdp {

/// One logged solver iteration.
struct RunRow {
    int iter = 0;
    double wall_clock_s = 0.0;
    double j_s = 0.0;
    double j_u = 0.0;
    double lower_bound = 0.0;
    double grad_norm_theta = 0.0;
    double grad_norm_omega = 0.0;
    double span_residual = 0.0;
};

/// Per-iteration solver trace. Rows must have strictly increasing `iter` and
/// non-decreasing `wall_clock_s`; `append` enforces both.
class RunRecord {
public:
    static constexpr std::string_view kCsvHeader =
        "iter,wall_clock_s,J_S,J_U,lower_bound,grad_norm_theta,grad_norm_omega,span_residual";

    void append(const RunRow& row);

    const std::vector<RunRow>& rows() const noexcept { return rows_; }
    bool empty() const noexcept { return rows_.empty(); }
    const RunRow& back() const { return rows_.back(); }
    std::size_t size() const noexcept { return rows_.size(); }

    void write_csv(std::ostream& out) const;
    std::string to_csv() const;
    static RunRecord read_csv(std::istream& in);

private:
    std::vector<RunRow> rows_;
};

}  // namespace homomdp
