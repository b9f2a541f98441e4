#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace homomdp {

/// Shapes of the inputs do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An input violates a model invariant (stochasticity, discount range, ...).
class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear solve or factorization failed or is too badly conditioned to trust.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double condition = 0.0)
        : std::runtime_error(what), condition_(condition) {}

    /// Condition estimate of the offending system, 0 when unknown.
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// The encoding matrix does not have full row rank.
class RankDeficient : public NumericError {
public:
    RankDeficient(const std::string& what, std::vector<int> rows, double condition)
        : NumericError(what, condition), rows_(std::move(rows)) {}

    /// Rows that fall outside the span of the remaining, independent rows.
    const std::vector<int>& offending_rows() const noexcept { return rows_; }

private:
    std::vector<int> rows_;
};

/// More abstract states were requested than independent transition rows exist.
class InfeasibleEncoding : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed experiment or environment configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace homomdp
