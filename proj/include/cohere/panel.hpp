#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cohere {

/// Calendar month; panels are monthly and indexed by consecutive months.
struct Month {
    int year = 2000;
    int month = 1;  // 1..12

    /// Parses "YYYY-MM"; throws std::invalid_argument otherwise.
    static Month parse(const std::string& text);
    static Month from_ordinal(int ordinal);

    int ordinal() const { return year * 12 + (month - 1); }
    std::string str() const;
    Month operator+(int months) const { return from_ordinal(ordinal() + months); }
    Month operator-(int months) const { return from_ordinal(ordinal() - months); }
    int operator-(const Month& other) const { return ordinal() - other.ordinal(); }
    auto operator<=>(const Month&) const = default;
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Time-indexed real matrix: rows are periods, columns are series. Missing
/// cells hold NaN.
struct Panel {
    std::vector<Month> dates;
    std::vector<std::string> ids;
    Eigen::MatrixXd values;

    Eigen::Index periods() const { return values.rows(); }
    Eigen::Index series() const { return values.cols(); }
    bool missing(Eigen::Index t, Eigen::Index j) const { return is_missing(values(t, j)); }
    std::size_t missing_count() const;

    /// Rows [first, first + count).
    Panel slice(Eigen::Index first, Eigen::Index count) const;
    /// Index of a series id, or -1.
    Eigen::Index column(const std::string& id) const;

    bool operator==(const Panel& other) const;
};

/// Consecutive months starting at `start`.
std::vector<Month> month_range(Month start, Eigen::Index count);

}  // namespace cohere
