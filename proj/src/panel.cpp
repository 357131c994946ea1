#include "cohere/panel.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace cohere {

Month Month::parse(const std::string& text) {
    auto fail = [&] { return std::invalid_argument("unparseable date '" + text + "' (expected YYYY-MM)"); };
    if (text.size() != 7 || text[4] != '-') throw fail();
    int y = 0, m = 0;
    auto r1 = std::from_chars(text.data(), text.data() + 4, y);
    auto r2 = std::from_chars(text.data() + 5, text.data() + 7, m);
    if (r1.ec != std::errc{} || r1.ptr != text.data() + 4 || r2.ec != std::errc{} || r2.ptr != text.data() + 7)
        throw fail();
    if (m < 1 || m > 12) throw fail();
    return Month{y, m};
}

Month Month::from_ordinal(int ordinal) {
    int y = ordinal / 12;
    int m = ordinal % 12;
    if (m < 0) {
        m += 12;
        --y;
    }
    return Month{y, m + 1};
}

std::string Month::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
}

std::size_t Panel::missing_count() const {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        for (Eigen::Index t = 0; t < values.rows(); ++t)
            if (is_missing(values(t, j))) ++c;
    return c;
}

Panel Panel::slice(Eigen::Index first, Eigen::Index count) const {
    if (first < 0 || count < 0 || first + count > periods()) throw std::out_of_range("panel slice out of range");
    Panel out;
    out.ids = ids;
    out.values = values.middleRows(first, count);
    if (!dates.empty()) out.dates.assign(dates.begin() + first, dates.begin() + first + count);
    return out;
}

Eigen::Index Panel::column(const std::string& id) const {
    for (std::size_t j = 0; j < ids.size(); ++j)
        if (ids[j] == id) return static_cast<Eigen::Index>(j);
    return -1;
}

bool Panel::operator==(const Panel& other) const {
    if (dates != other.dates || ids != other.ids) return false;
    if (values.rows() != other.values.rows() || values.cols() != other.values.cols()) return false;
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        for (Eigen::Index t = 0; t < values.rows(); ++t) {
            const double a = values(t, j), b = other.values(t, j);
            if (is_missing(a) != is_missing(b)) return false;
            if (!is_missing(a) && a != b) return false;
        }
    return true;
}

std::vector<Month> month_range(Month start, Eigen::Index count) {
    std::vector<Month> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 0; i < count; ++i) out.push_back(start + static_cast<int>(i));
    return out;
}

}  // namespace cohere
