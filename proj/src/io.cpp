#include "cohere/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cohere::io {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw FormatError(source + ": line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line) {
    const std::string s = trim(cell);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(source, line, "not a number: '" + s + "'");
    if (!std::isfinite(v)) fail(source, line, "non-finite value");
    return v;
}

Month parse_month(const std::string& cell, const std::string& source, std::size_t line) {
    try {
        return Month::parse(trim(cell));
    } catch (const std::exception&) {
        fail(source, line, "unparseable date '" + cell + "' (expected YYYY-MM)");
    }
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

Panel read_panel(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) fail(source, lineno, "empty file");
    const auto header = split_csv(line);
    if (header.size() < 2 || trim(header[0]) != "date") fail(source, lineno, "header must be 'date,<series ids...>'");
    Panel p;
    std::set<std::string> seen;
    for (std::size_t j = 1; j < header.size(); ++j) {
        const std::string id = trim(header[j]);
        if (id.empty()) fail(source, lineno, "empty series id");
        if (!seen.insert(id).second) fail(source, lineno, "duplicate series id '" + id + "'");
        p.ids.push_back(id);
    }
    std::vector<std::vector<double>> rows;
    std::set<Month> dates;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            fail(source, lineno, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
        const Month d = parse_month(cells[0], source, lineno);
        if (!dates.insert(d).second) fail(source, lineno, "duplicate date " + d.str());
        p.dates.push_back(d);
        std::vector<double> row;
        for (std::size_t j = 1; j < cells.size(); ++j)
            row.push_back(trim(cells[j]).empty() ? kMissing : parse_number(cells[j], source, lineno));
        rows.push_back(std::move(row));
    }
    p.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p.ids.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < p.ids.size(); ++j) p.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    return p;
}

Panel load_panel(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_panel(in, path.string());
}

void write_panel(std::ostream& out, const Panel& panel) {
    out << "date";
    for (const auto& id : panel.ids) out << ',' << id;
    out << '\n';
    for (Eigen::Index t = 0; t < panel.periods(); ++t) {
        out << panel.dates[static_cast<std::size_t>(t)].str();
        for (Eigen::Index j = 0; j < panel.series(); ++j) out << ',' << format_double(panel.values(t, j));
        out << '\n';
    }
}

void write_panel(const std::filesystem::path& path, const Panel& panel) {
    auto out = open_out(path);
    write_panel(out, panel);
}

Hierarchy parse_hierarchy(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(source + ": invalid JSON: " + e.what());
    }
    try {
        HierarchySpec spec;
        spec.atomic = j.at("atomic").get<std::vector<std::string>>();
        for (const auto& lv : j.at("levels")) {
            HierarchySpec::Level level{lv.at("name").get<std::string>(), {}};
            const auto& labels = lv.at("labels");
            if (labels.is_array()) {
                if (labels.size() != spec.atomic.size())
                    throw FormatError(source + ": level '" + level.name + "' must give one label per atomic series");
                for (std::size_t i = 0; i < spec.atomic.size(); ++i) level.labels[spec.atomic[i]] = labels[i].get<std::string>();
            } else {
                level.labels = labels.get<std::map<std::string, std::string>>();
            }
            spec.levels.push_back(std::move(level));
        }
        if (j.contains("factor_levels")) spec.factor_levels = j.at("factor_levels").get<std::vector<std::string>>();
        return Hierarchy::build(spec);
    } catch (const json::exception& e) {
        throw FormatError(source + ": " + e.what());
    }
}

Hierarchy load_hierarchy(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_hierarchy(ss.str(), path.string());
}

std::string hierarchy_json(const Hierarchy& h) {
    const HierarchySpec& spec = h.spec();
    json j;
    j["atomic"] = spec.atomic;
    j["levels"] = json::array();
    for (const auto& lv : spec.levels) {
        std::vector<std::string> labels;
        for (const auto& id : spec.atomic) labels.push_back(lv.labels.at(id));
        j["levels"].push_back({{"name", lv.name}, {"labels", labels}});
    }
    j["factor_levels"] = spec.factor_levels;
    return j.dump(2) + "\n";
}

void write_hierarchy(const std::filesystem::path& path, const Hierarchy& h) { write_text(path, hierarchy_json(h)); }

ForecastStore read_base_forecasts(std::istream& in, const Hierarchy& h, const std::string& source) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) fail(source, lineno, "empty file");
    const auto header = split_csv(line);
    if (header.size() != 4 || trim(header[0]) != "origin" || trim(header[1]) != "horizon" || trim(header[2]) != "series_id" ||
        trim(header[3]) != "value")
        fail(source, lineno, "header must be 'origin,horizon,series_id,value'");
    ForecastStore store(h.node_count());
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 4) fail(source, lineno, "expected 4 fields, found " + std::to_string(cells.size()));
        const Month origin = parse_month(cells[0], source, lineno);
        int horizon = 0;
        const std::string hs = trim(cells[1]);
        const auto [ptr, ec] = std::from_chars(hs.data(), hs.data() + hs.size(), horizon);
        if (ec != std::errc() || ptr != hs.data() + hs.size() || horizon < 1) fail(source, lineno, "bad horizon '" + hs + "'");
        const std::string id = trim(cells[2]);
        const auto node = h.node_index(id);
        if (!node) fail(source, lineno, "unknown series id '" + id + "'");
        const double v = parse_number(cells[3], source, lineno);
        try {
            store.insert(origin, horizon, *node, v);
        } catch (const std::invalid_argument& e) {
            fail(source, lineno, e.what());
        }
    }
    return store;
}

ForecastStore load_base_forecasts(const std::filesystem::path& path, const Hierarchy& h) {
    auto in = open_in(path);
    return read_base_forecasts(in, h, path.string());
}

void write_base_forecasts(const std::filesystem::path& path, const ForecastStore& store, const Hierarchy& h) {
    auto out = open_out(path);
    out << "origin,horizon,series_id,value\n";
    for (const auto& [key, v] : store.entries())
        out << Month::from_ordinal(std::get<0>(key)).str() << ',' << std::get<1>(key) << ',' << h.nodes()[std::get<2>(key)].id
            << ',' << format_double(v) << '\n';
}

void write_posterior_samples(const std::filesystem::path& path, const PosteriorSamples& ps, const Hierarchy& h) {
    const Eigen::MatrixXd& S = h.summing_matrix();
    const auto n = static_cast<Eigen::Index>(h.atomic_count());
    auto out = open_out(path);
    out << "draw,horizon,series_id,value\n";
    for (std::size_t d = 0; d < ps.paths.size(); ++d) {
        const Eigen::MatrixXd& p = ps.paths[d];
        const double err = (p - p.rightCols(n) * S.transpose()).cwiseAbs().maxCoeff();
        if (err > 1e-10 * std::max(1.0, p.cwiseAbs().maxCoeff()))
            throw std::logic_error("posterior draw " + std::to_string(d) + " is not coherent");
        for (Eigen::Index hz = 0; hz < p.rows(); ++hz)
            for (Eigen::Index i = 0; i < p.cols(); ++i)
                out << d << ',' << hz + 1 << ',' << ps.node_ids[static_cast<std::size_t>(i)] << ',' << format_double(p(hz, i)) << '\n';
    }
}

void write_rho(const std::filesystem::path& path, const PosteriorSamples& ps) {
    auto out = open_out(path);
    out << "draw,rho0";
    for (std::size_t node : ps.calibrated_nodes) out << ',' << ps.node_ids[node];
    out << '\n';
    for (Eigen::Index d = 0; d < ps.rho0.size(); ++d) {
        out << d << ',' << format_double(ps.rho0(d));
        for (std::size_t node : ps.calibrated_nodes) out << ',' << format_double(ps.rho(d, static_cast<Eigen::Index>(node)));
        out << '\n';
    }
}

void write_weights(const std::filesystem::path& path, const PosteriorSamples& ps) {
    auto out = open_out(path);
    out << "draw";
    for (const auto& name : ps.weight_levels) out << ',' << name;
    out << '\n';
    for (Eigen::Index d = 0; d < ps.weights.rows(); ++d) {
        out << d;
        for (Eigen::Index j = 0; j < ps.weights.cols(); ++j) out << ',' << format_double(ps.weights(d, j));
        out << '\n';
    }
}

void write_metrics(const std::filesystem::path& path, const MetricReport& report) {
    auto out = open_out(path);
    out << "method,level,purpose_split,horizon,metric,value\n";
    for (const auto& r : report.rows)
        out << r.method << ',' << r.level << ',' << r.purpose_split << ',' << r.horizon << ',' << r.metric << ','
            << format_double(r.value) << '\n';
}

void write_origin_scores(const std::filesystem::path& path, const MetricReport& report) {
    auto out = open_out(path);
    out << "method,origin,energy\n";
    for (const auto& s : report.origin_scores) out << s.method << ',' << s.origin.str() << ',' << format_double(s.energy) << '\n';
}

void write_truth(const std::filesystem::path& path, const SimSpec& spec, const SimulatedData& data) {
    auto matrix = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::vector<double> r(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
            rows.push_back(r);
        }
        return rows;
    };
    const Hierarchy& h = spec.hierarchy;
    json j;
    j["seed"] = spec.seed;
    j["periods"] = spec.periods;
    j["seasonal_period"] = spec.seasonal_period;
    j["start"] = spec.start.str();
    j["atomic"] = h.atomic_ids();
    std::vector<std::string> factor_ids;
    for (std::size_t node : h.factor_nodes()) factor_ids.push_back(h.nodes()[node].id);
    j["factor_nodes"] = factor_ids;
    j["loadings"] = matrix(spec.loadings);
    j["factor_cov"] = matrix(spec.factor_cov);
    j["idiosyncratic"] = std::vector<double>(spec.idiosyncratic.data(), spec.idiosyncratic.data() + spec.idiosyncratic.size());
    json rho = json::object(), sd = json::object();
    for (std::size_t i = 0; i < h.node_count(); ++i) {
        rho[h.nodes()[i].id] = spec.rho(static_cast<Eigen::Index>(i));
        sd[h.nodes()[i].id] = data.node_residual_sd(static_cast<Eigen::Index>(i));
    }
    j["rho"] = rho;
    j["node_residual_sd"] = sd;
    write_text(path, j.dump(2) + "\n");
}

}  // namespace cohere::io
