#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cohere/evaluation.hpp"
#include "cohere/forecasts.hpp"
#include "cohere/gibbs.hpp"
#include "cohere/hierarchy.hpp"
#include "cohere/panel.hpp"
#include "cohere/simulate.hpp"

namespace cohere::io {

/// Raised for malformed input files; the message names the file and line.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// CSV with header "date,<ids...>", YYYY-MM dates and empty cells for missing values.
Panel read_panel(std::istream& in, const std::string& source = "panel");
Panel load_panel(const std::filesystem::path& path);
void write_panel(std::ostream& out, const Panel& panel);
void write_panel(const std::filesystem::path& path, const Panel& panel);

/// {"atomic": [...], "levels": [{"name": ..., "labels": {id: label} or [label per atomic]}],
///  "factor_levels": [...]}
Hierarchy parse_hierarchy(const std::string& json_text, const std::string& source = "hierarchy");
Hierarchy load_hierarchy(const std::filesystem::path& path);
std::string hierarchy_json(const Hierarchy& h);
void write_hierarchy(const std::filesystem::path& path, const Hierarchy& h);

/// CSV with columns origin,horizon,series_id,value.
ForecastStore read_base_forecasts(std::istream& in, const Hierarchy& h, const std::string& source = "forecasts");
ForecastStore load_base_forecasts(const std::filesystem::path& path, const Hierarchy& h);
void write_base_forecasts(const std::filesystem::path& path, const ForecastStore& store, const Hierarchy& h);

/// draw,horizon,series_id,value. Re-checks coherence of every draw under S.
void write_posterior_samples(const std::filesystem::path& path, const PosteriorSamples& ps, const Hierarchy& h);
void write_rho(const std::filesystem::path& path, const PosteriorSamples& ps);
void write_weights(const std::filesystem::path& path, const PosteriorSamples& ps);
void write_metrics(const std::filesystem::path& path, const MetricReport& report);
void write_origin_scores(const std::filesystem::path& path, const MetricReport& report);
void write_truth(const std::filesystem::path& path, const SimSpec& spec, const SimulatedData& data);

/// Write text to a file, throwing on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cohere::io
