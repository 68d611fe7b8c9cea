#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qapool/learning.hpp"
#include "qapool/pooling.hpp"

namespace qapool::io {

struct ExpertEntry {
  std::string id;
  Forecast forecast;
  std::optional<double> weight;
};

/// Expert forecasts for one question.
///
/// JSON: {"labels": [...], "experts": [{"id": "a", "forecast": [..], "weight": 1}, ...]}
/// CSV:  one row per expert; optional header whose last column may be `weight`.
struct ForecastFile {
  std::vector<ExpertEntry> experts;
  std::vector<std::string> labels;
  std::size_t outcomes = 0;

  /// Missing weights count as 1, i.e. uniform after normalization.
  std::vector<WeightedForecast> weighted() const;
};

ForecastFile parse_forecast_json(std::string_view text);
ForecastFile parse_forecast_csv(std::string_view text);
/// Chooses CSV for a .csv extension and JSON otherwise.
ForecastFile read_forecast_file(const std::filesystem::path& path);

/// JSON: {"steps": [{"forecasts": [[..], ..], "outcome": 1}, ...]}; outcomes are 1-based on disk.
std::vector<StreamStep> parse_stream_json(std::string_view text);
std::vector<StreamStep> read_stream_file(const std::filesystem::path& path);
std::string stream_to_json(const std::vector<StreamStep>& stream);

/// Comma-separated list of reals, e.g. "0.7,0.3".
std::vector<double> parse_real_list(std::string_view text);

std::string read_text(const std::filesystem::path& path);

}  // namespace qapool::io
