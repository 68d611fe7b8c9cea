#include "qapool/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qapool/errors.hpp"

namespace qapool::io {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool parse_real(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

Forecast forecast_from(const std::vector<double>& probs, const std::string& where) {
  try {
    return Forecast(probs);
  } catch (const DomainError& e) {
    throw InputError(where + ": " + e.what());
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

std::vector<double> real_array(const json& node, const std::string& where) {
  if (!node.is_array()) throw InputError(where + " must be an array of numbers");
  std::vector<double> values;
  for (const auto& v : node) {
    if (!v.is_number()) throw InputError(where + " must be an array of numbers");
    values.push_back(v.get<double>());
  }
  return values;
}

void check_outcome_count(ForecastFile& file) {
  if (file.experts.empty()) throw InputError("forecast file lists no experts");
  file.outcomes = file.experts.front().forecast.size();
  for (const auto& e : file.experts) {
    if (e.forecast.size() != file.outcomes) throw InputError("expert '" + e.id + "' has a different outcome count");
  }
  if (!file.labels.empty() && file.labels.size() != file.outcomes) {
    throw InputError("label count does not match the outcome count");
  }
}

}  // namespace

std::vector<WeightedForecast> ForecastFile::weighted() const {
  std::vector<WeightedForecast> out;
  out.reserve(experts.size());
  for (const auto& e : experts) out.push_back({e.forecast, e.weight.value_or(1.0)});
  return out;
}

ForecastFile parse_forecast_json(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object() || !doc.contains("experts")) throw InputError("forecast JSON needs an \"experts\" array");
  ForecastFile file;
  if (doc.contains("labels")) {
    for (const auto& label : doc.at("labels")) {
      if (!label.is_string()) throw InputError("labels must be strings");
      file.labels.push_back(label.get<std::string>());
    }
  }
  const json& experts = doc.at("experts");
  if (!experts.is_array()) throw InputError("\"experts\" must be an array");
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const json& e = experts[i];
    std::string id = "expert" + std::to_string(i + 1);
    if (e.contains("id")) {
      if (!e.at("id").is_string()) throw InputError("expert ids must be strings");
      id = e.at("id").get<std::string>();
    }
    if (!e.contains("forecast")) throw InputError("expert '" + id + "' has no forecast");
    ExpertEntry entry{id, forecast_from(real_array(e.at("forecast"), "forecast of " + id), "expert '" + id + "'"),
                      std::nullopt};
    if (e.contains("weight") && !e.at("weight").is_null()) {
      if (!e.at("weight").is_number()) throw InputError("weight of '" + id + "' must be a number");
      const double w = e.at("weight").get<double>();
      if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weight of '" + id + "' must be nonnegative");
      entry.weight = w;
    }
    file.experts.push_back(std::move(entry));
  }
  check_outcome_count(file);
  return file;
}

ForecastFile parse_forecast_csv(std::string_view text) {
  ForecastFile file;
  bool weight_column = false;
  bool first = true;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cells = split(line, ',');
    double probe = 0.0;
    if (first && !parse_real(cells.front(), probe)) {
      // Header row: outcome labels, optionally ending in "weight".
      for (const auto& c : cells) file.labels.emplace_back(c);
      if (!file.labels.empty() && file.labels.back() == "weight") {
        weight_column = true;
        file.labels.pop_back();
      }
      first = false;
      continue;
    }
    first = false;
    std::vector<double> values;
    for (const auto& c : cells) {
      double v = 0.0;
      if (!parse_real(c, v)) throw InputError("line " + std::to_string(line_no) + ": '" + std::string(c) + "' is not a number");
      values.push_back(v);
    }
    ExpertEntry entry{"expert" + std::to_string(file.experts.size() + 1), Forecast::uniform(2), std::nullopt};
    if (weight_column) {
      if (values.size() < 2) throw InputError("line " + std::to_string(line_no) + ": missing weight column");
      if (!(values.back() >= 0.0)) throw InputError("line " + std::to_string(line_no) + ": negative weight");
      entry.weight = values.back();
      values.pop_back();
    }
    entry.forecast = forecast_from(values, "line " + std::to_string(line_no));
    file.experts.push_back(std::move(entry));
  }
  check_outcome_count(file);
  return file;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ForecastFile read_forecast_file(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  if (path.extension() == ".csv") return parse_forecast_csv(text);
  return parse_forecast_json(text);
}

std::vector<StreamStep> parse_stream_json(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object() || !doc.contains("steps") || !doc.at("steps").is_array()) {
    throw InputError("stream JSON needs a \"steps\" array");
  }
  std::vector<StreamStep> stream;
  const json& steps = doc.at("steps");
  stream.reserve(steps.size());
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const json& s = steps[t];
    const std::string where = "step " + std::to_string(t + 1);
    if (!s.contains("forecasts") || !s.at("forecasts").is_array()) throw InputError(where + " has no forecasts");
    if (!s.contains("outcome") || !s.at("outcome").is_number_integer()) {
      throw InputError(where + " needs an integer outcome");
    }
    StreamStep step;
    for (const auto& f : s.at("forecasts")) step.forecasts.push_back(forecast_from(real_array(f, where), where));
    const auto outcome = s.at("outcome").get<long long>();
    if (step.forecasts.empty()) throw InputError(where + " has no forecasts");
    if (outcome < 1 || static_cast<std::size_t>(outcome) > step.forecasts.front().size()) {
      throw InputError(where + ": outcome must lie in [1, n]");
    }
    step.outcome = static_cast<std::size_t>(outcome - 1);
    stream.push_back(std::move(step));
  }
  try {
    validate_stream(stream, 0);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  return stream;
}

std::vector<StreamStep> read_stream_file(const std::filesystem::path& path) {
  return parse_stream_json(read_text(path));
}

std::string stream_to_json(const std::vector<StreamStep>& stream) {
  json steps = json::array();
  for (const auto& step : stream) {
    json forecasts = json::array();
    for (const auto& f : step.forecasts) forecasts.push_back(std::vector<double>(f.probs().begin(), f.probs().end()));
    steps.push_back({{"forecasts", std::move(forecasts)}, {"outcome", step.outcome + 1}});
  }
  return json{{"steps", std::move(steps)}}.dump() + "\n";
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) {
    double v = 0.0;
    if (!parse_real(part, v)) throw InputError("'" + std::string(part) + "' is not a number");
    values.push_back(v);
  }
  return values;
}

}  // namespace qapool::io
