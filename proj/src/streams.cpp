#include "qapool/streams.hpp"

#include <algorithm>

#include "qapool/analysis.hpp"
#include "qapool/errors.hpp"

namespace qapool {

std::string to_string(StreamKind kind) {
  switch (kind) {
    case StreamKind::Iid: return "iid";
    case StreamKind::Alternating: return "alternating";
    case StreamKind::Adaptive: return "adaptive";
  }
  return "iid";
}

StreamKind parse_stream_kind(const std::string& text) {
  if (text == "iid") return StreamKind::Iid;
  if (text == "alternating") return StreamKind::Alternating;
  if (text == "adaptive") return StreamKind::Adaptive;
  throw ConfigError("unknown stream kind '" + text + "' (expected iid, alternating or adaptive)");
}

namespace {

std::size_t draw_outcome(Rng& rng, const Forecast& theta) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < theta.size(); ++j) {
    acc += theta[j];
    if (u < acc) return j;
  }
  return theta.size() - 1;
}

Forecast leaning_forecast(std::size_t n, std::size_t favored, double mass) {
  std::vector<double> p(n, (1.0 - mass) / static_cast<double>(n - 1));
  p[favored] = mass;
  return Forecast(std::move(p));
}

}  // namespace

std::vector<StreamStep> synthetic_stream(const SyntheticStreamConfig& config) {
  const std::size_t m = config.experts;
  const std::size_t n = config.outcomes;
  if (m == 0) throw ConfigError("a stream needs at least one expert");
  if (n < 2) throw ConfigError("a stream needs at least two outcomes");
  if (config.steps == 0) throw ConfigError("a stream needs at least one step");

  const double floor = sampling_floor(config.rule);
  Rng rng = sample_rng(config.seed, 0);
  std::vector<StreamStep> stream;
  stream.reserve(config.steps);

  switch (config.kind) {
    case StreamKind::Iid:
      for (std::size_t t = 0; t < config.steps; ++t) {
        StreamStep step;
        const Forecast theta = sample_forecast(rng, n, floor);
        step.forecasts.push_back(theta);
        for (std::size_t i = 1; i < m; ++i) step.forecasts.push_back(sample_forecast(rng, n, floor));
        step.outcome = draw_outcome(rng, theta);
        stream.push_back(std::move(step));
      }
      break;
    case StreamKind::Alternating: {
      std::vector<Forecast> fixed;
      for (std::size_t i = 0; i < m; ++i) fixed.push_back(leaning_forecast(n, i % n, 0.8));
      for (std::size_t t = 0; t < config.steps; ++t) stream.push_back({fixed, t % n});
      break;
    }
    case StreamKind::Adaptive: {
      const double bound = config.gradient_bound ? *config.gradient_bound : default_gradient_bound(config.rule, n);
      OgdLearner learner(config.rule, m, bound);
      for (std::size_t t = 0; t < config.steps; ++t) {
        StreamStep step;
        for (std::size_t i = 0; i < m; ++i) step.forecasts.push_back(sample_forecast(rng, n, floor));
        const Forecast pooled = learner.predict(step.forecasts);
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double s = score(config.rule, pooled, j);
          if (j == 0 || s < worst) {
            worst = s;
            step.outcome = j;
          }
        }
        learner.update(step.forecasts, step.outcome);
        stream.push_back(std::move(step));
      }
      break;
    }
  }
  return stream;
}

}  // namespace qapool
