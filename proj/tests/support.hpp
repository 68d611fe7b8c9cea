#pragma once

#include <vector>

#include "oracles.hpp"
#include "qapool/pooling.hpp"
#include "qapool/scoring.hpp"

namespace support {

inline std::vector<qapool::RuleSpec> all_rules() {
  using qapool::RuleSpec;
  return {RuleSpec::quadratic(),    RuleSpec::logarithmic(),  RuleSpec::neg_log(),      RuleSpec::power(0.5),
          RuleSpec::power(-1.0),    RuleSpec::spherical(2.0), RuleSpec::spherical(3.0), RuleSpec::spherical(1.5),
          RuleSpec::tsallis(1.5),   RuleSpec::tsallis(2.0),   RuleSpec::tsallis(3.0),   RuleSpec::hs()};
}

inline std::vector<qapool::RuleSpec> convex_rules(std::size_t n) {
  std::vector<qapool::RuleSpec> out;
  for (const auto& r : all_rules()) {
    if (qapool::has_convex_exposure(r, n)) out.push_back(r);
  }
  return out;
}

inline double floor_for(const qapool::RuleSpec& rule) {
  return rule.domain_kind() == qapool::DomainKind::OpenSimplex ? 1e-3 : 0.0;
}

inline qapool::Forecast F(std::vector<double> p) { return qapool::Forecast(std::move(p)); }

inline std::vector<qapool::WeightedForecast> weighted(const std::vector<oracle::Vec>& ps, const oracle::Vec& w) {
  std::vector<qapool::WeightedForecast> out;
  for (std::size_t i = 0; i < ps.size(); ++i) out.push_back({qapool::Forecast(ps[i]), w[i]});
  return out;
}

inline oracle::Vec coords(const qapool::ExposureVector& g) { return oracle::Vec(g.coords().begin(), g.coords().end()); }

}  // namespace support
