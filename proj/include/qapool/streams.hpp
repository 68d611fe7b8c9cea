#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qapool/learning.hpp"

namespace qapool {

enum class StreamKind {
  // Each step draws a true distribution; expert 1 reports it, the rest report noise.
  Iid,
  // Expert i leans on outcome i mod n; outcomes cycle through 1..n.
  Alternating,
  // Random expert forecasts; the outcome minimizes the score of a simulated OGD learner.
  Adaptive,
};

std::string to_string(StreamKind kind);
StreamKind parse_stream_kind(const std::string& text);

struct SyntheticStreamConfig {
  StreamKind kind = StreamKind::Iid;
  RuleSpec rule = RuleSpec::quadratic();
  std::size_t experts = 2;
  std::size_t outcomes = 2;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  // Only used by Adaptive; defaults to the rule's derived bound.
  std::optional<double> gradient_bound;
};

std::vector<StreamStep> synthetic_stream(const SyntheticStreamConfig& config);

}  // namespace qapool
