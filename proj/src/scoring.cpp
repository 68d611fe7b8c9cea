#include "qapool/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "qapool/errors.hpp"

namespace qapool {

Forecast::Forecast(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw DomainError("a forecast needs at least two outcomes");
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      std::ostringstream msg;
      msg << "forecast entry " << p << " is not a nonnegative finite number";
      throw DomainError(msg.str());
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "forecast entries sum to " << total << ", not 1";
    throw DomainError(msg.str());
  }
  // Sums already equal to 1 up to summation rounding are left alone, so a
  // serialized forecast reads back bit for bit.
  const double rounding = static_cast<double>(probs_.size()) * std::numeric_limits<double>::epsilon();
  if (std::abs(total - 1.0) > rounding) {
    for (double& p : probs_) p /= total;
  }
}

Forecast Forecast::uniform(std::size_t n) {
  return Forecast(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Forecast Forecast::vertex(std::size_t n, std::size_t j) {
  if (j >= n) throw IndexError("vertex index out of range");
  std::vector<double> probs(n, 0.0);
  probs[j] = 1.0;
  return Forecast(std::move(probs));
}

double Forecast::min() const { return *std::min_element(probs_.begin(), probs_.end()); }

RuleSpec RuleSpec::quadratic() { return {RuleFamily::Quadratic, 0.0}; }
RuleSpec RuleSpec::logarithmic() { return {RuleFamily::Logarithmic, 0.0}; }
RuleSpec RuleSpec::neg_log() { return {RuleFamily::NegLog, 0.0}; }
RuleSpec RuleSpec::hs() { return {RuleFamily::Hs, 0.0}; }

RuleSpec RuleSpec::power(double gamma) {
  if (!std::isfinite(gamma) || gamma >= 1.0 || gamma == 0.0) {
    throw ConfigError("power rule needs gamma in (0,1) or gamma < 0");
  }
  return {RuleFamily::Power, gamma};
}

RuleSpec RuleSpec::spherical(double alpha) {
  if (!std::isfinite(alpha) || alpha <= 1.0) throw ConfigError("spherical rule needs alpha > 1");
  return {RuleFamily::Spherical, alpha};
}

RuleSpec RuleSpec::tsallis(double gamma) {
  if (!std::isfinite(gamma) || gamma <= 1.0) throw ConfigError("tsallis rule needs gamma > 1");
  return {RuleFamily::Tsallis, gamma};
}

namespace {

double parse_parameter(std::string_view text, std::string_view name) {
  std::string buf(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(buf, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != buf.size()) {
    throw ConfigError("bad parameter '" + buf + "' for rule " + std::string(name));
  }
  return value;
}

}  // namespace

RuleSpec RuleSpec::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const bool has_param = colon != std::string_view::npos;
  const auto param = [&] {
    if (!has_param) throw ConfigError("rule '" + std::string(name) + "' needs a parameter, e.g. " +
                                      std::string(name) + ":2");
    return parse_parameter(text.substr(colon + 1), name);
  };
  const auto plain = [&](RuleSpec rule) {
    if (has_param) throw ConfigError("rule '" + std::string(name) + "' takes no parameter");
    return rule;
  };

  if (name == "quadratic") return plain(quadratic());
  if (name == "log") return plain(logarithmic());
  if (name == "neglog") return plain(neg_log());
  if (name == "hs") return plain(hs());
  if (name == "power") return power(param());
  if (name == "spherical") return spherical(param());
  if (name == "tsallis") return tsallis(param());
  throw ConfigError("unknown scoring rule '" + std::string(text) + "'");
}

DomainKind RuleSpec::domain_kind() const {
  switch (family_) {
    case RuleFamily::Quadratic:
    case RuleFamily::Spherical:
    case RuleFamily::Tsallis:
      return DomainKind::ClosedSimplex;
    default:
      return DomainKind::OpenSimplex;
  }
}

bool RuleSpec::has_bounded_reward() const {
  if (family_ == RuleFamily::NegLog) return false;
  if (family_ == RuleFamily::Power && parameter_ < 0.0) return false;
  return true;
}

std::string RuleSpec::to_string() const {
  std::ostringstream out;
  switch (family_) {
    case RuleFamily::Quadratic: return "quadratic";
    case RuleFamily::Logarithmic: return "log";
    case RuleFamily::NegLog: return "neglog";
    case RuleFamily::Hs: return "hs";
    case RuleFamily::Power: out << "power:"; break;
    case RuleFamily::Spherical: out << "spherical:"; break;
    case RuleFamily::Tsallis: out << "tsallis:"; break;
  }
  out << parameter_;
  return out.str();
}

ExposureVector ExposureVector::canonicalize(std::vector<double> raw) {
  const double mean = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(raw.size());
  for (double& x : raw) x -= mean;
  return ExposureVector(std::move(raw));
}

double ExposureVector::norm() const {
  return std::sqrt(std::inner_product(coords_.begin(), coords_.end(), coords_.begin(), 0.0));
}

void check_domain(const RuleSpec& rule, const Forecast& p) {
  if (rule.domain_kind() == DomainKind::OpenSimplex && p.min() < kOpenSimplexFloor) {
    throw DomainError("rule " + rule.to_string() +
                      " is defined only on the open simplex; forecast has a zero coordinate");
  }
}

namespace detail {

double reward_at(const RuleSpec& rule, std::span<const double> p) {
  const double n = static_cast<double>(p.size());
  const double a = rule.parameter();
  double total = 0.0;
  switch (rule.family()) {
    case RuleFamily::Quadratic:
      for (double x : p) total += x * x;
      return total;
    case RuleFamily::Logarithmic:
      for (double x : p) total += x > 0.0 ? x * std::log(x) : 0.0;
      return total;
    case RuleFamily::NegLog:
      for (double x : p) total -= std::log(x);
      return total;
    case RuleFamily::Power:
      for (double x : p) total += std::pow(x, a);
      return a < 0.0 ? total : -total;
    case RuleFamily::Spherical:
      for (double x : p) total += std::pow(x, a);
      return std::pow(total, 1.0 / a);
    case RuleFamily::Tsallis:
      for (double x : p) total += std::pow(x, a);
      return total;
    case RuleFamily::Hs:
      for (double x : p) total += std::log(x);
      return -std::exp(total / n);
  }
  return 0.0;
}

void gradient_at(const RuleSpec& rule, std::span<const double> p, std::span<double> out) {
  const std::size_t n = p.size();
  const double a = rule.parameter();
  switch (rule.family()) {
    case RuleFamily::Quadratic:
      for (std::size_t j = 0; j < n; ++j) out[j] = 2.0 * p[j];
      return;
    case RuleFamily::Logarithmic:
      for (std::size_t j = 0; j < n; ++j) out[j] = std::log(p[j]) + 1.0;
      return;
    case RuleFamily::NegLog:
      for (std::size_t j = 0; j < n; ++j) out[j] = -1.0 / p[j];
      return;
    case RuleFamily::Power:
      for (std::size_t j = 0; j < n; ++j) out[j] = -std::abs(a) * std::pow(p[j], a - 1.0);
      return;
    case RuleFamily::Spherical: {
      double total = 0.0;
      for (double x : p) total += std::pow(x, a);
      const double scale = std::pow(total, 1.0 / a - 1.0);
      for (std::size_t j = 0; j < n; ++j) out[j] = scale * std::pow(p[j], a - 1.0);
      return;
    }
    case RuleFamily::Tsallis:
      for (std::size_t j = 0; j < n; ++j) out[j] = a * std::pow(p[j], a - 1.0);
      return;
    case RuleFamily::Hs: {
      const double reward = reward_at(rule, p);
      for (std::size_t j = 0; j < n; ++j) out[j] = reward / (static_cast<double>(n) * p[j]);
      return;
    }
  }
}

}  // namespace detail

double expected_reward(const RuleSpec& rule, const Forecast& p) {
  check_domain(rule, p);
  return detail::reward_at(rule, p.probs());
}

ExposureVector exposure(const RuleSpec& rule, const Forecast& p) {
  check_domain(rule, p);
  std::vector<double> raw(p.size());
  detail::gradient_at(rule, p.probs(), raw);
  return ExposureVector::canonicalize(std::move(raw));
}

double exposure_scalar(const RuleSpec& rule, const Forecast& p) {
  if (p.size() != 2) throw DomainError("scalar exposure is defined for two outcomes only");
  const ExposureVector g = exposure(rule, p);
  return g[0] - g[1];
}

double score(const RuleSpec& rule, const Forecast& p, std::size_t outcome) {
  if (outcome >= p.size()) throw IndexError("outcome index out of range");
  const ExposureVector g = exposure(rule, p);
  double tangent = g[outcome];
  for (std::size_t j = 0; j < p.size(); ++j) tangent -= g[j] * p[j];
  return detail::reward_at(rule, p.probs()) + tangent;
}

double bregman(const RuleSpec& rule, const Forecast& p, const Forecast& q) {
  if (p.size() != q.size()) throw DomainError("forecasts have different outcome counts");
  check_domain(rule, p);
  const ExposureVector gq = exposure(rule, q);
  double tangent = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) tangent += gq[j] * (p[j] - q[j]);
  const double d = detail::reward_at(rule, p.probs()) - detail::reward_at(rule, q.probs()) - tangent;
  // Rounding can leave -1e-17 where the divergence is exactly zero.
  return std::max(d, 0.0);
}

bool has_convex_exposure(const RuleSpec& rule, std::size_t n) {
  if (n <= 2) return true;
  if (rule.family() == RuleFamily::Tsallis) return rule.parameter() <= 2.0;
  return true;
}

}  // namespace qapool
