#include "qapool/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "qapool/analysis.hpp"
#include "qapool/errors.hpp"
#include "qapool/io.hpp"
#include "qapool/learning.hpp"
#include "qapool/pooling.hpp"
#include "qapool/streams.hpp"

namespace qapool {

namespace {

using Json = nlohmann::ordered_json;

Json to_json(const Forecast& p) { return std::vector<double>(p.probs().begin(), p.probs().end()); }
Json to_json(std::span<const double> v) { return std::vector<double>(v.begin(), v.end()); }

std::uint64_t default_seed() {
  const char* env = std::getenv("QAPOOL_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(env, &end, 10);
  if (end == nullptr || *end != '\0') throw InputError("QAPOOL_SEED must be a nonnegative integer");
  return value;
}

Forecast parse_forecast_arg(const std::string& text) {
  try {
    return Forecast(io::parse_real_list(text));
  } catch (const DomainError& e) {
    throw InputError(std::string("invalid forecast '") + text + "': " + e.what());
  }
}

std::size_t parse_outcome_arg(long long outcome, std::size_t n) {
  if (outcome < 1 || static_cast<std::size_t>(outcome) > n) throw InputError("outcome must lie in [1, n]");
  return static_cast<std::size_t>(outcome - 1);
}

void emit(std::ostream& out, const Json& doc) { out << doc.dump(2) << '\n'; }

struct PoolArgs {
  std::string rule;
  std::string input;
  bool generalized = false;
  std::string weights;
  double shell = 0.0;
};

int cmd_pool(const PoolArgs& args, std::ostream& out) {
  const RuleSpec rule = RuleSpec::parse(args.rule);
  const io::ForecastFile file = io::read_forecast_file(args.input);
  std::vector<WeightedForecast> inputs = file.weighted();
  if (!args.weights.empty()) {
    const std::vector<double> w = io::parse_real_list(args.weights);
    if (w.size() != inputs.size()) throw InputError("--weights needs one value per expert");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] >= 0.0)) throw InputError("weights must be nonnegative");
      inputs[i].weight = w[i];
    }
  }

  PoolResult result = [&] {
    if (args.generalized) {
      GeneralizedPoolOptions options;
      options.shell = args.shell;
      return generalized_pool(rule, inputs, options);
    }
    try {
      return qa_pool(rule, inputs);
    } catch (const ExposureRangeError& e) {
      throw ExposureRangeError(std::string(e.what()) + " via --generalized");
    }
  }();

  double total = 0.0;
  for (const auto& in : inputs) total += in.weight;
  std::vector<double> utility;
  double bregman_sum = 0.0;
  for (std::size_t j = 0; j < result.pooled.size(); ++j) {
    utility.push_back(aggregator_utility(rule, result.pooled, inputs, j));
  }
  for (const auto& in : inputs) bregman_sum += in.weight / total * bregman(rule, result.pooled, in.forecast);
  const auto [lo, hi] = std::minmax_element(utility.begin(), utility.end());

  Json doc;
  doc["rule"] = rule.to_string();
  doc["method"] = to_string(result.method);
  doc["pooled"] = to_json(result.pooled);
  doc["total_weight"] = result.total_weight;
  doc["residual"] = result.residual;
  doc["surplus"] = {{"per_outcome_utility", utility},
                    {"surplus", *lo},
                    {"equalization_gap", *hi - *lo},
                    {"bregman_sum", bregman_sum}};
  if (!file.labels.empty()) doc["labels"] = file.labels;
  doc["experts"] = Json::array({{{"id", "pool"}, {"forecast", to_json(result.pooled)}, {"weight", result.total_weight}}});
  emit(out, doc);
  return kExitOk;
}

struct ScoreArgs {
  std::string rule;
  std::string forecast;
  long long outcome = 0;
};

int cmd_score(const ScoreArgs& args, std::ostream& out) {
  const RuleSpec rule = RuleSpec::parse(args.rule);
  const Forecast p = parse_forecast_arg(args.forecast);
  const std::size_t j = parse_outcome_arg(args.outcome, p.size());
  Json doc;
  doc["rule"] = rule.to_string();
  doc["forecast"] = to_json(p);
  doc["outcome"] = args.outcome;
  doc["score"] = score(rule, p, j);
  doc["expected_reward"] = expected_reward(rule, p);
  doc["exposure"] = to_json(exposure(rule, p).coords());
  emit(out, doc);
  return kExitOk;
}

struct BregmanArgs {
  std::string rule;
  std::string p;
  std::string q;
};

int cmd_bregman(const BregmanArgs& args, std::ostream& out) {
  const RuleSpec rule = RuleSpec::parse(args.rule);
  const Forecast p = parse_forecast_arg(args.p);
  const Forecast q = parse_forecast_arg(args.q);
  if (p.size() != q.size()) throw InputError("both forecasts need the same outcome count");
  Json doc;
  doc["rule"] = rule.to_string();
  doc["p"] = to_json(p);
  doc["q"] = to_json(q);
  doc["divergence"] = bregman(rule, p, q);
  emit(out, doc);
  return kExitOk;
}

struct LearnArgs {
  std::string rule;
  std::string stream;
  std::optional<double> gradient_bound;
  std::uint64_t seed = 0;
  std::string curve;
  std::string synthetic;
  std::string save_stream;
  std::size_t experts = 5;
  std::size_t outcomes = 2;
  std::size_t horizon = 0;
};

int cmd_learn(const LearnArgs& args, std::ostream& out, std::ostream& err) {
  const RuleSpec rule = RuleSpec::parse(args.rule);
  if (args.stream.empty() == args.synthetic.empty()) {
    throw InputError("learn needs either a stream file or --synthetic <kind>");
  }
  if (!rule.has_bounded_reward() || rule.domain_kind() == DomainKind::OpenSimplex) {
    if (!args.gradient_bound) throw ConfigError("rule " + rule.to_string() + " needs an explicit --M");
  }

  std::vector<StreamStep> stream;
  if (!args.synthetic.empty()) {
    SyntheticStreamConfig sc;
    sc.kind = parse_stream_kind(args.synthetic);
    sc.rule = rule;
    sc.experts = args.experts;
    sc.outcomes = args.outcomes;
    sc.steps = args.horizon == 0 ? 1000 : args.horizon;
    sc.seed = args.seed;
    sc.gradient_bound = args.gradient_bound;
    stream = synthetic_stream(sc);
  } else {
    stream = io::read_stream_file(args.stream);
  }
  if (!args.save_stream.empty()) {
    std::ofstream file(args.save_stream, std::ios::binary);
    if (!file) throw InputError("cannot write " + args.save_stream);
    file << io::stream_to_json(stream);
  }

  LearningConfig config;
  config.rule = rule;
  config.gradient_bound = args.gradient_bound;
  config.seed = args.seed;
  config.horizon = args.synthetic.empty() ? args.horizon : 0;
  const RegretReport report = ogd_run(config, stream);
  if (report.gradient_bound_violated) {
    err << "warning: observed exposure norm " << report.max_exposure_norm << " exceeds M = " << report.gradient_bound
        << "; the bound may not hold\n";
  }

  const std::size_t horizon = report.per_step_loss.size();
  const std::size_t m = report.final_weights.size();
  if (!args.curve.empty()) {
    std::ofstream file(args.curve, std::ios::binary);
    if (!file) throw InputError("cannot write " + args.curve);
    file << "t,cumulative_regret,bound\n";
    double regret = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      regret += report.per_step_loss[t] - report.comparator_loss[t];
      file << t + 1 << ',' << Json(regret).dump() << ',' << Json(regret_bound(m, report.gradient_bound, t + 1)).dump()
           << '\n';
    }
  }

  Json doc;
  doc["rule"] = rule.to_string();
  doc["experts"] = m;
  doc["outcomes"] = stream.front().forecasts.front().size();
  doc["horizon"] = horizon;
  doc["seed"] = args.seed;
  doc["gradient_bound"] = report.gradient_bound;
  doc["bound"] = report.bound;
  doc["learner_loss"] = report.learner_loss;
  doc["best_fixed_loss"] = report.best_fixed_loss;
  doc["cumulative_regret"] = report.cumulative_regret;
  doc["within_bound"] = report.cumulative_regret <= report.bound;
  doc["final_weights"] = to_json(report.final_weights.weights());
  doc["best_weights"] = to_json(report.best_weights.weights());
  doc["max_exposure_norm"] = report.max_exposure_norm;
  doc["gradient_bound_violated"] = report.gradient_bound_violated;
  emit(out, doc);
  return kExitOk;
}

struct AuditArgs {
  std::string rule;
  std::size_t n = 3;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
};

Json probe_json(const ExposureProbeReport& probe) {
  return {{"samples", probe.samples},
          {"failures", probe.failures},
          {"failure_rate", probe.failure_rate()},
          {"worst_residual", probe.worst_residual},
          {"canonical_attempted", probe.canonical_attempted},
          {"canonical_failed", probe.canonical_failed}};
}

int cmd_audit(const AuditArgs& args, std::ostream& out) {
  const RuleSpec rule = RuleSpec::parse(args.rule);
  if (args.n < 2) throw InputError("--n must be at least 2");
  const bool convex = has_convex_exposure(rule, args.n);

  Json doc;
  doc["rule"] = rule.to_string();
  doc["n"] = args.n;
  doc["samples"] = args.samples;
  doc["seed"] = args.seed;
  doc["convex_exposure"] = convex;

  bool checks_ok = true;
  Json checks = Json::array();
  if (convex) {
    const AxiomReport axioms = axiom_suite(rule, args.n, args.samples, args.seed);
    for (const auto& c : axioms.checks) {
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"worst_gap", c.worst_gap},
                        {"tolerance", c.tolerance},
                        {"evidence_only", c.evidence_only}});
    }
    checks_ok = axioms.all_passed();

    const ConcavityProbeReport concavity = concavity_probe(rule, args.n, 3, args.samples, args.seed);
    const bool concave = concavity.worst_gap >= -1e-9;
    checks.push_back({{"name", "weight_score_concavity"},
                      {"passed", concave},
                      {"worst_gap", concavity.worst_gap},
                      {"tolerance", 1e-9},
                      {"evidence_only", true}});
    checks_ok = checks_ok && concave;
  } else {
    doc["skipped"] = "rule " + rule.to_string() + " lacks convex exposure at n = " + std::to_string(args.n) +
                     "; axiom and concavity checks do not apply";
  }
  doc["checks"] = checks;

  const ExposureProbeReport probe = exposure_probe(rule, args.n, args.samples, args.seed);
  doc["exposure_probe"] = probe_json(probe);
  const bool probe_ok = probe.failures == 0;
  doc["passed"] = checks_ok && probe_ok;
  emit(out, doc);
  if (!probe_ok) return kExitInfeasible;
  return checks_ok ? kExitOk : kExitSolver;
}

int cmd_probe(const AuditArgs& args, std::ostream& out) {
  const RuleSpec rule = RuleSpec::parse(args.rule);
  if (args.n < 2) throw InputError("--n must be at least 2");
  const ExposureProbeReport probe = exposure_probe(rule, args.n, args.samples, args.seed);
  Json doc;
  doc["rule"] = rule.to_string();
  doc["n"] = args.n;
  doc["seed"] = args.seed;
  doc["convex_exposure"] = has_convex_exposure(rule, args.n);
  doc["exposure_probe"] = probe_json(probe);
  emit(out, doc);
  return probe.failures == 0 ? kExitOk : kExitInfeasible;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasi-arithmetic forecast pooling under proper scoring rules", "qapool"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  PoolArgs pool;
  auto* pool_cmd = app.add_subcommand("pool", "Pool the expert forecasts in a JSON or CSV file");
  pool_cmd->add_option("rule", pool.rule, "Scoring rule, e.g. quadratic, log, spherical:2")->required();
  pool_cmd->add_option("input", pool.input, "Forecast file (.json or .csv)")->required();
  pool_cmd->add_flag("--generalized", pool.generalized, "Use the Bregman-minimizing pool");
  pool_cmd->add_option("--weights", pool.weights, "Comma-separated weights overriding the file");
  pool_cmd->add_option("--shell", pool.shell, "Boundary shell for the generalized pool on open domains");

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score a forecast on an outcome (1-based)");
  score_cmd->add_option("rule", sc.rule)->required();
  score_cmd->add_option("forecast", sc.forecast, "Comma-separated probabilities")->required();
  score_cmd->add_option("outcome", sc.outcome)->required();

  BregmanArgs br;
  auto* bregman_cmd = app.add_subcommand("bregman", "Bregman divergence D(p || q)");
  bregman_cmd->add_option("rule", br.rule)->required();
  bregman_cmd->add_option("p", br.p)->required();
  bregman_cmd->add_option("q", br.q)->required();

  LearnArgs learn;
  learn.seed = seed;
  auto* learn_cmd = app.add_subcommand("learn", "Online gradient descent over expert weights");
  learn_cmd->add_option("rule", learn.rule)->required();
  learn_cmd->add_option("stream", learn.stream, "Stream file (JSON)");
  learn_cmd->add_option("--M", learn.gradient_bound, "Bound on the exposure norm");
  learn_cmd->add_option("--seed", learn.seed);
  learn_cmd->add_option("--emit-curve", learn.curve, "Write t,cumulative_regret,bound as CSV");
  learn_cmd->add_option("--synthetic", learn.synthetic, "Generate a stream: iid, alternating or adaptive");
  learn_cmd->add_option("--save-stream", learn.save_stream, "Write the stream that was learned on");
  learn_cmd->add_option("--experts", learn.experts, "Experts in a synthetic stream")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--outcomes", learn.outcomes, "Outcomes in a synthetic stream")->check(CLI::Range(2, 1000));
  learn_cmd->add_option("--horizon", learn.horizon, "Steps to learn on (synthetic default 1000)");

  AuditArgs audit;
  audit.seed = seed;
  auto* audit_cmd = app.add_subcommand("audit", "Run the pooling property suite for a rule");
  audit_cmd->add_option("rule", audit.rule)->required();
  audit_cmd->add_option("--n", audit.n);
  audit_cmd->add_option("--samples", audit.samples);
  audit_cmd->add_option("--seed", audit.seed);

  AuditArgs probe;
  probe.seed = seed;
  auto* probe_cmd = app.add_subcommand("probe-exposure", "Check that averaged exposures stay invertible");
  probe_cmd->add_option("rule", probe.rule)->required();
  probe_cmd->add_option("--n", probe.n);
  probe_cmd->add_option("--samples", probe.samples);
  probe_cmd->add_option("--seed", probe.seed);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (pool_cmd->parsed()) return cmd_pool(pool, out);
    if (score_cmd->parsed()) return cmd_score(sc, out);
    if (bregman_cmd->parsed()) return cmd_bregman(br, out);
    if (learn_cmd->parsed()) return cmd_learn(learn, out, err);
    if (audit_cmd->parsed()) return cmd_audit(audit, out);
    if (probe_cmd->parsed()) return cmd_probe(probe, out);
  } catch (const ExposureRangeError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace qapool
