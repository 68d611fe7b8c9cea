#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qapool/cli.hpp"
#include "qapool/errors.hpp"
#include "qapool/io.hpp"
#include "qapool/streams.hpp"

using namespace qapool;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qapool_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  return lines;
}

}  // namespace

TEST_CASE("forecast files parse from JSON and CSV") {
  const auto file = io::parse_forecast_json(
      R"({"labels":["rain","dry"],"experts":[{"id":"a","forecast":[0.1,0.9],"weight":2},{"forecast":[0.5,0.5]}]})");
  REQUIRE(file.experts.size() == 2);
  CHECK(file.outcomes == 2);
  CHECK(file.labels[1] == "dry");
  CHECK(file.experts[1].id == "expert2");
  CHECK(file.weighted()[0].weight == 2.0);
  CHECK(file.weighted()[1].weight == 1.0);

  const auto csv = io::parse_forecast_csv("rain,dry,weight\n0.1,0.9,2\n0.5,0.5,1\n");
  REQUIRE(csv.experts.size() == 2);
  CHECK(csv.experts[0].weight == 2.0);
  CHECK(csv.labels.size() == 2);
  const auto bare = io::parse_forecast_csv("0.2,0.3,0.5\n0.1,0.1,0.8\n");
  CHECK(bare.outcomes == 3);
  CHECK_FALSE(bare.experts[0].weight.has_value());

  CHECK_THROWS_AS(io::parse_forecast_json("{"), InputError);
  CHECK_THROWS_AS(io::parse_forecast_json(R"({"experts":[]})"), InputError);
  CHECK_THROWS_AS(io::parse_forecast_json(R"({"experts":[{"forecast":[0.5,0.6]}]})"), InputError);
  CHECK_THROWS_AS(io::parse_forecast_json(R"({"experts":[{"forecast":[0.5,0.5]},{"forecast":[1,0,0]}]})"), InputError);
  CHECK_THROWS_AS(io::parse_forecast_json(R"({"experts":[{"forecast":[0.5,0.5],"weight":-1}]})"), InputError);
  CHECK_THROWS_AS(io::parse_forecast_csv("0.5,abc\n"), InputError);
  CHECK_THROWS_AS(io::parse_real_list("0.5,,0.5"), InputError);
}

TEST_CASE("streams round-trip through JSON with 1-based outcomes") {
  SyntheticStreamConfig sc;
  sc.experts = 3;
  sc.outcomes = 4;
  sc.steps = 25;
  sc.seed = 3;
  const auto stream = synthetic_stream(sc);
  const std::string text = io::stream_to_json(stream);
  const auto back = io::parse_stream_json(text);
  REQUIRE(back.size() == stream.size());
  for (std::size_t t = 0; t < back.size(); ++t) {
    CHECK(back[t].outcome == stream[t].outcome);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back[t].forecasts[i] == stream[t].forecasts[i]);
  }
  CHECK(json::parse(text)["steps"][0]["outcome"].get<int>() == static_cast<int>(stream[0].outcome) + 1);
  CHECK_THROWS_AS(io::parse_stream_json(R"({"steps":[{"forecasts":[[0.5,0.5]],"outcome":0}]})"), InputError);
  CHECK_THROWS_AS(io::parse_stream_json(R"({"steps":[{"forecasts":[[0.5,0.5]],"outcome":3}]})"), InputError);
  CHECK_THROWS_AS(
      io::parse_stream_json(R"({"steps":[{"forecasts":[[0.5,0.5]],"outcome":1},{"forecasts":[[0.5,0.5],[1,0]],"outcome":1}]})"),
      InputError);
}

TEST_CASE("pool command") {
  const auto path = write("two.json", R"({"experts":[{"id":"a","forecast":[0.1,0.9]},{"id":"b","forecast":[0.5,0.5]}]})");
  const Run r = run({"pool", "quadratic", path.string()});
  REQUIRE(r.code == 0);
  const json doc = json::parse(r.out);
  CHECK(doc["pooled"][0].get<double>() == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(doc["pooled"][1].get<double>() == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(doc["method"] == "ClosedForm");
  CHECK(doc["total_weight"].get<double>() == 2.0);
  CHECK(doc["surplus"]["surplus"].get<double>() == doctest::Approx(0.08).epsilon(1e-12));

  // The output re-validates as a forecast file.
  const auto again = io::parse_forecast_json(r.out);
  CHECK(again.experts.size() == 1);
  CHECK(again.experts[0].forecast[0] == doc["pooled"][0].get<double>());

  const Run weighted = run({"pool", "quadratic", path.string(), "--weights", "3,1"});
  REQUIRE(weighted.code == 0);
  CHECK(json::parse(weighted.out)["pooled"][0].get<double>() == doctest::Approx(0.2).epsilon(1e-14));

  const auto csv = write("two.csv", "0.1,0.9\n0.5,0.5\n");
  const Run from_csv = run({"pool", "log", csv.string()});
  REQUIRE(from_csv.code == 0);
  CHECK(json::parse(from_csv.out)["pooled"][0].get<double>() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("pool command maps infeasibility to exit code 2") {
  const auto path = write("vertices.json", R"({"experts":[{"forecast":[1,0,0]},{"forecast":[0,1,0]}]})");
  const Run fail = run({"pool", "tsallis:3", path.string()});
  CHECK(fail.code == 2);
  CHECK(fail.err.find("tsallis:3") != std::string::npos);
  CHECK(fail.err.find("--generalized") != std::string::npos);

  const Run ok = run({"pool", "tsallis:3", "--generalized", path.string()});
  REQUIRE(ok.code == 0);
  const json doc = json::parse(ok.out);
  CHECK(doc["method"] == "BregmanMin");
  CHECK(doc["pooled"][0].get<double>() == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("input errors exit with code 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"pool", "quadratic", scratch("missing.json").string()}).code == 1);
  CHECK(run({"pool", "brier", write("ok.json", R"({"experts":[{"forecast":[0.5,0.5]}]})").string()}).code == 1);
  CHECK(run({"score", "quadratic", "0.7,0.3", "3"}).code == 1);
  CHECK(run({"score", "log", "1,0", "1"}).code == 1);
  CHECK(run({"learn", "log", "--synthetic", "iid"}).code == 1);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("score and bregman commands") {
  const Run s = run({"score", "quadratic", "0.7,0.3", "1"});
  REQUIRE(s.code == 0);
  CHECK(json::parse(s.out)["score"].get<double>() == doctest::Approx(0.82).epsilon(1e-14));
  const Run b = run({"bregman", "quadratic", "0.7,0.3", "0.4,0.6"});
  REQUIRE(b.code == 0);
  CHECK(json::parse(b.out)["divergence"].get<double>() == doctest::Approx(0.18).epsilon(1e-13));
}

TEST_CASE("learn command writes a curve with one row per step") {
  const auto curve = scratch("curve.csv");
  const Run r = run({"learn", "quadratic", "--synthetic", "adaptive", "--experts", "3", "--outcomes", "3", "--horizon",
                     "400", "--seed", "7", "--emit-curve", curve.string()});
  REQUIRE(r.code == 0);
  CHECK(count_lines(curve) == 401);
  std::ifstream in(curve);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,cumulative_regret,bound");
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string t, regret, bound;
    std::getline(ss, t, ',');
    std::getline(ss, regret, ',');
    std::getline(ss, bound, ',');
    CHECK(std::stod(regret) <= std::stod(bound));
  }
  const json doc = json::parse(r.out);
  CHECK(doc["horizon"] == 400);
  CHECK(doc["within_bound"] == true);
}

TEST_CASE("learn command reads stream files") {
  const auto single = write("single.json", R"({"steps":[{"forecasts":[[0.2,0.8]],"outcome":1},{"forecasts":[[0.6,0.4]],"outcome":2}]})");
  const Run r = run({"learn", "quadratic", single.string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["cumulative_regret"].get<double>() == doctest::Approx(0.0));

  const auto saved = scratch("saved.json");
  REQUIRE(run({"learn", "quadratic", "--synthetic", "iid", "--horizon", "50", "--save-stream", saved.string()}).code == 0);
  const Run from_file = run({"learn", "quadratic", saved.string()});
  const Run direct = run({"learn", "quadratic", "--synthetic", "iid", "--horizon", "50"});
  REQUIRE(from_file.code == 0);
  CHECK(json::parse(from_file.out)["cumulative_regret"] == json::parse(direct.out)["cumulative_regret"]);

  CHECK(run({"learn", "log", single.string(), "--M", "20"}).code == 0);
}

TEST_CASE("identical flags and seed give byte-identical output") {
  const std::vector<std::string> learn{"learn", "quadratic", "--synthetic", "iid", "--horizon", "200", "--seed", "11"};
  CHECK(run(learn).out == run(learn).out);
  const std::vector<std::string> audit{"audit", "spherical:2", "--n", "3", "--samples", "100", "--seed", "4"};
  CHECK(run(audit).out == run(audit).out);
  CHECK(run(audit).out != run({"audit", "spherical:2", "--n", "3", "--samples", "100", "--seed", "5"}).out);
}

TEST_CASE("the seed defaults from the environment") {
  const std::vector<std::string> audit{"audit", "quadratic", "--n", "3", "--samples", "50"};
  const std::string explicit_seed = run({"audit", "quadratic", "--n", "3", "--samples", "50", "--seed", "17"}).out;
  setenv("QAPOOL_SEED", "17", 1);
  const std::string from_env = run(audit).out;
  unsetenv("QAPOOL_SEED");
  CHECK(from_env == explicit_seed);
  CHECK(run(audit).out != explicit_seed);
}

TEST_CASE("audit command") {
  const Run sph = run({"audit", "spherical:2", "--n", "3", "--samples", "1000", "--seed", "1"});
  CHECK(sph.code == 0);
  const json doc = json::parse(sph.out);
  CHECK(doc["passed"] == true);
  for (const auto& c : doc["checks"]) CHECK(c["passed"] == true);

  const Run ts = run({"audit", "tsallis:3", "--n", "3", "--samples", "100"});
  CHECK(ts.code == 2);
  const json tdoc = json::parse(ts.out);
  CHECK(tdoc["exposure_probe"]["canonical_failed"] == true);
  CHECK(tdoc.contains("skipped"));

  const Run lg = run({"audit", "log", "--n", "2", "--samples", "200"});
  CHECK(lg.code == 0);
  bool monotone = false;
  const json ldoc = json::parse(lg.out);
  for (const auto& c : ldoc["checks"]) {
    if (c["name"] == "monotonicity") monotone = c["passed"].get<bool>();
  }
  CHECK(monotone);
}

TEST_CASE("probe-exposure command") {
  CHECK(run({"probe-exposure", "spherical:2", "--n", "4", "--samples", "300"}).code == 0);
  const Run bad = run({"probe-exposure", "tsallis:3", "--n", "3", "--samples", "50"});
  CHECK(bad.code == 2);
  CHECK(json::parse(bad.out)["exposure_probe"]["canonical_failed"] == true);
}
