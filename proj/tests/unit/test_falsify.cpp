#include <doctest.h>

#include <nlohmann/json.hpp>

#include "socrates/error.hpp"
#include "socrates/falsify.hpp"
#include "support.hpp"

using namespace socrates;
using namespace socrates::falsify;
using nlohmann::json;

namespace {

json fixture_json(const std::string& name) { return json::parse(test::read_file(test::fixture(name))); }

task::VerificationTask from_json(const json& doc, const std::string& name) {
  return task::parse_task(doc.dump(), test::fixture(name).parent_path());
}

FalsifyResult run(const task::VerificationTask& t, std::uint64_t seed = 0, std::size_t restarts = 10) {
  FalsifyConfig cfg;
  cfg.seed = seed;
  cfg.restarts = restarts;
  auto r = socrates::falsify::falsify(t, cfg);
  test::global_audit().audit(t, r);
  return r;
}

}  // namespace

TEST_CASE("planted counterexamples are found and validated") {
  for (int i = 0; i < 10; ++i) {
    const auto name = "planted/planted_" + std::to_string(i) + ".json";
    CAPTURE(name);
    const auto t = task::load_task(test::fixture(name));
    REQUIRE(test::grid_flips(t, 0.005) > 0);
    const auto r = run(t, i);
    REQUIRE(r.verdict == Verdict::Falsified);
    REQUIRE(r.witness);
    CHECK(validate_counterexample(t, *r.witness));
    CHECK(test::independent_witness_check(t, *r.witness));
  }
}

TEST_CASE("a zero radius leaves nothing to find") {
  for (const char* name : {"planted/planted_0.json", "mnist_mlp.json"}) {
    CAPTURE(name);
    auto doc = fixture_json(name);
    doc["assert"]["eps"] = "0";
    const auto r = run(from_json(doc, name), 0, 4);
    CHECK(r.verdict == Verdict::NotFalsified);
    CHECK_FALSE(r.witness);
  }
}

TEST_CASE("a network with constant output cannot be falsified") {
  auto doc = fixture_json("planted/planted_1.json");
  doc["model"]["layers"] = json::array(
      {json{{"type", "linear"}, {"weights", "[[0, 0], [0, 0]]"}, {"bias", "[1, 0]"}}});
  doc["assert"] = {{"robustness", "global"}, {"distance", "d2"}, {"eps", "0.5"}};
  const auto r = run(from_json(doc, "planted/planted_1.json"));
  CHECK(r.verdict == Verdict::NotFalsified);
  CHECK(r.restarts_run == 10);
}

TEST_CASE("the same seed gives the same outcome") {
  const auto t = task::load_task(test::fixture("planted/planted_2.json"));
  const auto a = run(t, 42), b = run(t, 42);
  CHECK(a.verdict == b.verdict);
  CHECK(a.witness_restart == b.witness_restart);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.witness);
  REQUIRE(b.witness);
  CHECK(a.witness->at("x") == b.witness->at("x"));
}

TEST_CASE("the census fairness property is falsified") {
  const auto t = task::load_task(test::fixture("census_fairness.json"));
  const auto r = run(t, 1);
  REQUIRE(r.verdict == Verdict::Falsified);
  const auto& x = r.witness->at("x");
  const Tensor x0 = Tensor::vector({4, 0, 7, 0, 0, 4, 2, 0, 1, 5, 0, 40, 0});
  for (std::size_t i = 0; i < 13; ++i) {
    if (i == 0 || i == 7 || i == 8) continue;
    CHECK(x[i] == x0[i]);
  }
  CHECK(test::independent_witness_check(t, *r.witness));
}

TEST_CASE("global robustness on the recurrent fixture") {
  auto doc = fixture_json("lstm_net.json");
  doc["assert"] = {{"robustness", "global"}, {"distance", "di"}, {"eps", "1"}};
  const auto t = from_json(doc, "lstm_net.json");
  const auto r = run(t, 5, 6);
  if (r.verdict == Verdict::Falsified) CHECK(test::independent_witness_check(t, *r.witness));
  CHECK(r.verdict != Verdict::Timeout);
}

TEST_CASE("general formulas with linear maps") {
  auto doc = fixture_json("planted/planted_3.json");
  doc["assert"] = {{"pre", "x[0] >= 0.5 && N(f, x)[0] <= 0.75"}, {"post", "L(x) = 0 && L(x) != 0"}};
  doc["assert"]["lin"] = {{"f", {{"w", "[[0.5], [0.5]]"}, {"b", "[0]"}}}};
  const auto t = from_json(doc, "planted/planted_3.json");
  const auto r = run(t, 0, 3);
  REQUIRE(r.verdict == Verdict::Falsified);
  CHECK(r.witness->at("x")[0] >= 0.5);
  CHECK(0.5 * r.witness->at("x")[0] + 0.5 * r.witness->at("x")[1] <= 0.75);
}

TEST_CASE("a precondition no point satisfies") {
  auto doc = fixture_json("planted/planted_3.json");
  doc["assert"] = {{"pre", "x[0] > 2"}, {"post", "L(x) = 0"}};
  const auto r = run(from_json(doc, "planted/planted_3.json"), 0, 3);
  CHECK(r.verdict == Verdict::NotFalsified);
}

TEST_CASE("an expired time budget reports a timeout") {
  auto doc = fixture_json("mnist_mlp.json");
  doc["assert"]["eps"] = "0";
  FalsifyConfig cfg;
  cfg.timeout_seconds = 1e-9;
  cfg.restarts = 50;
  const auto r = socrates::falsify::falsify(from_json(doc, "mnist_mlp.json"), cfg);
  CHECK(r.verdict == Verdict::Timeout);
}

TEST_CASE("validation rejects points outside the box or missing variables") {
  const auto t = task::load_task(test::fixture("planted/planted_0.json"));
  const auto x0 = *t.sugar->x0;
  CHECK_FALSE(validate_counterexample(t, {{"x", x0}}));  // post holds at x0
  CHECK_FALSE(validate_counterexample(t, {}));
  CHECK_FALSE(validate_counterexample(t, {{"x", Tensor::vector({x0[0], 5.0})}}));
  CHECK_FALSE(validate_counterexample(t, {{"x", Tensor::vector({x0[0]})}}));
}

TEST_CASE("configuration parameters") {
  const auto c = FalsifyConfig::from_params({{"restarts", 3}, {"seed", 9}, {"timeout", 2.5}, {"k", 1e-6}});
  CHECK(c.restarts == 3);
  CHECK(c.seed == 9);
  CHECK(c.timeout_seconds == 2.5);
  CHECK(c.margin == 1e-6);
  CHECK_THROWS_AS(FalsifyConfig::from_params({{"restarts", 0}}), ConfigError);
  CHECK_THROWS_AS(FalsifyConfig::from_params({{"restarts", 2.5}}), ConfigError);
  CHECK_THROWS_AS(FalsifyConfig::from_params({{"seed", -1}}), ConfigError);
  CHECK_THROWS_AS(FalsifyConfig::from_params({{"timeout", 0}}), ConfigError);
  CHECK_THROWS_AS(FalsifyConfig::from_params({{"k", -1}}), ConfigError);
}

TEST_CASE("derived seeds differ per stream and are stable") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("no unsound witness was reported in this run") {
  CHECK(test::global_audit().violations == 0);
}
