#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "socrates/error.hpp"
#include "socrates/smc.hpp"
#include "support.hpp"

using namespace socrates;
using namespace socrates::smc;
using nlohmann::json;

namespace {

// Smallest n with n * log(step) crossing log(bound), computed independently.
std::size_t stopping_point(long double step, long double bound) {
  return static_cast<std::size_t>(std::ceil(std::log(bound) / std::log(step)));
}

task::VerificationTask with_assert(const std::string& name, const json& assert_doc) {
  auto doc = json::parse(test::read_file(test::fixture(name)));
  doc["assert"] = assert_doc;
  return task::parse_task(doc.dump(), test::fixture(name).parent_path());
}

}  // namespace

TEST_CASE("default test stops after 280 satisfying or 15 violating samples") {
  const SprtConfig c;
  const long double p0 = 0.955L, p1 = 0.945L;
  CHECK(stopping_point(p1 / p0, 0.05L / 0.95L) == 280);
  CHECK(stopping_point((1 - p1) / (1 - p0), 0.95L / 0.05L) == 15);

  const auto yes = run_sprt(c, [](std::mt19937_64&) { return true; });
  CHECK(yes.verdict == SprtVerdict::AcceptH0);
  CHECK(yes.samples_used == 280);
  const auto no = run_sprt(c, [](std::mt19937_64&) { return false; });
  CHECK(no.verdict == SprtVerdict::AcceptH1);
  CHECK(no.samples_used == 15);
}

TEST_CASE("stopping points for other parameters match the closed form") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> th(0.2, 0.8), d(0.01, 0.1), err(0.01, 0.2);
  for (int i = 0; i < 50; ++i) {
    SprtConfig c;
    c.theta = th(rng);
    c.delta = d(rng);
    c.alpha = err(rng);
    c.beta = err(rng);
    const long double p0 = static_cast<long double>(c.theta) + c.delta;
    const long double p1 = static_cast<long double>(c.theta) - c.delta;
    const long double lo = static_cast<long double>(c.beta) / (1 - static_cast<long double>(c.alpha));
    const long double hi = (1 - static_cast<long double>(c.beta)) / c.alpha;
    CHECK(run_sprt(c, [](std::mt19937_64&) { return true; }).samples_used == stopping_point(p1 / p0, lo));
    CHECK(run_sprt(c, [](std::mt19937_64&) { return false; }).samples_used ==
          stopping_point((1 - p1) / (1 - p0), hi));
  }
}

TEST_CASE("evidence moves monotonically with each sample") {
  SprtConfig c;
  c.max_samples = 100000;
  SprtState s(c);
  double last = s.log_ratio();
  for (int i = 0; i < 100; ++i) {
    s.update(true);
    CHECK(s.log_ratio() < last);
    last = s.log_ratio();
  }
  SprtState t(c);
  last = t.log_ratio();
  for (int i = 0; i < 10; ++i) {
    t.update(false);
    CHECK(t.log_ratio() > last);
    last = t.log_ratio();
  }
}

TEST_CASE("log ratio matches the product of likelihood ratios") {
  SprtConfig c;
  c.theta = 0.7;
  c.delta = 0.05;
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.7);
  SprtState s(c);
  long double product = 1.0L;
  for (int i = 0; i < 5000 && s.decision() == Decision::Continue; ++i) {
    const bool sat = coin(rng);
    s.update(sat);
    product *= sat ? 0.65L / 0.75L : 0.35L / 0.25L;
    const double expected = static_cast<double>(std::log(product));
    CHECK(std::abs(s.log_ratio() - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
  }
  CHECK(s.log_lower() == doctest::Approx(std::log(0.05 / 0.95)));
  CHECK(s.log_upper() == doctest::Approx(std::log(0.95 / 0.05)));
}

TEST_CASE("decisions are calibrated away from the indifference region") {
  SprtConfig c;
  int h0 = 0, h1 = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    c.seed = seed;
    std::bernoulli_distribution good(0.99), bad(0.90);
    h0 += run_sprt(c, [&](std::mt19937_64& r) { return good(r); }).verdict == SprtVerdict::AcceptH0;
    h1 += run_sprt(c, [&](std::mt19937_64& r) { return bad(r); }).verdict == SprtVerdict::AcceptH1;
  }
  CHECK(h0 >= 90);
  CHECK(h1 >= 90);
}

TEST_CASE("the sample budget ends the test without a decision") {
  SprtConfig c;
  c.max_samples = 10;
  const auto r = run_sprt(c, [](std::mt19937_64&) { return true; });
  CHECK(r.verdict == SprtVerdict::BudgetExhausted);
  CHECK(r.samples_used == 10);
}

TEST_CASE("the same seed gives the same run") {
  const auto t = task::load_task(test::fixture("census_sprt.json"));
  auto c = SprtConfig::from_params(t.solver.params);
  const auto a = sprt_run(t, c), b = sprt_run(t, c);
  CHECK(a.verdict == b.verdict);
  CHECK(a.samples_used == b.samples_used);
  CHECK(a.log_ratio == b.log_ratio);
  REQUIRE(a.violation);
  CHECK(a.violation->at("x") == b.violation->at("x"));
  CHECK(a.violation->at("y") == b.violation->at("y"));
}

TEST_CASE("global fairness samples differ only on sensitive features") {
  const auto t = task::load_task(test::fixture("census_sprt.json"));
  PreconditionSampler sampler(t);
  std::mt19937_64 rng(8);
  const auto box = t.network.feature_box();
  for (int i = 0; i < 200; ++i) {
    const auto env = sampler.draw(rng, 10);
    const auto &x = env.at("x"), &y = env.at("y");
    for (std::size_t f = 0; f < 13; ++f) {
      CHECK(x[f] >= box.lower[f]);
      CHECK(x[f] <= box.upper[f]);
      CHECK(y[f] >= box.lower[f]);
      CHECK(y[f] <= box.upper[f]);
      if (f != 0 && f != 7 && f != 8) CHECK(x[f] == y[f]);
    }
  }
}

TEST_CASE("robustness balls are sampled inside the ball and the box") {
  for (const char* d : {"di", "d2"}) {
    CAPTURE(d);
    const auto t = with_assert("planted/planted_5.json",
                               {{"robustness", "local"}, {"x0", "[0.05, 0.5]"}, {"distance", d}, {"eps", "0.1"}});
    PreconditionSampler sampler(t);
    std::mt19937_64 rng(9);
    std::size_t rejected = 0;
    for (int i = 0; i < 500; ++i) {
      const auto x = sampler.draw(rng, 1, &rejected).at("x");
      CHECK(x[0] >= 0);
      const double dist = std::string(d) == "di" ? std::max(std::abs(x[0] - 0.05), std::abs(x[1] - 0.5))
                                                 : std::hypot(x[0] - 0.05, x[1] - 0.5);
      CHECK(dist <= 0.1);
    }
    CHECK(rejected == 0);
  }
}

TEST_CASE("an l0 radius covering every feature accepts any point of the box") {
  const auto t = with_assert("lstm_net.json", {{"robustness", "global"}, {"distance", "d0"}, {"eps", "12"}});
  PreconditionSampler sampler(t);
  std::mt19937_64 rng(10);
  std::size_t rejected = 0;
  for (int i = 0; i < 300; ++i) sampler.draw(rng, 1, &rejected);
  CHECK(rejected == 0);
}

TEST_CASE("an unsatisfiable precondition is a sampling error") {
  const auto t = with_assert("planted/planted_5.json", {{"pre", "x[0] > 0.5 && x[0] < 0.25"}, {"post", "L(x) = 0"}});
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(sample_precondition(t, rng, 100), SamplingError);
  const auto u = with_assert("planted/planted_5.json", {{"pre", "x[0] != x[0]"}, {"post", "L(x) = 0"}});
  CHECK_THROWS_AS(sample_precondition(u, rng, 100), SamplingError);
}

TEST_CASE("configuration validation") {
  CHECK_NOTHROW(SprtConfig{}.validate());
  auto bad = [](auto mutate) {
    SprtConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](SprtConfig& c) { c.theta = 0.999; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SprtConfig& c) { c.delta = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SprtConfig& c) { c.alpha = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SprtConfig& c) { c.alpha = 0.6, c.beta = 0.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SprtConfig& c) { c.max_samples = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(SprtConfig::from_params({{"seed", 1.5}}), ConfigError);
  CHECK(SprtConfig::from_params({{"theta", 0.8}, {"seed", 4}}).seed == 4);
}
