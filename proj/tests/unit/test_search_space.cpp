#include <doctest.h>

#include <cmath>
#include <random>

#include "socrates/search_space.hpp"
#include "support.hpp"

using namespace socrates;

namespace {

nn::Network net4() {
  std::mt19937_64 rng(3);
  return test::random_mlp(rng, {4, 3, 2}, 0, 1);
}

SearchSpace space(const std::string& pre, const std::string& post = "L(x) = 0") {
  const auto net = net4();
  return build_search_space(logic::parse_assertion(pre, post), net);
}

}  // namespace

TEST_CASE("equal features of two variables share a class") {
  const auto s = space("x[0] = y[0] && y[2] = x[2] && x[1] >= 0", "L(x) = L(y)");
  CHECK(s.variables == std::vector<std::string>{"x", "y"});
  CHECK(s.dimension() == 8 - 2);
  CHECK(s.slot_class[0] == s.slot_class[4]);
  CHECK(s.slot_class[2] == s.slot_class[6]);
  CHECK(s.slot_class[1] != s.slot_class[5]);
  const auto env = s.expand(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  CHECK(env.at("x")[0] == env.at("y")[0]);
  CHECK(env.at("x")[2] == env.at("y")[2]);
  CHECK(s.restrict(env) == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
}

TEST_CASE("equalities are transitive") {
  const auto s = space("x[0] = y[1] && y[1] = z[3]", "L(x) = L(z)");
  CHECK(s.slot_class[0] == s.slot_class[4 + 1]);
  CHECK(s.slot_class[0] == s.slot_class[8 + 3]);
}

TEST_CASE("constant atoms tighten the interval") {
  const auto s = space("x[0] >= 0.25 && 0.75 >= x[0] && x[1] < 0.5 && x[2] = 0.125 && x[3] > 0.5");
  CHECK(s.lower[s.slot_class[0]] == 0.25);
  CHECK(s.upper[s.slot_class[0]] == 0.75);
  CHECK(s.upper[s.slot_class[1]] < 0.5);
  CHECK(s.upper[s.slot_class[1]] == std::nextafter(0.5, 0.0));
  CHECK(s.lower[s.slot_class[2]] == 0.125);
  CHECK(s.upper[s.slot_class[2]] == 0.125);
  CHECK(s.lower[s.slot_class[3]] > 0.5);
  CHECK(s.feasible);
}

TEST_CASE("atoms under a disjunction do not tighten") {
  const auto s = space("x[0] >= 0.25 || x[1] >= 0.25");
  CHECK(s.lower[s.slot_class[0]] == 0);
  CHECK(s.lower[s.slot_class[1]] == 0);
}

TEST_CASE("distance balls become boxes clipped to the input bounds") {
  const auto s = space("di(x, [0.05, 0.5, 0.5, 0.97]) <= 0.1");
  CHECK(s.lower[s.slot_class[0]] == 0);
  CHECK(s.upper[s.slot_class[0]] <= 0.15);
  CHECK(s.upper[s.slot_class[3]] == 1);
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = std::vector<double>{0.05, 0.5, 0.5, 0.97}[i];
    CHECK(std::abs(s.lower[s.slot_class[i]] - c) <= 0.1);
    CHECK(std::abs(s.upper[s.slot_class[i]] - c) <= 0.1);
  }
  const auto l2 = space("d2([0.5, 0.5, 0.5, 0.5], x) < 0.2");
  CHECK(l2.upper[l2.slot_class[0]] <= 0.7);
  const auto d0 = space("d0(x, [0.5, 0.5, 0.5, 0.5]) <= 1");
  CHECK(d0.lower[d0.slot_class[0]] == 0);
}

TEST_CASE("empty intervals make the space infeasible") {
  CHECK_FALSE(space("x[0] >= 0.75 && x[0] <= 0.25").feasible);
  CHECK_FALSE(space("x[0] > 1").feasible);
  CHECK_FALSE(space("di(x, [0.5, 0.5, 0.5, 0.5]) <= -1").feasible);
  CHECK(space("x[0] = 1").feasible);
}

TEST_CASE("inner intervals keep the rounded distance within eps") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-100, 100);
  std::uniform_real_distribution<double> e(1e-6, 1);
  for (int i = 0; i < 2000; ++i) {
    const double c = u(rng), eps = e(rng);
    const auto [lo, hi] = inner_interval(c, eps);
    CHECK(lo <= c);
    CHECK(hi >= c);
    CHECK(std::abs(lo - c) <= eps);
    CHECK(std::abs(hi - c) <= eps);
    // only a few ulps narrower than the exact interval
    CHECK(lo - (c - eps) <= 1e-12);
    CHECK((c + eps) - hi <= 1e-12);
  }
  CHECK(inner_interval(0.1, 0.2).first == -0.1 + 0.0);
}
