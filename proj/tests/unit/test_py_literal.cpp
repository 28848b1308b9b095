#include <doctest.h>

#include <random>
#include <string>

#include "socrates/task.hpp"

using namespace socrates;
using task::PyLiteral;
using task::parse_py_literal;

namespace {

PyLiteral num(double v) {
  PyLiteral p;
  p.number = v;
  return p;
}

PyLiteral seq(PyLiteral::Kind k, std::vector<PyLiteral> items) {
  PyLiteral p;
  p.kind = k;
  p.items = std::move(items);
  return p;
}

std::string error_of(const std::string& s) {
  try {
    parse_py_literal(s);
  } catch (const FormatError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("shape and bounds literals") {
  CHECK(parse_py_literal("(1,784)") == seq(PyLiteral::Kind::Tuple, {num(1), num(784)}));
  CHECK(parse_py_literal("[(0,1)]") ==
        seq(PyLiteral::Kind::List, {seq(PyLiteral::Kind::Tuple, {num(0), num(1)})}));
  CHECK(parse_py_literal(" ( 5 , 80 ) ") == seq(PyLiteral::Kind::Tuple, {num(5), num(80)}));
}

TEST_CASE("nested numeric lists") {
  const auto lit = parse_py_literal("[[1.0, -2e-1],[3,4]]");
  const auto t = task::literal_to_tensor(lit);
  CHECK(t.shape() == Shape{2, 2});
  CHECK(t.values() == std::vector<double>{1.0, -0.2, 3, 4});
  CHECK(task::literal_to_tensor(parse_py_literal("+2.5E+1")).item() == 25.0);
  CHECK(task::literal_to_tensor(parse_py_literal("7")).rank() == 0);
}

TEST_CASE("syntax errors report a character offset") {
  CHECK(error_of("(1,2,)").find("offset") != std::string::npos);  // trailing comma
  CHECK(error_of("[1, 2").find("offset 5") != std::string::npos);
  CHECK(error_of("(1 2)").find("offset 3") != std::string::npos);
  CHECK_FALSE(error_of("").empty());
  CHECK_FALSE(error_of("[1, x]").empty());
  CHECK_FALSE(error_of("[1, 2]]").empty());
  CHECK_FALSE(error_of("1e").empty());
  CHECK_FALSE(error_of("--1").empty());
}

TEST_CASE("ragged and empty nestings are not tensors") {
  CHECK_THROWS_AS(task::literal_to_tensor(parse_py_literal("[[1, 2], [3]]")), FormatError);
  CHECK_THROWS_AS(task::literal_to_tensor(parse_py_literal("[[1, 2], 3]")), FormatError);
  CHECK_THROWS_AS(task::literal_to_tensor(parse_py_literal("[]")), FormatError);
}

TEST_CASE("random rectangular literals round trip through their text") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> dim(1, 4);
  for (int i = 0; i < 100; ++i) {
    const Shape shape{static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng))};
    std::vector<double> values;
    std::string text = "[";
    for (std::size_t r = 0; r < shape[0]; ++r) {
      text += r ? ", [" : "[";
      for (std::size_t c = 0; c < shape[1]; ++c) {
        const double v = u(rng);
        values.push_back(v);
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        text += (c ? ", " : "") + std::string(buf);
      }
      text += "]";
    }
    text += "]";
    const auto t = task::literal_to_tensor(parse_py_literal(text));
    CHECK(t.shape() == shape);
    CHECK(t.values() == values);
  }
}
