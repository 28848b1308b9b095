#include <cctype>
#include <charconv>
#include <cmath>

#include "socrates/task.hpp"

namespace socrates::task {

namespace {

class LiteralParser {
 public:
  explicit LiteralParser(std::string_view s) : s_(s) {}

  PyLiteral parse() {
    skip_space();
    if (pos_ == s_.size()) fail("empty literal");
    auto v = value();
    skip_space();
    if (pos_ != s_.size()) fail(std::string("unexpected '") + s_[pos_] + "' after literal");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw FormatError(message, "offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  PyLiteral value() {
    skip_space();
    if (pos_ == s_.size()) fail("unexpected end of literal");
    const char c = s_[pos_];
    if (c == '(') return sequence(PyLiteral::Kind::Tuple, ')');
    if (c == '[') return sequence(PyLiteral::Kind::List, ']');
    return number();
  }

  PyLiteral sequence(PyLiteral::Kind kind, char close) {
    PyLiteral out;
    out.kind = kind;
    ++pos_;
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == close) {
      ++pos_;
      return out;
    }
    while (true) {
      out.items.push_back(value());
      skip_space();
      if (pos_ == s_.size()) fail(std::string("missing '") + close + "'");
      if (s_[pos_] == close) {
        ++pos_;
        return out;
      }
      if (s_[pos_] != ',') fail(std::string("expected ',' or '") + close + "'");
      ++pos_;
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == close) fail("trailing comma");
    }
  }

  PyLiteral number() {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
    // from_chars rejects a leading '+' and accepts "inf"/"nan"; screen both.
    if (p == s_.size() || !(std::isdigit(static_cast<unsigned char>(s_[p])) || s_[p] == '.')) {
      fail("expected a number");
    }
    double v = 0.0;
    const char* first = s_.data() + p;
    auto res = std::from_chars(first, s_.data() + s_.size(), v);
    if (res.ec == std::errc::result_out_of_range) fail("number out of range");
    if (res.ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    if (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      pos_ = start;
      fail("malformed number");
    }
    PyLiteral out;
    out.number = s_[start] == '-' ? -v : v;
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void infer_shape(const PyLiteral& lit, std::size_t depth, Shape& shape) {
  if (!lit.is_sequence()) return;
  if (lit.items.empty()) throw FormatError("empty list cannot form a tensor");
  if (depth == shape.size()) shape.push_back(lit.items.size());
  infer_shape(lit.items.front(), depth + 1, shape);
}

void flatten_into(const PyLiteral& lit, const Shape& shape, std::size_t depth, std::vector<double>& out) {
  if (depth == shape.size()) {
    if (lit.is_sequence()) throw FormatError("ragged nesting: expected a number at depth " + std::to_string(depth));
    out.push_back(lit.number);
    return;
  }
  if (!lit.is_sequence()) throw FormatError("ragged nesting: expected a list at depth " + std::to_string(depth));
  if (lit.items.size() != shape[depth]) {
    throw FormatError("ragged nesting: length " + std::to_string(lit.items.size()) + " at depth " +
                      std::to_string(depth) + ", expected " + std::to_string(shape[depth]));
  }
  for (const auto& item : lit.items) flatten_into(item, shape, depth + 1, out);
}

}  // namespace

PyLiteral parse_py_literal(std::string_view text) { return LiteralParser(text).parse(); }

Tensor literal_to_tensor(const PyLiteral& lit) {
  Shape shape;
  infer_shape(lit, 0, shape);
  std::vector<double> data;
  data.reserve(shape_size(shape));
  flatten_into(lit, shape, 0, data);
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace socrates::task
