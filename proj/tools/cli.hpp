#pragma once

#include <iosfwd>

namespace socrates::cli {

constexpr int kExitOk = 0;
constexpr int kExitFormatError = 2;
constexpr int kExitRuntimeError = 3;

/// socrates <task.json> [--engine optimize|sprt] [--timeout s] [--seed n]
///          [--out report.json] [--emit-image]
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace socrates::cli
