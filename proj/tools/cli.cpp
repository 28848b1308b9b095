#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "report.hpp"
#include "socrates/error.hpp"
#include "socrates/falsify.hpp"
#include "socrates/smc.hpp"
#include "socrates/task.hpp"

namespace socrates::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string task_path;
  std::optional<std::string> engine;
  std::optional<double> timeout;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool emit_image = false;
};

std::string snake(std::string s) {
  for (auto& c : s) c = c == ' ' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Where witness files go: next to --out, else at display.path, else next to
// the task file.
fs::path witness_stem(const Options& opt, const task::VerificationTask& t) {
  if (opt.out) return fs::path(*opt.out).replace_extension();
  const fs::path task_dir = fs::path(opt.task_path).parent_path();
  if (t.display.path) {
    fs::path p(*t.display.path);
    if (!p.is_absolute()) p = task_dir / p;
    return p.replace_extension();
  }
  return task_dir / fs::path(opt.task_path).stem();
}

RunReport execute(const Options& opt, task::VerificationTask& t) {
  if (opt.engine) t.solver.algorithm = *opt.engine;
  if (opt.timeout) t.solver.params["timeout"] = *opt.timeout;
  if (opt.seed) t.solver.params["seed"] = static_cast<double>(*opt.seed);

  RunReport report;
  report.task = opt.task_path;
  report.engine = t.solver.algorithm;
  report.warnings = t.warnings;

  const auto start = std::chrono::steady_clock::now();
  std::optional<logic::Env> witness;
  if (t.solver.algorithm == "optimize") {
    const auto config = falsify::FalsifyConfig::from_params(t.solver.params);
    report.seed = config.seed;
    const auto r = falsify::falsify(t, config);
    report.verdict = snake(falsify::verdict_name(r.verdict));
    report.details["restarts_run"] = static_cast<double>(r.restarts_run);
    report.details["iterations"] = static_cast<double>(r.iterations);
    report.details["best_loss"] = r.best_loss;
    if (r.witness) report.details["witness_restart"] = static_cast<double>(r.witness_restart);
    report.notes = r.notes;
    witness = r.witness;
  } else if (t.solver.algorithm == "sprt") {
    const auto config = smc::SprtConfig::from_params(t.solver.params);
    report.seed = config.seed;
    const auto r = smc::sprt_run(t, config);
    report.verdict = snake(smc::sprt_verdict_name(r.verdict));
    report.details["samples_used"] = static_cast<double>(r.samples_used);
    report.details["satisfied"] = static_cast<double>(r.satisfied);
    report.details["rejected_candidates"] = static_cast<double>(r.rejected_candidates);
    report.details["log_ratio"] = r.log_ratio;
    report.details["final_ratio"] = r.final_ratio;
    if (!r.note.empty()) report.notes.push_back(r.note);
    if (r.verdict == smc::SprtVerdict::AcceptH0) {
      report.notes.push_back("H0 accepted: statistical evidence only, the property is not proved");
    }
  } else {
    throw FormatError("unknown engine '" + t.solver.algorithm + "' (expected optimize or sprt)", "--engine");
  }
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (witness) {
    std::vector<WitnessEntry> entries;
    if (opt.emit_image) {
      auto rendered = render_witness(*witness, t.assertion.variables, t.network.feature_box(), t.display.resolution,
                                     witness_stem(opt, t));
      entries = std::move(rendered.entries);
      if (rendered.error) throw EvaluationError("witness not rendered: " + *rendered.error);
    } else {
      for (const auto& v : t.assertion.variables) entries.push_back({v, witness->at(v).values(), {}, {}});
    }
    report.witness = std::move(entries);
  }
  return report;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Falsify or statistically check a neural-network property", "socrates"};
  app.add_option("task", opt.task_path, "Task JSON file")->required();
  app.add_option("--engine", opt.engine, "Override the solver algorithm")
      ->check(CLI::IsMember({"optimize", "sprt"}));
  app.add_option("--timeout", opt.timeout, "Time budget in seconds")->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "Random seed");
  app.add_option("--out", opt.out, "Write the JSON report here instead of standard output");
  app.add_flag("--emit-image", opt.emit_image, "Write the witness as CSV and, with a display resolution, PGM");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "socrates: " << e.what() << '\n';
    return kExitFormatError;
  }

  try {
    auto t = task::load_task(opt.task_path);
    for (const auto& w : t.warnings) err << "socrates: warning: " << w << '\n';
    const auto report = execute(opt, t);
    const auto text = report_to_json(report);
    if (opt.out) {
      const fs::path path(*opt.out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write '" + *opt.out + "'");
      f << text << '\n';
    } else {
      out << text << '\n';
    }
    err << "socrates: " << report.verdict << " (" << report.engine << ", " << report.wall_time_seconds << " s)\n";
    return kExitOk;
  } catch (const FormatError& e) {
    err << "socrates: format error: " << e.what() << '\n';
    return kExitFormatError;
  } catch (const ConfigError& e) {
    err << "socrates: configuration error: " << e.what() << '\n';
    return kExitFormatError;
  } catch (const std::exception& e) {
    err << "socrates: error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace socrates::cli
