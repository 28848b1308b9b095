#include "checks.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "socrates/falsify.hpp"
#include "socrates/loss.hpp"
#include "socrates/smc.hpp"
#include "support.hpp"

namespace socrates::test {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

task::VerificationTask parse_json(const json& doc, const std::filesystem::path& base = fixture("")) {
  return task::parse_task(doc.dump(), base);
}

json load_json(const std::string& name) { return json::parse(read_file(fixture(name))); }

falsify::FalsifyResult audited_falsify(const task::VerificationTask& t, const falsify::FalsifyConfig& cfg) {
  auto r = falsify::falsify(t, cfg);
  global_audit().audit(t, r);
  return r;
}

}  // namespace

CheckResult check_loss_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const double k = falsify::kDefaultMargin;
  std::size_t pairs = 0, violations = 0, mismatched = 0, satisfied = 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    const auto net = random_mlp(rng, {n, 5, 3});
    std::uniform_int_distribution<int> grid(0, 4);
    for (int i = 0; i < 400; ++i) {
      const auto clause = logic::parse_clause(random_clause_text(rng, n, 3, 3));
      Tensor x({n});
      for (auto& v : x.data()) v = grid(rng) / 4.0;
      const logic::Env env{{"x", x}};
      const double loss = falsify::LossEvaluator(falsify::compile_exact_loss(clause), k).value(env, net);
      const double expect = oracle_loss(clause, env, net, k);
      const bool truth = logic::evaluate(clause, env, net);
      ++pairs;
      satisfied += truth;
      if (std::abs(loss - expect) > 1e-12 * (1.0 + std::abs(expect))) ++mismatched;
      if ((loss == 0.0) != truth) ++violations;
    }
  }
  const double s = since(t0);
  std::ostringstream d;
  d << pairs << " pairs (" << satisfied << " satisfied), " << violations << " zero-loss/truth disagreements, "
    << mismatched << " loss values off the table, " << fmt("%.2f s", s);
  return {pairs >= 1000 && violations == 0 && mismatched == 0 && s < 60.0, d.str(), s};
}

CheckResult check_layer_gradients() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  bool ok = true;
  std::ostringstream d;
  double worst = 0.0, worst_abs = 0.0;
  std::size_t skipped_total = 0;
  for (auto kind : all_layer_kinds()) {
    std::size_t accepted = 0, attempts = 0;
    double max_err = 0.0;
    while (accepted < 20 && attempts < 400) {
      ++attempts;
      const auto inst = random_layer_instance(kind, rng);
      const auto r = gradient_check(inst, rng);
      if (r.skipped) continue;
      ++accepted;
      max_err = std::max(max_err, r.max_error);
      worst_abs = std::max(worst_abs, r.max_abs_diff);
    }
    skipped_total += attempts - accepted;
    worst = std::max(worst, max_err);
    if (accepted < 20 || max_err > 1e-4) {
      ok = false;
      d << nn::layer_kind_name(kind) << ": " << accepted << " instances, max rel err " << max_err << "; ";
    }
  }
  const double s = since(t0);
  d << "13 layer kinds x 20 instances, worst rel err " << fmt("%.2e", worst) << " (abs diff "
    << fmt("%.2e", worst_abs) << "), " << skipped_total
    << " draws with a kink inside the step redrawn, " << fmt("%.2f s", s);
  return {ok && s < 60.0, d.str(), s};
}

CheckResult check_sprt_stopping() {
  const auto t0 = Clock::now();
  const smc::SprtConfig cfg;  // theta .95, alpha = beta = .05, delta .005
  // Independent count: smallest n with n log(p1/p0) <= log(beta/(1-alpha)), and
  // smallest n with n log((1-p1)/(1-p0)) >= log((1-beta)/alpha).
  const long double p0 = 0.955L, p1 = 0.945L;
  const long double lo = std::log(0.05L / 0.95L), hi = std::log(0.95L / 0.05L);
  const auto n_h0 = static_cast<std::size_t>(std::ceil(lo / std::log(p1 / p0)));
  const auto n_h1 = static_cast<std::size_t>(std::ceil(hi / std::log((1 - p1) / (1 - p0))));

  const auto all_sat = smc::run_sprt(cfg, [](std::mt19937_64&) { return true; });
  const auto all_viol = smc::run_sprt(cfg, [](std::mt19937_64&) { return false; });
  const double s = since(t0);
  const bool ok = n_h0 == 280 && n_h1 == 15 && all_sat.verdict == smc::SprtVerdict::AcceptH0 &&
                  all_sat.samples_used == 280 && all_viol.verdict == smc::SprtVerdict::AcceptH1 &&
                  all_viol.samples_used == 15 && s < 1.0;
  std::ostringstream d;
  d << "all-satisfying: " << smc::sprt_verdict_name(all_sat.verdict) << " at n=" << all_sat.samples_used
    << " (expected " << n_h0 << "); all-violating: " << smc::sprt_verdict_name(all_viol.verdict)
    << " at n=" << all_viol.samples_used << " (expected " << n_h1 << "), " << fmt("%.4f s", s);
  return {ok, d.str(), s};
}

CheckResult check_sprt_calibration() {
  const auto t0 = Clock::now();
  auto trials = [](double p, smc::SprtVerdict want) {
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      smc::SprtConfig cfg;
      cfg.seed = seed;
      const auto r = smc::run_sprt(cfg, [p](std::mt19937_64& rng) {
        return std::bernoulli_distribution(p)(rng);
      });
      hits += r.verdict == want;
    }
    return hits;
  };
  const auto h0 = trials(0.99, smc::SprtVerdict::AcceptH0);
  const auto h1 = trials(0.90, smc::SprtVerdict::AcceptH1);
  const double s = since(t0);
  std::ostringstream d;
  d << "p=0.99: AcceptH0 in " << h0 << "/200; p=0.90: AcceptH1 in " << h1 << "/200, " << fmt("%.2f s", s);
  return {h0 >= 180 && h1 >= 180 && s < 30.0, d.str(), s};
}

CheckResult check_planted_falsification() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream d;
  double slowest = 0.0;
  for (int i = 0; i < 10; ++i) {
    const std::string name = "planted/planted_" + std::to_string(i) + ".json";
    const auto task = task::load_task(fixture(name));
    const std::size_t flips = grid_flips(task, 0.005);
    const auto cfg = falsify::FalsifyConfig::from_params(task.solver.params);
    const auto t1 = Clock::now();
    const auto r = audited_falsify(task, cfg);
    const double s = since(t1);
    slowest = std::max(slowest, s);
    const bool good = flips > 0 && cfg.restarts <= 10 && r.verdict == falsify::Verdict::Falsified && r.witness &&
                      falsify::validate_counterexample(task, *r.witness) && s < 10.0;
    if (!good) {
      ok = false;
      d << name << ": grid flips " << flips << ", verdict " << falsify::verdict_name(r.verdict) << ", "
        << r.restarts_run << " restarts, " << fmt("%.2f s", s) << "; ";
    }
  }
  const double s = since(t0);
  d << (ok ? "10/10 falsified with validated witnesses" : "failures above") << ", slowest " << fmt("%.3f s", slowest);
  return {ok, d.str(), s};
}

namespace {

// A varied corpus of small tasks: every template kind and a few general
// formulas, on random nets.
std::vector<task::VerificationTask> soundness_corpus() {
  std::vector<task::VerificationTask> out;
  std::mt19937_64 rng(4242);
  auto vec = [](const Tensor& t) {
    json a = json::array();
    for (double v : t.values()) a.push_back(v);
    return a.dump();
  };
  for (int i = 0; i < 40; ++i) {
    const std::size_t n = 2 + i % 5;
    const auto net = random_mlp(rng, {n, 8, 3});
    task::VerificationTask t;
    t.network = net;
    const Tensor x0 = random_tensor(rng, {n}, 0.0, 1.0);
    logic::Template s;
    s.x0 = x0;
    s.eps = 0.05 + 0.05 * (i % 4);
    s.distance = static_cast<numeric::Distance>(i % 3);
    if (s.distance == numeric::Distance::L0) s.eps = 1 + i % 2;
    s.sensitive = {0};
    switch (i % 6) {
      case 0:
      case 1: s.kind = logic::TemplateKind::LocalRobustness; break;
      case 2: s.kind = logic::TemplateKind::GlobalRobustness; s.x0.reset(); break;
      case 3: s.kind = logic::TemplateKind::LocalFairness; break;
      case 4: s.kind = logic::TemplateKind::GlobalFairness; s.x0.reset(); break;
      default: break;
    }
    if (i % 6 == 5) {
      t.assertion = logic::parse_assertion("x[0] >= 0.25 && x[1] <= 0.75 && d2(x, " + vec(x0) + ") <= 0.5",
                                           i % 2 ? "L(x) = " + std::to_string(i % 3) : "M(x)[0] > M(x)[1] || M(x)[2] >= 0");
    } else {
      t.assertion = logic::expand_template(s, net);
      t.sugar = s;
    }
    t.solver.algorithm = "optimize";
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

CheckResult check_soundness() {
  const auto t0 = Clock::now();
  falsify::FalsifyConfig cfg;
  cfg.restarts = 4;
  cfg.timeout_seconds = 10;
  for (const auto& t : soundness_corpus()) audited_falsify(t, cfg);
  const auto& audit = global_audit();
  const double s = since(t0);
  std::ostringstream d;
  d << audit.violations << " unsound witnesses among " << audit.falsified
    << " falsified verdicts audited in this run, " << fmt("%.2f s", s);
  return {audit.violations == 0 && audit.falsified > 0, d.str(), s};
}

namespace {

struct Mutation {
  const char* fixture;
  const char* description;
  std::function<void(json&)> apply;
  task::Violation expected;
  std::size_t layer;
};

json zeros(std::size_t n) { return json(std::vector<double>(n, 0.0)).dump(); }

}  // namespace

CheckResult check_format_fidelity() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  bool ok = true;

  const auto fig = task::load_task(fixture("mnist_mlp.json"));
  const auto& net = fig.network;
  const std::vector<std::pair<Shape, Shape>> want{{{784, 50}, {50}}, {{50, 50}, {50}}, {{50, 10}, {10}}};
  bool shapes = net.input_shape == Shape{1, 784} && net.bounds.size() == 1 && net.bounds[0] == nn::Bound{0, 1} &&
                net.layers.size() == 3 && fig.solver.algorithm == "optimize" && fig.display.resolution &&
                *fig.display.resolution == Shape{28, 28};
  for (std::size_t i = 0; shapes && i < 3; ++i) {
    const auto* p = std::get_if<nn::LinearParams>(&net.layers[i].params);
    shapes = p && net.layers[i].kind == nn::LayerKind::Linear && p->weights.shape() == want[i].first &&
             p->bias.size() == want[i].second[0];
  }
  if (!shapes) {
    ok = false;
    d << "image task did not decode to 784-50-50-10; ";
  }

  using task::Violation;
  constexpr auto net_level = task::WellformednessIssue::kNetwork;
  const std::vector<Mutation> mutations{
      {"mnist_mlp.json", "layers[0].bias has 49 entries",
       [](json& j) { j["model"]["layers"][0]["bias"] = zeros(49); }, Violation::BiasLengthMismatch, 0},
      {"mnist_mlp.json", "layers[1].weights has 49 rows",
       [](json& j) { j["model"]["layers"][1]["weights"] = json(std::vector<std::vector<double>>(49, std::vector<double>(50, 0.0))).dump(); },
       Violation::WeightsInputMismatch, 1},
      {"mnist_mlp.json", "3 bound pairs for 784 features",
       [](json& j) { j["model"]["bounds"] = "[(0,1), (0,1), (0,1)]"; }, Violation::BoundsDivisibility, net_level},
      {"conv_net.json", "filters expect 3 input channels",
       [](json& j) {
         j["model"]["layers"][0]["filters"] =
             json(std::vector<std::vector<std::vector<std::vector<double>>>>(
                      2, std::vector<std::vector<std::vector<double>>>(3, std::vector<std::vector<double>>(3, std::vector<double>(3, 0.1)))))
                 .dump();
       },
       Violation::FilterChannelMismatch, 0},
      {"conv_net.json", "conv bias has 3 entries for 2 filters",
       [](json& j) { j["model"]["layers"][0]["bias"] = zeros(3); }, Violation::FilterBiasMismatch, 0},
      {"conv_net.json", "conv stride 0", [](json& j) { j["model"]["layers"][0]["stride"] = "0"; },
       Violation::InvalidStride, 0},
      {"lstm_net.json", "h0 has 4 entries for 5 hidden units",
       [](json& j) { j["model"]["layers"][0]["h0"] = zeros(4); }, Violation::HiddenStateMismatch, 0},
      {"lstm_net.json", "c0 has 6 entries for 5 hidden units",
       [](json& j) { j["model"]["layers"][0]["c0"] = zeros(6); }, Violation::CellStateMismatch, 0},
  };
  std::size_t exact = 0;
  for (const auto& m : mutations) {
    json doc = load_json(m.fixture);
    parse_json(doc);  // the unmutated task is well formed
    m.apply(doc);
    std::vector<task::WellformednessIssue> issues;
    try {
      parse_json(doc);
    } catch (const task::IllFormedNetwork& e) {
      issues = e.issues();
    }
    const bool hit = issues.size() == 1 && issues[0].kind == m.expected && issues[0].layer == m.layer;
    exact += hit;
    if (!hit) {
      ok = false;
      d << m.description << ": got " << issues.size() << " issue(s)";
      for (const auto& i : issues) d << " [" << task::violation_name(i.kind) << "]";
      d << "; ";
    }
  }
  const double s = since(t0);
  d << "784-50-50-10 decoded, " << exact << "/8 mutations raise exactly their violation, " << fmt("%.2f s", s);
  return {ok, d.str(), s};
}

CheckResult check_degenerate_templates() {
  const auto t0 = Clock::now();
  std::ostringstream d;
  bool ok = true;

  for (const char* name : {"mnist_mlp.json", "planted/planted_0.json", "census_fairness.json"}) {
    json doc = load_json(name);
    if (doc["assert"].contains("fairness")) {
      doc["assert"].erase("fairness");
      doc["assert"]["distance"] = "di";
    }
    doc["assert"]["eps"] = "0";
    const auto t = parse_json(doc, fixture(name).parent_path());
    const auto r = audited_falsify(t, falsify::FalsifyConfig::from_params(t.solver.params));
    if (r.verdict != falsify::Verdict::NotFalsified) {
      ok = false;
      d << name << " with eps 0: " << falsify::verdict_name(r.verdict) << "; ";
    }
  }

  std::size_t draws = 0, rejected_total = 0, pre_false = 0;
  for (const char* name : {"census_fairness.json", "planted/planted_3.json", "lstm_net.json"}) {
    for (bool global : {false, true}) {
      json doc = load_json(name);
      const auto base = task::load_task(fixture(name));
      const std::size_t n = base.network.feature_count();
      for (double eps : {static_cast<double>(n), static_cast<double>(n) + 3.5}) {
        json a{{"robustness", global ? "global" : "local"}, {"distance", "d0"}, {"eps", eps}};
        if (!global) a["x0"] = doc["assert"]["x0"];
        doc["assert"] = a;
        doc["solver"] = {{"algorithm", "sprt"}};
        const auto t = parse_json(doc, fixture(name).parent_path());
        const smc::PreconditionSampler sampler(t);
        std::mt19937_64 rng(9);
        const auto box = t.network.feature_box();
        for (int i = 0; i < 500; ++i) {
          std::size_t rejected = 0;
          sampler.draw(rng, 1, &rejected);
          rejected_total += rejected;
          ++draws;
          // any point of the box, for every variable, satisfies the precondition
          logic::Env env;
          for (const auto& v : t.assertion.variables) {
            Tensor x({n});
            for (std::size_t f = 0; f < n; ++f) {
              x[f] = std::uniform_real_distribution<double>(box.lower[f], box.upper[f])(rng);
            }
            env[v] = x;
          }
          if (!logic::evaluate(t.assertion.pre, env, t.network)) ++pre_false;
        }
      }
    }
  }
  if (rejected_total != 0 || pre_false != 0) ok = false;
  const double s = since(t0);
  d << "eps=0 gives not_falsified on 3 tasks; d0 with eps >= n: " << draws << " draws, " << rejected_total
    << " rejections, " << pre_false << " box points violating pre, " << fmt("%.2f s", s);
  return {ok, d.str(), s};
}

const std::vector<NamedCheck>& all_checks() {
  static const std::vector<NamedCheck> checks{
      {1, "loss semantics oracle", check_loss_oracle},
      {2, "layer gradients vs finite differences", check_layer_gradients},
      {3, "SPRT closed-form stopping", check_sprt_stopping},
      {4, "SPRT calibration", check_sprt_calibration},
      {5, "planted counterexamples", check_planted_falsification},
      {6, "falsifier soundness", check_soundness},
      {7, "task format fidelity", check_format_fidelity},
      {8, "degenerate templates", check_degenerate_templates},
  };
  return checks;
}

}  // namespace socrates::test
