#include "socrates/falsify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "socrates/error.hpp"

namespace socrates::falsify {

using logic::RelOp;

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Falsified: return "falsified";
    case Verdict::NotFalsified: return "not falsified";
    case Verdict::Timeout: return "timeout";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}


// ---------------------------------------------------------------------------

FalsifyConfig FalsifyConfig::from_params(const std::map<std::string, double>& params) {
  FalsifyConfig c;
  auto get = [&](const char* key) -> std::optional<double> {
    auto it = params.find(key);
    if (it == params.end()) return std::nullopt;
    return it->second;
  };
  auto integer = [&](const char* key, double min) -> std::optional<std::size_t> {
    auto v = get(key);
    if (!v) return std::nullopt;
    if (*v < min || *v != std::floor(*v) || *v > 1e15) {
      throw ConfigError(std::string(key) + " must be an integer >= " + std::to_string(static_cast<long>(min)));
    }
    return static_cast<std::size_t>(*v);
  };
  if (auto v = integer("restarts", 1)) c.restarts = *v;
  if (auto v = integer("seed", 0)) c.seed = *v;
  if (auto v = integer("max_iterations", 1)) c.minimize.max_iterations = *v;
  if (auto v = integer("memory", 1)) c.minimize.memory = *v;
  if (auto v = integer("workers", 1)) c.workers = *v;
  if (auto v = get("timeout")) {
    if (!(*v > 0)) throw ConfigError("timeout must be positive");
    c.timeout_seconds = *v;
  }
  if (auto v = get("k")) {
    if (!(*v > 0)) throw ConfigError("k must be positive");
    c.margin = *v;
  }
  if (auto v = get("gtol")) {
    if (!(*v > 0)) throw ConfigError("gtol must be positive");
    c.minimize.gtol = *v;
  }
  if (auto v = get("ftol")) {
    if (!(*v >= 0)) throw ConfigError("ftol must be non-negative");
    c.minimize.ftol = *v;
  }
  return c;
}

bool validate_counterexample(const task::VerificationTask& task, const logic::Env& env) {
  const auto& net = task.network;
  const auto box = net.feature_box();
  for (const auto& v : task.assertion.variables) {
    auto it = env.find(v);
    if (it == env.end() || it->second.size() != net.feature_count()) return false;
    for (double x : it->second.data()) {
      if (!std::isfinite(x)) return false;
    }
    if (!box.contains(it->second)) return false;
  }
  try {
    return logic::evaluate(task.assertion.pre, env, net, task.assertion.affine) &&
           !logic::evaluate(task.assertion.post, env, net, task.assertion.affine);
  } catch (const EvaluationError&) {
    return false;
  }
}

namespace {

struct RestartOutcome {
  std::optional<logic::Env> witness;
  std::size_t iterations = 0;
  double loss = std::numeric_limits<double>::infinity();
  bool timed_out = false;
  std::string note;
};

class Falsifier {
 public:
  Falsifier(const task::VerificationTask& task, const FalsifyConfig& config)
      : task_(task),
        config_(config),
        space_(build_search_space(task.assertion, task.network)),
        target_(logic::make_and(task.assertion.pre, logic::negate_to_nnf(task.assertion.post))),
        surrogate_(compile_surrogate_loss(target_, task.network, task.assertion.affine)) {}

  FalsifyResult run() {
    FalsifyResult result;
    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(config_.timeout_seconds));
    if (!space_.feasible) {
      result.notes.push_back("the precondition leaves an empty search box");
      return result;
    }
    bool any_timeout = false;
    double best = std::numeric_limits<double>::infinity();
    const std::size_t wave = std::max<std::size_t>(1, config_.workers);
    for (std::size_t first = 0; first < config_.restarts; first += wave) {
      const std::size_t last = std::min(config_.restarts, first + wave);
      std::vector<RestartOutcome> outcomes(last - first);
      if (last - first == 1) {
        outcomes[0] = restart(first, deadline);
      } else {
        std::vector<std::future<RestartOutcome>> jobs;
        for (std::size_t i = first; i < last; ++i) {
          jobs.push_back(std::async(std::launch::async, [this, i, deadline] { return restart(i, deadline); }));
        }
        for (std::size_t i = 0; i < jobs.size(); ++i) outcomes[i] = jobs[i].get();
      }
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& o = outcomes[i];
        ++result.restarts_run;
        result.iterations += o.iterations;
        best = std::min(best, o.loss);
        any_timeout = any_timeout || o.timed_out;
        if (!o.note.empty()) result.notes.push_back("restart " + std::to_string(first + i) + ": " + o.note);
        if (o.witness) {
          result.verdict = Verdict::Falsified;
          result.witness = std::move(o.witness);
          result.witness_restart = first + i;
          result.best_loss = best;
          return result;
        }
      }
      if (std::chrono::steady_clock::now() >= deadline) {
        any_timeout = any_timeout || last < config_.restarts;
        break;
      }
    }
    result.best_loss = best;
    result.verdict = any_timeout ? Verdict::Timeout : Verdict::NotFalsified;
    return result;
  }

 private:
  std::vector<double> initial_point(std::size_t index) const {
    if (index == 0 && task_.sugar && task_.sugar->x0) {
      logic::Env env;
      for (const auto& v : space_.variables) env.emplace(v, *task_.sugar->x0);
      return space_.restrict(env);
    }
    std::mt19937_64 rng(derive_seed(config_.seed, index));
    std::vector<double> z(space_.dimension());
    for (std::size_t c = 0; c < z.size(); ++c) {
      z[c] = space_.lower[c] == space_.upper[c]
                 ? space_.lower[c]
                 : std::uniform_real_distribution<double>(space_.lower[c], space_.upper[c])(rng);
    }
    return z;
  }

  RestartOutcome restart(std::size_t index, std::chrono::steady_clock::time_point deadline) const {
    RestartOutcome out;
    LossEvaluator evaluator(surrogate_, config_.margin);
    const auto& space = space_;
    const auto& net = task_.network;
    const auto& affine = task_.assertion.affine;

    Objective objective = [&](std::span<const double> z, std::span<double> grad) {
      ad::Tape tape;
      logic::Bindings bindings;
      std::vector<ad::Var> leaves;
      const auto env = space.expand(z);
      for (const auto& v : space.variables) {
        leaves.push_back(tape.variable(env.at(v)));
        bindings.emplace(v, leaves.back());
      }
      logic::EvalContext ctx(net, affine);
      const auto loss = evaluator(bindings, ctx);
      std::fill(grad.begin(), grad.end(), 0.0);
      if (loss.tracked()) {
        tape.backward(loss);
        for (std::size_t v = 0; v < leaves.size(); ++v) {
          const auto g = tape.grad(leaves[v]);
          for (std::size_t i = 0; i < space.features; ++i) grad[space.slot_class[v * space.features + i]] += g[i];
        }
      }
      return loss.value().item();
    };

    auto init = initial_point(index);
    auto check = [&](const std::vector<double>& z) {
      auto env = space.expand(z);
      if (validate_counterexample(task_, env)) out.witness = std::move(env);
    };
    check(init);
    if (out.witness) {
      out.loss = 0.0;
      return out;
    }
    MinimizeConfig mc = config_.minimize;
    mc.target = 0.0;
    mc.deadline = deadline;
    try {
      auto r = minimize_bounded(objective, space.lower, space.upper, std::move(init), mc);
      out.iterations = r.iterations;
      out.loss = r.f;
      out.timed_out = r.status == MinimizeStatus::Timeout;
      check(r.x);
    } catch (const EvaluationError& e) {
      out.note = e.what();
    }
    return out;
  }

  const task::VerificationTask& task_;
  FalsifyConfig config_;
  SearchSpace space_;
  logic::ClausePtr target_;
  LossExpr surrogate_;
};

}  // namespace

FalsifyResult falsify(const task::VerificationTask& task, const FalsifyConfig& config) {
  return Falsifier(task, config).run();
}

}  // namespace socrates::falsify
