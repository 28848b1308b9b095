#include "socrates/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "socrates/error.hpp"

namespace socrates::smc {

void SprtConfig::validate() const {
  auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
  if (!open01(theta)) throw ConfigError("theta must lie in (0, 1)");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(p1() > 0.0) || !(p0() < 1.0)) throw ConfigError("theta +/- delta must stay inside (0, 1)");
  if (!open01(alpha) || !open01(beta)) throw ConfigError("alpha and beta must lie in (0, 1)");
  if (!(alpha + beta < 1.0)) throw ConfigError("alpha + beta must be below 1");
  if (max_samples == 0) throw ConfigError("max_samples must be positive");
  if (!(timeout_seconds >= 0.0)) throw ConfigError("timeout must be non-negative");
}

SprtConfig SprtConfig::from_params(const std::map<std::string, double>& params) {
  SprtConfig c;
  auto get = [&](const char* key, double& into) {
    if (auto it = params.find(key); it != params.end()) into = it->second;
  };
  auto integer = [&](const char* key, auto& into) {
    auto it = params.find(key);
    if (it == params.end()) return;
    const double v = it->second;
    if (v < 0 || v != std::floor(v) || v > 1e18) throw ConfigError(std::string(key) + " must be a non-negative integer");
    into = static_cast<std::remove_reference_t<decltype(into)>>(v);
  };
  get("theta", c.theta);
  get("alpha", c.alpha);
  get("beta", c.beta);
  get("delta", c.delta);
  get("timeout", c.timeout_seconds);
  integer("max_samples", c.max_samples);
  integer("max_rejections", c.max_rejections);
  integer("seed", c.seed);
  c.validate();
  return c;
}

SprtState::SprtState(const SprtConfig& config) {
  config.validate();
  log_sat_ = std::log(config.p1() / config.p0());
  log_viol_ = std::log((1.0 - config.p1()) / (1.0 - config.p0()));
  log_lower_ = std::log(config.beta / (1.0 - config.alpha));
  log_upper_ = std::log((1.0 - config.beta) / config.alpha);
}

double SprtState::log_ratio() const {
  return static_cast<double>(satisfied_) * log_sat_ + static_cast<double>(violated_) * log_viol_;
}

Decision SprtState::decision() const {
  const double lr = log_ratio();
  if (lr <= log_lower_) return Decision::AcceptH0;
  if (lr >= log_upper_) return Decision::AcceptH1;
  return Decision::Continue;
}

Decision SprtState::update(bool satisfied) {
  ++(satisfied ? satisfied_ : violated_);
  return decision();
}

const char* sprt_verdict_name(SprtVerdict v) {
  switch (v) {
    case SprtVerdict::AcceptH0: return "accept H0";
    case SprtVerdict::AcceptH1: return "accept H1";
    case SprtVerdict::BudgetExhausted: return "budget exhausted";
  }
  return "?";
}

namespace {

SprtResult drive(const SprtConfig& config, const std::function<std::optional<bool>(std::mt19937_64&)>& trial,
                 std::string& note) {
  SprtState state(config);
  std::mt19937_64 rng(config.seed);
  const auto start = std::chrono::steady_clock::now();
  SprtResult result;
  Decision d = Decision::Continue;
  while (d == Decision::Continue && state.samples() < config.max_samples) {
    if (config.timeout_seconds > 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= config.timeout_seconds) {
      note = "timeout after " + std::to_string(state.samples()) + " samples";
      break;
    }
    auto outcome = trial(rng);
    if (!outcome) break;
    d = state.update(*outcome);
  }
  result.verdict = d == Decision::AcceptH0   ? SprtVerdict::AcceptH0
                   : d == Decision::AcceptH1 ? SprtVerdict::AcceptH1
                                             : SprtVerdict::BudgetExhausted;
  result.samples_used = state.samples();
  result.satisfied = state.satisfied();
  result.log_ratio = state.log_ratio();
  result.final_ratio = std::exp(result.log_ratio);
  return result;
}

}  // namespace

SprtResult run_sprt(const SprtConfig& config, const std::function<bool(std::mt19937_64&)>& trial) {
  std::string note;
  auto r = drive(config, [&](std::mt19937_64& rng) -> std::optional<bool> { return trial(rng); }, note);
  r.note = note;
  return r;
}

// ---------------------------------------------------------------------------
// Sampling.

PreconditionSampler::PreconditionSampler(const task::VerificationTask& task)
    : task_(task), box_(task.network.feature_box()), space_(build_search_space(task.assertion, task.network)) {}

Tensor PreconditionSampler::uniform_box(std::mt19937_64& rng) const {
  std::vector<double> x(box_.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = box_.lower[i] == box_.upper[i] ? box_.lower[i]
                                          : std::uniform_real_distribution<double>(box_.lower[i], box_.upper[i])(rng);
  }
  return Tensor::vector(std::move(x));
}

// A point at distance <= eps from `centre` inside the input box.
Tensor PreconditionSampler::ball_sample(const Tensor& centre, std::mt19937_64& rng) const {
  const auto& t = *task_.sugar;
  const std::size_t n = centre.size();
  std::vector<double> x(centre.values());
  switch (t.distance) {
    case numeric::Distance::Linf:
      for (std::size_t i = 0; i < n; ++i) {
        auto [lo, hi] = inner_interval(centre[i], t.eps);
        lo = std::max(lo, box_.lower[i]);
        hi = std::min(hi, box_.upper[i]);
        if (lo < hi) x[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
        else if (lo == hi) x[i] = lo;
        // lo > hi: centre outside the box; the pre check rejects the draw
      }
      break;
    case numeric::Distance::L2: {
      // Uniform in the ball, then clamped into the box. Clamping moves each
      // coordinate towards the (in-box) centre, so the distance only shrinks.
      std::normal_distribution<double> normal;
      std::vector<double> dir(n);
      double norm = 0.0;
      do {
        norm = 0.0;
        for (auto& v : dir) {
          v = normal(rng);
          norm += v * v;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      const double radius = t.eps * std::pow(u, 1.0 / static_cast<double>(n)) * (1.0 - 1e-12);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::clamp(centre[i] + radius * dir[i] / norm, box_.lower[i], box_.upper[i]);
      }
      break;
    }
    case numeric::Distance::L0: {
      // Resample floor(eps) coordinates chosen at random (all of them when
      // eps >= n); the rest stay at the centre.
      const std::size_t k = t.eps >= static_cast<double>(n) ? n : static_cast<std::size_t>(std::floor(t.eps));
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + std::uniform_int_distribution<std::size_t>(0, n - 1 - j)(rng);
        std::swap(idx[j], idx[pick]);
        const std::size_t i = idx[j];
        x[i] = box_.lower[i] == box_.upper[i]
                   ? box_.lower[i]
                   : std::uniform_real_distribution<double>(box_.lower[i], box_.upper[i])(rng);
      }
      break;
    }
  }
  return Tensor::vector(std::move(x));
}

logic::Env PreconditionSampler::candidate(std::mt19937_64& rng) const {
  using logic::TemplateKind;
  logic::Env env;
  if (task_.sugar) {
    const auto& t = *task_.sugar;
    auto resample_sensitive = [&](Tensor x) {
      for (auto i : t.sensitive) {
        x[i] = box_.lower[i] == box_.upper[i]
                   ? box_.lower[i]
                   : std::uniform_real_distribution<double>(box_.lower[i], box_.upper[i])(rng);
      }
      return x;
    };
    switch (t.kind) {
      case TemplateKind::LocalRobustness:
        env.emplace("x", ball_sample(*t.x0, rng));
        return env;
      case TemplateKind::GlobalRobustness: {
        auto x = uniform_box(rng);
        auto y = ball_sample(x, rng);
        env.emplace("x", std::move(x));
        env.emplace("y", std::move(y));
        return env;
      }
      case TemplateKind::LocalFairness:
        env.emplace("x", resample_sensitive(*t.x0));
        return env;
      case TemplateKind::GlobalFairness: {
        auto x = uniform_box(rng);
        auto y = resample_sensitive(x);
        env.emplace("x", std::move(x));
        env.emplace("y", std::move(y));
        return env;
      }
    }
  }
  std::vector<double> z(space_.dimension());
  for (std::size_t c = 0; c < z.size(); ++c) {
    z[c] = space_.lower[c] == space_.upper[c]
               ? space_.lower[c]
               : std::uniform_real_distribution<double>(space_.lower[c], space_.upper[c])(rng);
  }
  return space_.expand(z);
}

bool PreconditionSampler::accepts(const logic::Env& env) const {
  return logic::evaluate(task_.assertion.pre, env, task_.network, task_.assertion.affine);
}

logic::Env PreconditionSampler::draw(std::mt19937_64& rng, std::size_t max_rejections, std::size_t* rejected) const {
  if (!task_.sugar && !space_.feasible) {
    throw SamplingError("the precondition bounds leave no feasible input");
  }
  for (std::size_t attempt = 0;; ++attempt) {
    auto env = candidate(rng);
    if (accepts(env)) return env;
    if (rejected) ++*rejected;
    if (attempt + 1 >= max_rejections) {
      throw SamplingError("no sample satisfied the precondition after " + std::to_string(max_rejections) +
                          " draws; the feasible region is too small for rejection sampling");
    }
  }
}

logic::Env sample_precondition(const task::VerificationTask& task, std::mt19937_64& rng, std::size_t max_rejections) {
  return PreconditionSampler(task).draw(rng, max_rejections);
}

SprtResult sprt_run(const task::VerificationTask& task, const SprtConfig& config) {
  PreconditionSampler sampler(task);
  std::size_t rejected = 0;
  std::optional<logic::Env> violation;
  std::string note;
  auto r = drive(
      config,
      [&](std::mt19937_64& rng) -> std::optional<bool> {
        auto env = sampler.draw(rng, config.max_rejections, &rejected);
        const bool ok = logic::evaluate(task.assertion.post, env, task.network, task.assertion.affine);
        if (!ok && !violation) violation = std::move(env);
        return ok;
      },
      note);
  r.rejected_candidates = rejected;
  r.violation = std::move(violation);
  r.note = note;
  return r;
}

}  // namespace socrates::smc
