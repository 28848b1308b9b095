#include "socrates/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "socrates/error.hpp"

namespace socrates::falsify {

const char* minimize_status_name(MinimizeStatus s) {
  switch (s) {
    case MinimizeStatus::ReachedTarget: return "reached target";
    case MinimizeStatus::GradientConverged: return "projected gradient below tolerance";
    case MinimizeStatus::ObjectiveConverged: return "objective change below tolerance";
    case MinimizeStatus::MaxIterations: return "iteration limit";
    case MinimizeStatus::LineSearchFailed: return "line search failed";
    case MinimizeStatus::Timeout: return "timeout";
  }
  return "?";
}

namespace {

struct Correction {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

double dot_masked(const std::vector<double>& a, const std::vector<double>& b, const std::vector<char>& mask) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (mask[i]) acc += a[i] * b[i];
  }
  return acc;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

}  // namespace

MinimizeResult minimize_bounded(const Objective& objective, std::span<const double> lower,
                                std::span<const double> upper, std::vector<double> init,
                                const MinimizeConfig& config) {
  const std::size_t n = init.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("minimize_bounded: bound sizes differ");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("minimize_bounded: empty box");
  }
  auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
  };

  MinimizeResult r;
  r.x = std::move(init);
  project(r.x);
  std::vector<double> g(n, 0.0);
  r.f = objective(r.x, g);
  r.evaluations = 1;
  if (!std::isfinite(r.f) || !all_finite(g)) {
    throw EvaluationError("objective is not finite at the initial point");
  }

  std::deque<Correction> memory;
  std::vector<double> d(n), q(n), xn(n), gn(n);
  std::vector<char> free(n);

  for (;;) {
    if (r.f <= config.target) {
      r.status = MinimizeStatus::ReachedTarget;
      return r;
    }
    if (r.iterations >= config.max_iterations) {
      r.status = MinimizeStatus::MaxIterations;
      return r;
    }
    if (config.deadline && std::chrono::steady_clock::now() >= *config.deadline) {
      r.status = MinimizeStatus::Timeout;
      return r;
    }

    double pg_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pg_norm = std::max(pg_norm, std::abs(std::clamp(r.x[i] - g[i], lower[i], upper[i]) - r.x[i]));
      const bool at_lower = r.x[i] <= lower[i] && g[i] > 0;
      const bool at_upper = r.x[i] >= upper[i] && g[i] < 0;
      free[i] = lower[i] < upper[i] && !at_lower && !at_upper;
    }
    if (pg_norm < config.gtol) {
      r.status = MinimizeStatus::GradientConverged;
      return r;
    }

    // Two-loop recursion restricted to the free variables.
    for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
    std::vector<double> alpha(memory.size());
    for (std::size_t j = memory.size(); j-- > 0;) {
      alpha[j] = memory[j].rho * dot_masked(memory[j].s, q, free);
      for (std::size_t i = 0; i < n; ++i) {
        if (free[i]) q[i] -= alpha[j] * memory[j].y[i];
      }
    }
    double gamma = 1.0;
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double yy = dot_masked(last.y, last.y, free);
      const double sy = dot_masked(last.s, last.y, free);
      if (yy > 0 && sy > 0) gamma = sy / yy;
    }
    for (std::size_t i = 0; i < n; ++i) q[i] *= gamma;
    for (std::size_t j = 0; j < memory.size(); ++j) {
      const double beta = memory[j].rho * dot_masked(memory[j].y, q, free);
      for (std::size_t i = 0; i < n; ++i) {
        if (free[i]) q[i] += (alpha[j] - beta) * memory[j].s[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -q[i] : 0.0;

    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += g[i] * d[i];
    if (!(slope < 0.0)) {
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -g[i] : 0.0;
    }

    double step = 1.0;
    if (memory.empty()) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      if (dmax > 1.0) step = 1.0 / dmax;
    }

    bool accepted = false;
    double fn = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
      for (std::size_t i = 0; i < n; ++i) xn[i] = r.x[i] + step * d[i];
      project(xn);
      double decrease = 0.0;
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        decrease += g[i] * (xn[i] - r.x[i]);
        moved = moved || xn[i] != r.x[i];
      }
      if (!moved) break;
      fn = objective(xn, gn);
      ++r.evaluations;
      if (std::isfinite(fn) && all_finite(gn) && fn <= r.f + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      r.status = MinimizeStatus::LineSearchFailed;
      return r;
    }

    Correction c{std::vector<double>(n), std::vector<double>(n), 0.0};
    double sy = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c.s[i] = xn[i] - r.x[i];
      c.y[i] = gn[i] - g[i];
      sy += c.s[i] * c.y[i];
      yy += c.y[i] * c.y[i];
    }
    if (sy > 1e-10 * yy && sy > 0) {
      c.rho = 1.0 / sy;
      memory.push_back(std::move(c));
      if (memory.size() > config.memory) memory.pop_front();
    }

    const double change = (r.f - fn) / std::max({std::abs(r.f), std::abs(fn), 1.0});
    r.x.swap(xn);
    g.swap(gn);
    r.f = fn;
    ++r.iterations;
    if (r.f > config.target && change <= config.ftol) {
      r.status = MinimizeStatus::ObjectiveConverged;
      return r;
    }
  }
}

}  // namespace socrates::falsify
