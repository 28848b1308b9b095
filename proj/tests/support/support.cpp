#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#ifndef SOCRATES_FIXTURE_DIR
#error "SOCRATES_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace socrates::test {

std::filesystem::path fixture(const std::string& relative) {
  return std::filesystem::path(SOCRATES_FIXTURE_DIR) / relative;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

nn::Layer linear_layer(Tensor w, Tensor b, std::optional<numeric::Activation> func) {
  return nn::Layer{nn::LayerKind::Linear, nn::LinearParams{std::move(w), std::move(b), func}};
}

nn::Network random_mlp(std::mt19937_64& rng, const std::vector<std::size_t>& sizes, double lo, double hi) {
  nn::Network net;
  net.input_shape = {sizes.front()};
  net.bounds = {{lo, hi}};
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    net.layers.push_back(linear_layer(random_tensor(rng, {sizes[i], sizes[i + 1]}),
                                      random_tensor(rng, {sizes[i + 1]}, -0.5, 0.5),
                                      last ? std::nullopt : std::optional(numeric::Activation::ReLU)));
  }
  return net;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

bool near_kink(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x, double h) {
  const double f0 = f(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fwd = (f(x) - f0) / h;
    x[i] = xi - h;
    const double bwd = (f0 - f(x)) / h;
    x[i] = xi;
    // smooth functions: |fwd - bwd| ~ h |f''|
    if (std::abs(fwd - bwd) > 1e-3 * std::max(1.0, std::max(std::abs(fwd), std::abs(bwd)))) return true;
  }
  return false;
}

double relative_error(double a, double n, double floor) {
  const double diff = std::abs(a - n);
  if (diff <= floor) return 0.0;
  return diff / std::max(std::abs(a), std::abs(n));
}

namespace {

bool finite_in_box(const Tensor& x, const nn::Box& box) {
  if (x.size() != box.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < box.lower[i] || x[i] > box.upper[i]) return false;
  }
  return true;
}

std::size_t argmax(const Tensor& t) {
  return static_cast<std::size_t>(std::max_element(t.values().begin(), t.values().end()) - t.values().begin());
}

double dist(numeric::Distance d, const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    switch (d) {
      case numeric::Distance::L0: acc += diff != 0.0 ? 1.0 : 0.0; break;
      case numeric::Distance::L2: acc += diff * diff; break;
      case numeric::Distance::Linf: acc = std::max(acc, diff); break;
    }
  }
  return d == numeric::Distance::L2 ? std::sqrt(acc) : acc;
}

bool only_sensitive_differ(const Tensor& a, const Tensor& b, const std::vector<std::size_t>& sensitive) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::find(sensitive.begin(), sensitive.end(), i) != sensitive.end()) continue;
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

bool independent_witness_check(const task::VerificationTask& task, const logic::Env& env) {
  if (!task.sugar) return falsify::validate_counterexample(task, env);
  const auto& s = *task.sugar;
  const auto& net = task.network;
  const auto box = net.feature_box();
  const auto& vars = task.assertion.variables;
  std::vector<Tensor> xs;
  for (const auto& v : vars) {
    auto it = env.find(v);
    if (it == env.end() || !finite_in_box(it->second.flattened(), box)) return false;
    xs.push_back(it->second.flattened());
  }
  auto lab = [&](const Tensor& x) { return argmax(nn::network_forward(net, x)); };
  using logic::TemplateKind;
  switch (s.kind) {
    case TemplateKind::LocalRobustness:
      return xs.size() == 1 && dist(s.distance, xs[0], *s.x0) <= s.eps && lab(xs[0]) != lab(*s.x0);
    case TemplateKind::GlobalRobustness:
      return xs.size() == 2 && dist(s.distance, xs[0], xs[1]) <= s.eps && lab(xs[0]) != lab(xs[1]);
    case TemplateKind::LocalFairness:
      return xs.size() == 1 && only_sensitive_differ(xs[0], *s.x0, s.sensitive) && lab(xs[0]) != lab(*s.x0);
    case TemplateKind::GlobalFairness:
      return xs.size() == 2 && only_sensitive_differ(xs[0], xs[1], s.sensitive) && lab(xs[0]) != lab(xs[1]);
  }
  return false;
}

std::size_t grid_flips(const task::VerificationTask& task, double step) {
  const auto& s = *task.sugar;
  const auto box = task.network.feature_box();
  const auto& x0 = *s.x0;
  const std::size_t c = argmax(nn::network_forward(task.network, x0));
  const long steps = std::lround(s.eps / step);
  std::size_t flips = 0;
  for (long i = -steps; i <= steps; ++i) {
    for (long j = -steps; j <= steps; ++j) {
      Tensor x = Tensor::vector({x0[0] + static_cast<double>(i) * step, x0[1] + static_cast<double>(j) * step});
      if (!finite_in_box(x, box) || dist(s.distance, x, x0) > s.eps) continue;
      if (argmax(nn::network_forward(task.network, x)) != c) ++flips;
    }
  }
  return flips;
}

void SoundnessAudit::audit(const task::VerificationTask& task, const falsify::FalsifyResult& r) {
  if (r.verdict != falsify::Verdict::Falsified) return;
  ++falsified;
  if (!r.witness || !falsify::validate_counterexample(task, *r.witness) ||
      !independent_witness_check(task, *r.witness)) {
    ++violations;
  }
}

SoundnessAudit& global_audit() {
  static SoundnessAudit audit;
  return audit;
}

}  // namespace socrates::test
