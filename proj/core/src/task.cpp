#include "socrates/task.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace socrates::task {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string at(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string at(const std::string& parent, std::size_t index) {
  return parent + "[" + std::to_string(index) + "]";
}

[[noreturn]] void rethrow_at(const std::exception& e, const std::string& where) {
  throw FormatError(e.what(), where);
}

struct Reader {
  fs::path base;
  std::vector<std::string> warnings;

  void warn_unknown(const json& obj, const std::string& where, std::initializer_list<std::string_view> known) {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        warnings.push_back(at(where, key) + ": unknown key ignored");
      }
    }
  }

  static const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError("missing mandatory key '" + key + "'", where);
    return *it;
  }

  static const json& require_object(const json& obj, const std::string& key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_object()) throw FormatError("expected an object", at(where, key));
    return v;
  }

  PyLiteral literal(const json& v, const std::string& where) {
    if (v.is_number()) {
      PyLiteral out;
      out.number = v.get<double>();
      return out;
    }
    if (v.is_array()) {
      PyLiteral out;
      out.kind = PyLiteral::Kind::List;
      for (std::size_t i = 0; i < v.size(); ++i) out.items.push_back(literal(v[i], at(where, i)));
      return out;
    }
    if (!v.is_string()) throw FormatError("expected a number, a list or a literal string", where);
    const std::string s = trim(v.get<std::string>());
    if (s.rfind("file:", 0) == 0) return literal(load_file(s.substr(5), where), where);
    if (s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0) {
      throw FormatError("online resources are not supported; download the file and use file:<path>", where);
    }
    try {
      return parse_py_literal(s);
    } catch (const FormatError& e) {
      rethrow_at(e, where);
    }
  }

  json load_file(const std::string& ref, const std::string& where) {
    const std::string rel = trim(ref);
    if (rel.rfind("http://", 0) == 0 || rel.rfind("https://", 0) == 0) {
      throw FormatError("online resources are not supported", where);
    }
    if (rel.empty()) throw FormatError("empty file reference", where);
    const fs::path path = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read '" + path.string() + "'", where);
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what(), where);
    }
  }

  Tensor tensor(const json& v, const std::string& where) {
    auto lit = literal(v, where);
    try {
      return literal_to_tensor(lit);
    } catch (const std::exception& e) {
      rethrow_at(e, where);
    }
  }

  double number(const json& v, const std::string& where) {
    auto lit = literal(v, where);
    if (lit.is_sequence()) throw FormatError("expected a number", where);
    if (!std::isfinite(lit.number)) throw FormatError("number must be finite", where);
    return lit.number;
  }

  std::size_t count(const json& v, const std::string& where) {
    const double d = number(v, where);
    if (d < 0 || d != std::floor(d) || d > 1e15) throw FormatError("expected a non-negative integer", where);
    return static_cast<std::size_t>(d);
  }

  std::vector<std::size_t> counts(const json& v, const std::string& where) {
    auto lit = literal(v, where);
    std::vector<std::size_t> out;
    auto one = [&](const PyLiteral& x) {
      if (x.is_sequence() || x.number < 0 || x.number != std::floor(x.number)) {
        throw FormatError("expected non-negative integers", where);
      }
      out.push_back(static_cast<std::size_t>(x.number));
    };
    if (lit.is_sequence()) {
      for (const auto& x : lit.items) one(x);
    } else {
      one(lit);
    }
    return out;
  }

  Shape shape(const json& v, const std::string& where) {
    auto dims = counts(v, where);
    if (dims.empty()) throw FormatError("shape must not be empty", where);
    for (auto d : dims) {
      if (d == 0) throw FormatError("shape dimensions must be positive", where);
    }
    return dims;
  }

  std::vector<nn::Bound> bounds(const json& v, const std::string& where) {
    auto lit = literal(v, where);
    if (!lit.is_sequence() || lit.items.empty()) throw FormatError("expected a list of (lower, upper) pairs", where);
    std::vector<nn::Bound> out;
    for (const auto& pair : lit.items) {
      if (!pair.is_sequence() || pair.items.size() != 2 || pair.items[0].is_sequence() ||
          pair.items[1].is_sequence()) {
        throw FormatError("expected a list of (lower, upper) pairs", where);
      }
      out.push_back({pair.items[0].number, pair.items[1].number});
    }
    return out;
  }

  std::string string(const json& v, const std::string& where) {
    if (!v.is_string()) throw FormatError("expected a string", where);
    return v.get<std::string>();
  }

  // -------------------------------------------------------------------------

  nn::ConvStage stage(const json& layer, const std::string& where, const std::string& suffix) {
    nn::ConvStage s;
    s.filters = tensor(require(layer, "filters" + suffix, where), at(where, "filters" + suffix));
    s.bias = tensor(require(layer, "bias" + suffix, where), at(where, "bias" + suffix));
    if (auto it = layer.find("stride" + suffix); it != layer.end()) s.stride = count(*it, at(where, "stride" + suffix));
    if (auto it = layer.find("padding" + suffix); it != layer.end()) {
      s.padding = count(*it, at(where, "padding" + suffix));
    }
    return s;
  }

  nn::Layer layer(const json& obj, const std::string& where) {
    using nn::LayerKind;
    if (!obj.is_object()) throw FormatError("expected a layer object", where);
    nn::Layer out;
    try {
      out.kind = nn::layer_kind_from_name(string(require(obj, "type", where), at(where, "type")));
    } catch (const FormatError& e) {
      if (!e.location().empty()) throw;
      rethrow_at(e, at(where, "type"));
    }

    auto activation = [&]() -> std::optional<numeric::Activation> {
      auto it = obj.find("func");
      if (it == obj.end()) return std::nullopt;
      try {
        return numeric::activation_from_name(string(*it, at(where, "func")));
      } catch (const FormatError& e) {
        if (!e.location().empty()) throw;
        rethrow_at(e, at(where, "func"));
      }
    };
    auto no_func = [&] {
      if (obj.contains("func")) {
        throw FormatError(std::string(nn::layer_kind_name(out.kind)) + " layers take no activation function",
                          at(where, "func"));
      }
    };

    switch (out.kind) {
      case LayerKind::Linear: {
        nn::LinearParams p;
        p.weights = tensor(require(obj, "weights", where), at(where, "weights"));
        p.bias = tensor(require(obj, "bias", where), at(where, "bias"));
        p.func = activation();
        warn_unknown(obj, where, {"type", "weights", "bias", "func"});
        out.params = std::move(p);
        break;
      }
      case LayerKind::MaxPool1d:
      case LayerKind::MaxPool2d:
      case LayerKind::MaxPool3d: {
        no_func();
        nn::MaxPoolParams p;
        p.dims = out.kind == LayerKind::MaxPool1d ? 1 : out.kind == LayerKind::MaxPool2d ? 2 : 3;
        p.stride = count(require(obj, "stride", where), at(where, "stride"));
        if (auto it = obj.find("padding"); it != obj.end()) p.padding = count(*it, at(where, "padding"));
        warn_unknown(obj, where, {"type", "stride", "padding"});
        out.params = p;
        break;
      }
      case LayerKind::Conv1d:
      case LayerKind::Conv2d:
      case LayerKind::Conv3d: {
        no_func();
        out.params = nn::ConvParams{stage(obj, where, "")};
        warn_unknown(obj, where, {"type", "filters", "bias", "stride", "padding"});
        break;
      }
      case LayerKind::ResNet2l:
      case LayerKind::ResNet3l: {
        no_func();
        const std::size_t n = out.kind == LayerKind::ResNet2l ? 2 : 3;
        nn::ResNetParams p;
        std::set<std::string> known{"type"};
        for (std::size_t i = 1; i <= n + 1; ++i) {
          const std::string k = std::to_string(i);
          for (const char* base : {"filters", "bias", "stride", "padding"}) known.insert(base + k);
          if (i <= n) {
            p.stages.push_back(stage(obj, where, k));
          } else if (obj.contains("filters" + k) || obj.contains("bias" + k)) {
            p.shortcut = stage(obj, where, k);
          }
        }
        for (const auto& [key, value] : obj.items()) {
          if (!known.count(key)) warnings.push_back(at(where, key) + ": unknown key ignored");
        }
        out.params = std::move(p);
        break;
      }
      case LayerKind::RNN:
      case LayerKind::LSTM: {
        nn::RecurrentParams p;
        p.weights = tensor(require(obj, "weights", where), at(where, "weights"));
        p.bias = tensor(require(obj, "bias", where), at(where, "bias"));
        p.h0 = tensor(require(obj, "h0", where), at(where, "h0"));
        if (out.kind == LayerKind::LSTM) {
          no_func();
          p.c0 = tensor(require(obj, "c0", where), at(where, "c0"));
          warn_unknown(obj, where, {"type", "weights", "bias", "h0", "c0"});
        } else {
          if (auto f = activation()) p.func = *f;
          warn_unknown(obj, where, {"type", "weights", "bias", "h0", "func"});
        }
        out.params = std::move(p);
        break;
      }
      case LayerKind::GRU: {
        no_func();
        nn::RecurrentParams p;
        p.weights = tensor(require(obj, "weights1", where), at(where, "weights1"));
        p.bias = tensor(require(obj, "bias1", where), at(where, "bias1"));
        p.weights2 = tensor(require(obj, "weights2", where), at(where, "weights2"));
        p.bias2 = tensor(require(obj, "bias2", where), at(where, "bias2"));
        p.h0 = tensor(require(obj, "h0", where), at(where, "h0"));
        if (auto it = obj.find("c0"); it != obj.end()) p.c0 = tensor(*it, at(where, "c0"));
        warn_unknown(obj, where, {"type", "weights1", "bias1", "weights2", "bias2", "h0", "c0"});
        out.params = std::move(p);
        break;
      }
      case LayerKind::Function: {
        nn::FunctionParams p;
        try {
          p.func = nn::function_kind_from_name(string(require(obj, "func", where), at(where, "func")));
        } catch (const FormatError& e) {
          if (!e.location().empty()) throw;
          rethrow_at(e, at(where, "func"));
        }
        if (p.func == nn::FunctionKind::Reshape) {
          p.new_shape = shape(require(obj, "newshape", where), at(where, "newshape"));
          warn_unknown(obj, where, {"type", "func", "newshape"});
        } else if (p.func == nn::FunctionKind::Transpose) {
          p.axes = counts(require(obj, "axes", where), at(where, "axes"));
          warn_unknown(obj, where, {"type", "func", "axes"});
        } else {
          warn_unknown(obj, where, {"type", "func"});
        }
        out.params = std::move(p);
        break;
      }
    }
    return out;
  }

  nn::Network network(const json& model_in, const std::string& where) {
    json model = model_in;
    if (auto it = model_in.find("path"); it != model_in.end()) {
      // A converted model file; keys given inline take precedence.
      const std::string ref = string(*it, at(where, "path"));
      std::string rel = trim(ref.rfind("file:", 0) == 0 ? ref.substr(5) : ref);
      if (lower(fs::path(rel).extension().string()) != ".json") {
        throw FormatError("only converted JSON models can be loaded; convert '" + rel + "' first",
                          at(where, "path"));
      }
      json loaded = load_file(rel, at(where, "path"));
      if (!loaded.is_object()) throw FormatError("model file must hold a JSON object", at(where, "path"));
      if (loaded.contains("model") && loaded["model"].is_object()) loaded = loaded["model"];
      for (const auto& [key, value] : model_in.items()) {
        if (key != "path") loaded[key] = value;
      }
      model = std::move(loaded);
    }
    nn::Network net;
    net.input_shape = shape(require(model, "shape", where), at(where, "shape"));
    net.bounds = bounds(require(model, "bounds", where), at(where, "bounds"));
    const auto& layers = require(model, "layers", where);
    if (!layers.is_array()) throw FormatError("expected a list of layers", at(where, "layers"));
    for (std::size_t i = 0; i < layers.size(); ++i) {
      net.layers.push_back(layer(layers[i], at(at(where, "layers"), i)));
    }
    warn_unknown(model_in, where, {"shape", "bounds", "layers", "path"});
    return net;
  }

  // -------------------------------------------------------------------------

  std::map<std::string, logic::Affine> affine_maps(const json& v, const std::string& where) {
    if (!v.is_object()) throw FormatError("expected an object of linear maps", where);
    std::map<std::string, logic::Affine> out;
    for (const auto& [name, f] : v.items()) {
      const std::string w = at(where, name);
      if (!f.is_object()) throw FormatError("expected {\"w\": ..., \"b\": ...}", w);
      logic::Affine a;
      a.weights = tensor(require(f, "w", w), at(w, "w"));
      a.bias = tensor(require(f, "b", w), at(w, "b"));
      if (a.weights.rank() != 2) throw FormatError("weights must be a matrix", at(w, "w"));
      if (a.bias.size() != a.weights.shape()[1]) {
        throw FormatError("bias length " + std::to_string(a.bias.size()) + " != weights columns " +
                              std::to_string(a.weights.shape()[1]),
                          at(w, "b"));
      }
      a.bias = a.bias.flattened();
      warn_unknown(f, w, {"w", "b"});
      out.emplace(name, std::move(a));
    }
    return out;
  }

  std::optional<logic::Template> sugar(const json& a, const std::string& where, std::size_t features) {
    using logic::TemplateKind;
    const bool has_fairness = a.contains("fairness");
    const bool has_x0 = a.contains("x0");
    std::string robustness;
    if (auto it = a.find("robustness"); it != a.end()) {
      robustness = lower(trim(string(*it, at(where, "robustness"))));
      if (robustness != "local" && robustness != "global") {
        throw FormatError("robustness must be \"local\" or \"global\"", at(where, "robustness"));
      }
    }
    if (robustness.empty() && !has_fairness) throw FormatError("expected pre/post or a template", where);

    logic::Template t;
    if (has_fairness) {
      if (robustness == "global" && has_x0) {
        throw FormatError("global fairness takes no x0", at(where, "x0"));
      }
      if (robustness == "local" && !has_x0) throw FormatError("missing mandatory key 'x0'", where);
      t.kind = has_x0 ? TemplateKind::LocalFairness : TemplateKind::GlobalFairness;
      t.sensitive = counts(a["fairness"], at(where, "fairness"));
    } else {
      t.kind = robustness == "local" ? TemplateKind::LocalRobustness : TemplateKind::GlobalRobustness;
      if (t.kind == TemplateKind::LocalRobustness && !has_x0) throw FormatError("missing mandatory key 'x0'", where);
      if (t.kind == TemplateKind::GlobalRobustness && has_x0) {
        throw FormatError("global robustness takes no x0", at(where, "x0"));
      }
      const auto& d = require(a, "distance", where);
      try {
        t.distance = numeric::distance_from_name(trim(string(d, at(where, "distance"))));
      } catch (const FormatError& e) {
        if (!e.location().empty()) throw;
        rethrow_at(e, at(where, "distance"));
      }
      t.eps = number(require(a, "eps", where), at(where, "eps"));
      if (t.eps < 0) throw FormatError("eps must be non-negative", at(where, "eps"));
    }
    if (has_x0) {
      t.x0 = tensor(a["x0"], at(where, "x0")).flattened();
      if (t.x0->size() != features) {
        throw FormatError("x0 has " + std::to_string(t.x0->size()) + " entries, model has " +
                              std::to_string(features) + " features",
                          at(where, "x0"));
      }
    }
    if (has_fairness) {
      for (auto i : t.sensitive) {
        if (i >= features) {
          throw FormatError("sensitive feature " + std::to_string(i) + " out of range", at(where, "fairness"));
        }
      }
    }
    warn_unknown(a, where, {"robustness", "x0", "distance", "eps", "fairness"});
    return t;
  }

  SolverConfig solver(const json& s, const std::string& where) {
    SolverConfig out;
    out.algorithm = lower(trim(string(require(s, "algorithm", where), at(where, "algorithm"))));
    static const std::set<std::string> optimize_keys{"restarts", "timeout", "seed", "k",
                                                     "max_iterations", "gtol", "ftol", "memory", "workers"};
    static const std::set<std::string> sprt_keys{"theta", "alpha", "beta",  "delta",
                                                 "max_samples", "max_rejections", "seed", "timeout"};
    const std::set<std::string>* known = nullptr;
    if (out.algorithm == "optimize") {
      known = &optimize_keys;
    } else if (out.algorithm == "sprt") {
      known = &sprt_keys;
    } else {
      throw FormatError("unknown engine '" + out.algorithm + "' (expected optimize or sprt)", at(where, "algorithm"));
    }
    for (const auto& [key, value] : s.items()) {
      if (key == "algorithm") continue;
      if (!known->count(key)) {
        warnings.push_back(at(where, key) + ": unknown key ignored");
        continue;
      }
      out.params[key] = number(value, at(where, key));
    }
    return out;
  }

  DisplayConfig display(const json& d, const std::string& where) {
    if (!d.is_object()) throw FormatError("expected an object", where);
    DisplayConfig out;
    if (auto it = d.find("resolution"); it != d.end()) out.resolution = shape(*it, at(where, "resolution"));
    if (auto it = d.find("path"); it != d.end()) out.path = string(*it, at(where, "path"));
    warn_unknown(d, where, {"resolution", "path"});
    return out;
  }
};

}  // namespace

IllFormedNetwork::IllFormedNetwork(std::vector<WellformednessIssue> issues)
    : FormatError(
          [&] {
            std::string msg = "ill-formed network:";
            for (const auto& i : issues) {
              msg += "\n  ";
              msg += i.layer == WellformednessIssue::kNetwork ? "model" : "model.layers[" + std::to_string(i.layer) + "]";
              msg += ": " + i.message;
            }
            return msg;
          }(),
          "model"),
      issues_(std::move(issues)) {}

VerificationTask parse_task(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("task must be a JSON object");

  Reader r{base_dir, {}};
  VerificationTask task;
  task.network = r.network(Reader::require_object(doc, "model", ""), "model");
  if (auto issues = check_wellformed(task.network); !issues.empty()) throw IllFormedNetwork(std::move(issues));

  const auto& a = Reader::require_object(doc, "assert", "");
  if (a.contains("pre") || a.contains("post")) {
    for (const char* k : {"robustness", "x0", "distance", "eps", "fairness"}) {
      if (a.contains(k)) throw FormatError("cannot mix pre/post with template keys", std::string("assert.") + k);
    }
    std::map<std::string, logic::Affine> affine;
    if (auto it = a.find("lin"); it != a.end()) affine = r.affine_maps(*it, "assert.lin");
    const auto pre = r.string(Reader::require(a, "pre", "assert"), "assert.pre");
    const auto post = r.string(Reader::require(a, "post", "assert"), "assert.post");
    try {
      task.assertion = logic::parse_assertion(pre, post, std::move(affine));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), "assert");
    }
    r.warn_unknown(a, "assert", {"pre", "post", "lin"});
  } else {
    task.sugar = r.sugar(a, "assert", task.network.feature_count());
    try {
      task.assertion = logic::expand_template(*task.sugar, task.network);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), "assert");
    }
  }

  task.solver = r.solver(Reader::require_object(doc, "solver", ""), "solver");
  if (auto it = doc.find("display"); it != doc.end()) task.display = r.display(*it, "display");
  r.warn_unknown(doc, "", {"model", "assert", "solver", "display"});
  task.warnings = std::move(r.warnings);
  return task;
}

VerificationTask load_task(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot read task file '" + file.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_task(text.str(), file.parent_path());
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

json tensor_json(const Tensor& t) {
  if (t.rank() == 0) return t.item();
  std::size_t pos = 0;
  auto build = [&](auto&& self, std::size_t depth) -> json {
    json arr = json::array();
    for (std::size_t i = 0; i < t.shape()[depth]; ++i) {
      if (depth + 1 == t.rank()) {
        arr.push_back(t[pos++]);
      } else {
        arr.push_back(self(self, depth + 1));
      }
    }
    return arr;
  };
  return build(build, 0);
}

std::string tuple_string(const std::vector<std::size_t>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + ")";
}

void stage_json(json& out, const nn::ConvStage& s, const std::string& suffix) {
  out["filters" + suffix] = tensor_json(s.filters);
  out["bias" + suffix] = tensor_json(s.bias);
  out["stride" + suffix] = s.stride;
  out["padding" + suffix] = s.padding;
}

json layer_json(const nn::Layer& layer) {
  json out;
  out["type"] = std::string(nn::layer_kind_name(layer.kind));
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, nn::LinearParams>) {
          out["weights"] = tensor_json(p.weights);
          out["bias"] = tensor_json(p.bias);
          if (p.func) out["func"] = std::string(numeric::activation_name(*p.func));
        } else if constexpr (std::is_same_v<T, nn::MaxPoolParams>) {
          out["stride"] = p.stride;
          out["padding"] = p.padding;
        } else if constexpr (std::is_same_v<T, nn::ConvParams>) {
          stage_json(out, p.stage, "");
        } else if constexpr (std::is_same_v<T, nn::ResNetParams>) {
          for (std::size_t i = 0; i < p.stages.size(); ++i) stage_json(out, p.stages[i], std::to_string(i + 1));
          if (p.shortcut) stage_json(out, *p.shortcut, std::to_string(p.stages.size() + 1));
        } else if constexpr (std::is_same_v<T, nn::RecurrentParams>) {
          if (layer.kind == nn::LayerKind::GRU) {
            out["weights1"] = tensor_json(p.weights);
            out["bias1"] = tensor_json(p.bias);
            out["weights2"] = tensor_json(p.weights2);
            out["bias2"] = tensor_json(p.bias2);
          } else {
            out["weights"] = tensor_json(p.weights);
            out["bias"] = tensor_json(p.bias);
          }
          out["h0"] = tensor_json(p.h0);
          if (p.c0) out["c0"] = tensor_json(*p.c0);
          if (layer.kind == nn::LayerKind::RNN) out["func"] = std::string(numeric::activation_name(p.func));
        } else {
          out["func"] = std::string(nn::function_kind_name(p.func));
          if (p.func == nn::FunctionKind::Reshape) out["newshape"] = tuple_string(p.new_shape);
          if (p.func == nn::FunctionKind::Transpose) out["axes"] = tuple_string(p.axes);
        }
      },
      layer.params);
  return out;
}

}  // namespace

std::string serialize_task(const VerificationTask& task) {
  json doc;
  auto& model = doc["model"];
  model["shape"] = tuple_string(task.network.input_shape);
  json bounds = json::array();
  for (const auto& b : task.network.bounds) bounds.push_back({b.lower, b.upper});
  model["bounds"] = bounds;
  model["layers"] = json::array();
  for (const auto& l : task.network.layers) model["layers"].push_back(layer_json(l));

  auto& a = doc["assert"];
  if (task.sugar) {
    const auto& t = *task.sugar;
    using logic::TemplateKind;
    switch (t.kind) {
      case TemplateKind::LocalRobustness:
      case TemplateKind::GlobalRobustness:
        a["robustness"] = t.kind == TemplateKind::LocalRobustness ? "local" : "global";
        a["distance"] = std::string(numeric::distance_name(t.distance));
        a["eps"] = t.eps;
        break;
      case TemplateKind::LocalFairness:
        a["robustness"] = "local";
        a["fairness"] = t.sensitive;
        break;
      case TemplateKind::GlobalFairness:
        a["fairness"] = t.sensitive;
        break;
    }
    if (t.x0) a["x0"] = tensor_json(*t.x0);
  } else {
    a["pre"] = logic::to_string(task.assertion.pre);
    a["post"] = logic::to_string(task.assertion.post);
    if (!task.assertion.affine.empty()) {
      for (const auto& [name, f] : task.assertion.affine) {
        a["lin"][name] = {{"w", tensor_json(f.weights)}, {"b", tensor_json(f.bias)}};
      }
    }
  }

  auto& s = doc["solver"];
  s["algorithm"] = task.solver.algorithm;
  for (const auto& [k, v] : task.solver.params) s[k] = v;

  if (task.display.resolution || task.display.path) {
    auto& d = doc["display"];
    if (task.display.resolution) d["resolution"] = tuple_string(*task.display.resolution);
    if (task.display.path) d["path"] = *task.display.path;
  }
  return doc.dump(2);
}

}  // namespace socrates::task
