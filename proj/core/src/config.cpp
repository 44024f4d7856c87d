#include "mfmo/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace mfmo::config {

using nlohmann::json;

namespace {

enum class Kind { Integer, Number, Boolean, String, NullableString };

struct Field {
  std::vector<std::string> path;  // object keys from the root
  Kind kind;
  std::string description;
  std::optional<double> minimum;
  std::optional<double> maximum;
  std::vector<std::string> choices;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

std::string pointer_of(const std::vector<std::string>& path) {
  std::string p;
  for (const auto& k : path) p += "/" + k;
  return p.empty() ? "/" : p;
}

#define MFMO_UINT(expr)                                                               \
  [](RunConfig& c, const json& v) { expr = v.get<std::size_t>(); },                   \
      [](const RunConfig& c) { return json(expr); }
#define MFMO_INT(expr)                                                                \
  [](RunConfig& c, const json& v) { expr = v.get<int>(); }, [](const RunConfig& c) { return json(expr); }
#define MFMO_NUM(expr)                                                                \
  [](RunConfig& c, const json& v) { expr = v.get<double>(); }, [](const RunConfig& c) { return json(expr); }
#define MFMO_BOOL(expr)                                                               \
  [](RunConfig& c, const json& v) { expr = v.get<bool>(); }, [](const RunConfig& c) { return json(expr); }
#define MFMO_I64(expr)                                                                \
  [](RunConfig& c, const json& v) { expr = v.get<std::int64_t>(); }, [](const RunConfig& c) { return json(expr); }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    const auto big = static_cast<double>(std::numeric_limits<std::int32_t>::max());
    // Root.
    f.push_back({{"problem"}, Kind::String, "Registered problem name (mf-zdt1, mf-zdt2, mf-zdt3, nas-unet)", {}, {}, {},
                 [](RunConfig& c, const json& v) { c.problem = v.get<std::string>(); },
                 [](const RunConfig& c) { return json(c.problem); }});
    f.push_back({{"dimension"}, Kind::Integer, "Design dimensionality for box problems; 0 keeps the default", 0.0,
                 big, {}, MFMO_UINT(c.dimension)});
    f.push_back({{"encoding"}, Kind::String, "Search-space encoding", {}, {}, {"continuous", "discrete"},
                 [](RunConfig& c, const json& v) { c.encoding = nas::encoding_from_string(v.get<std::string>()); },
                 [](const RunConfig& c) { return json(nas::to_string(c.encoding)); }});
    f.push_back({{"discrete_levels"}, Kind::Integer,
                 "Levels per integer gene when a box problem runs under the discrete encoding", 2.0, 1000.0, {},
                 MFMO_UINT(c.discrete_levels)});
    f.push_back({{"seed"}, Kind::Integer, "Master seed", 0.0, {}, {},
                 [](RunConfig& c, const json& v) { c.optimizer.seed = v.get<std::uint64_t>(); },
                 [](const RunConfig& c) { return json(c.optimizer.seed); }});
    f.push_back({{"mode"}, Kind::String, "full, hf-only (plain Kriging on HF) or lf-only (rescored at HF)", {}, {},
                 {"full", "hf-only", "lf-only"},
                 [](RunConfig& c, const json& v) { c.optimizer.mode = opt::mode_from_string(v.get<std::string>()); },
                 [](const RunConfig& c) { return json(opt::to_string(c.optimizer.mode)); }});
    // Optimizer.
    f.push_back({{"optimizer", "nfe_max_hf"}, Kind::Integer, "HF evaluation budget including the initial design",
                 1.0, big, {}, MFMO_UINT(c.optimizer.nfe_max_hf)});
    f.push_back({{"optimizer", "n_s_hf"}, Kind::Integer, "Initial HF samples", 1.0, big, {},
                 MFMO_UINT(c.optimizer.n_s_hf)});
    f.push_back({{"optimizer", "n_s_lf"}, Kind::Integer, "Initial LF samples (HF design is nested inside)", 1.0,
                 big, {}, MFMO_UINT(c.optimizer.n_s_lf)});
    f.push_back({{"optimizer", "n_p"}, Kind::Integer, "Parent population size", 6.0, big, {},
                 MFMO_UINT(c.optimizer.n_p)});
    f.push_back({{"optimizer", "F"}, Kind::Number, "DE scaling factor", 0.0, 2.0, {}, MFMO_NUM(c.optimizer.F)});
    f.push_back({{"optimizer", "p_c"}, Kind::Number, "DE crossover rate", 0.0, 1.0, {}, MFMO_NUM(c.optimizer.p_c)});
    f.push_back({{"optimizer", "K"}, Kind::Integer, "Local infill cluster count", 1.0, big, {},
                 MFMO_UINT(c.optimizer.K)});
    f.push_back({{"optimizer", "n_near"}, Kind::Integer, "HF neighbours of the local model (LF: twice as many)",
                 3.0, big, {}, MFMO_UINT(c.optimizer.n_near)});
    f.push_back({{"optimizer", "ei_nsga2", "pop"}, Kind::Integer, "NSGA-II population on the EI objectives", 4.0,
                 big, {}, MFMO_UINT(c.optimizer.ei_pop)});
    f.push_back({{"optimizer", "ei_nsga2", "gens"}, Kind::Integer, "NSGA-II generations on the EI objectives", 1.0,
                 big, {}, MFMO_UINT(c.optimizer.ei_gens)});
    f.push_back({{"optimizer", "repair"}, Kind::String, "Bound repair of DE mutants", {}, {}, {"reflect", "clamp"},
                 [](RunConfig& c, const json& v) { c.optimizer.repair = evo::repair_mode_from_string(v.get<std::string>()); },
                 [](const RunConfig& c) { return json(evo::to_string(c.optimizer.repair)); }});
    f.push_back({{"optimizer", "trust_region"}, Kind::Boolean,
                 "Restrict the EI search to the neighbours' bounding box", {}, {}, {}, MFMO_BOOL(c.optimizer.trust_region)});
    f.push_back({{"optimizer", "trust_region_inflation"}, Kind::Number, "Relative growth of the trust-region box",
                 0.0, 10.0, {}, MFMO_NUM(c.optimizer.trust_region_inflation)});
    f.push_back({{"optimizer", "lf_only_budget"}, Kind::Integer, "Total LF evaluations in lf-only mode", 1.0, big,
                 {}, MFMO_UINT(c.optimizer.lf_only_budget)});
    f.push_back({{"optimizer", "dedup_eps"}, Kind::Number, "Duplicate threshold (max-norm, normalized coordinates)",
                 0.0, 1.0, {}, MFMO_NUM(c.optimizer.dedup_eps)});
    f.push_back({{"optimizer", "max_stall"}, Kind::Integer, "Iterations without new designs before stopping", 1.0,
                 big, {}, MFMO_UINT(c.optimizer.max_stall)});
    // Surrogate.
    f.push_back({{"surrogate", "likelihood_pop"}, Kind::Integer, "DE population of the likelihood search", 4.0, big,
                 {}, MFMO_UINT(c.optimizer.surrogate.likelihood_pop)});
    f.push_back({{"surrogate", "likelihood_gens"}, Kind::Integer, "DE generations of the likelihood search", 1.0,
                 big, {}, MFMO_UINT(c.optimizer.surrogate.likelihood_gens)});
    f.push_back({{"surrogate", "nugget"}, Kind::Number, "Initial diagonal regularization", 0.0, 1.0, {},
                 MFMO_NUM(c.optimizer.surrogate.nugget)});
    f.push_back({{"surrogate", "nugget_max"}, Kind::Number, "Largest regularization tried before failing", 0.0, 1.0,
                 {}, MFMO_NUM(c.optimizer.surrogate.nugget_max)});
    f.push_back({{"surrogate", "standardize"}, Kind::Boolean, "Standardize outputs before fitting", {}, {}, {},
                 MFMO_BOOL(c.optimizer.surrogate.standardize)});
    f.push_back({{"surrogate", "warm_start"}, Kind::Boolean,
                 "Seed global hyperparameter searches with the previous optimum", {}, {}, {},
                 MFMO_BOOL(c.optimizer.surrogate.warm_start)});
    // Evaluator.
    f.push_back({{"evaluator", "command"}, Kind::NullableString,
                 "External evaluator command line (MFMO_EVAL_CMD overrides)", {}, {}, {},
                 [](RunConfig& c, const json& v) {
                   if (v.is_null()) {
                     c.evaluator.command.reset();
                   } else {
                     c.evaluator.command = v.get<std::string>();
                   }
                 },
                 [](const RunConfig& c) { return c.evaluator.command ? json(*c.evaluator.command) : json(nullptr); }});
    f.push_back({{"evaluator", "timeout_lf_s"}, Kind::Number, "LF request timeout in seconds", 0.0, {}, {},
                 MFMO_NUM(c.evaluator.timeout_lf_s)});
    f.push_back({{"evaluator", "timeout_hf_s"}, Kind::Number, "HF request timeout in seconds", 0.0, {}, {},
                 MFMO_NUM(c.evaluator.timeout_hf_s)});
    f.push_back({{"evaluator", "max_inflight"}, Kind::Integer, "Outstanding requests to the external process", 1.0,
                 1024.0, {}, MFMO_INT(c.evaluator.max_inflight)});
    f.push_back({{"evaluator", "cache"}, Kind::Boolean, "Serve repeated requests from memory", {}, {}, {},
                 MFMO_BOOL(c.evaluator.cache)});
    // NAS.
    f.push_back({{"nas", "input_resolution"}, Kind::Integer, "Square input size (multiple of 2^n_down)", 1.0, 65536.0,
                 {}, MFMO_I64(c.nas.input_resolution)});
    f.push_back({{"nas", "input_channels"}, Kind::Integer, "Input channels", 1.0, 4096.0, {},
                 MFMO_I64(c.nas.input_channels)});
    f.push_back({{"nas", "output_channels"}, Kind::Integer, "Output channels", 1.0, 4096.0, {},
                 MFMO_I64(c.nas.output_channels)});
    f.push_back({{"nas", "base_channels"}, Kind::Integer, "Width of the first down cell", 1.0, 4096.0, {},
                 MFMO_I64(c.nas.base_channels)});
    f.push_back({{"nas", "n_nodes"}, Kind::Integer, "Intermediate nodes per cell", 1.0, 16.0, {},
                 MFMO_INT(c.nas.encoding.n_nodes)});
    f.push_back({{"nas", "n_down"}, Kind::Integer, "Down cells", 1.0, 16.0, {}, MFMO_INT(c.nas.encoding.n_down)});
    f.push_back({{"nas", "n_up"}, Kind::Integer, "Up cells (fewer than n_down)", 0.0, 15.0, {},
                 MFMO_INT(c.nas.encoding.n_up)});
    f.push_back({{"nas", "shared"}, Kind::Boolean, "One structure for all down cells and one for all up cells", {},
                 {}, {}, MFMO_BOOL(c.nas.encoding.shared)});
    return f;
  }();
  return table;
}

#undef MFMO_UINT
#undef MFMO_INT
#undef MFMO_NUM
#undef MFMO_BOOL
#undef MFMO_I64

std::string number_text(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_value(const Field& f, const json& v) {
  const std::string ptr = pointer_of(f.path);
  auto fail = [&](const std::string& why) { throw ConfigError(ptr, why); };
  switch (f.kind) {
    case Kind::Integer:
      if (!v.is_number_integer()) fail("expected integer");
      break;
    case Kind::Number:
      if (!v.is_number()) fail("expected number");
      if (!std::isfinite(v.get<double>())) fail("must be finite");
      break;
    case Kind::Boolean:
      if (!v.is_boolean()) fail("expected boolean");
      break;
    case Kind::String:
      if (!v.is_string()) fail("expected string");
      break;
    case Kind::NullableString:
      if (!v.is_string() && !v.is_null()) fail("expected string or null");
      break;
  }
  if (v.is_number()) {
    const double d = v.get<double>();
    if (f.minimum && d < *f.minimum) fail("must be >= " + number_text(*f.minimum));
    if (f.maximum && d > *f.maximum) fail("must be <= " + number_text(*f.maximum));
  }
  if (!f.choices.empty()) {
    const auto s = v.get<std::string>();
    if (std::find(f.choices.begin(), f.choices.end(), s) == f.choices.end()) {
      std::string opts;
      for (const auto& c : f.choices) opts += (opts.empty() ? "" : ", ") + c;
      fail("'" + s + "' is not one of " + opts);
    }
  }
}

/// Rejects keys that no field (or sub-object) accounts for.
void check_unknown(const json& obj, const std::vector<std::string>& prefix) {
  if (!obj.is_object()) throw ConfigError(pointer_of(prefix), "expected object");
  for (const auto& [key, value] : obj.items()) {
    std::vector<std::string> path = prefix;
    path.push_back(key);
    bool leaf = false;
    bool branch = false;
    for (const auto& f : fields()) {
      if (f.path.size() < path.size() || !std::equal(path.begin(), path.end(), f.path.begin())) continue;
      (f.path.size() == path.size() ? leaf : branch) = true;
    }
    if (!leaf && !branch) throw ConfigError(pointer_of(path), "unknown key");
    if (branch) check_unknown(value, path);
  }
}

}  // namespace

RunConfig parse_config(const json& doc) {
  check_unknown(doc, {});
  RunConfig cfg;
  for (const auto& f : fields()) {
    const json* cur = &doc;
    bool present = true;
    for (const auto& k : f.path) {
      if (!cur->contains(k)) {
        present = false;
        break;
      }
      cur = &(*cur)[k];
    }
    if (!present) continue;
    check_value(f, *cur);
    try {
      f.set(cfg, *cur);
    } catch (const std::exception& e) {
      throw ConfigError(pointer_of(f.path), e.what());
    }
  }
  try {
    cfg.optimizer.validate();
  } catch (const Error& e) {
    throw ConfigError("/optimizer", e.what());
  }
  if (cfg.nas.encoding.n_up >= cfg.nas.encoding.n_down) throw ConfigError("/nas/n_up", "must be less than n_down");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& config) {
  json out = json::object();
  for (const auto& f : fields()) {
    json* cur = &out;
    for (std::size_t i = 0; i + 1 < f.path.size(); ++i) cur = &(*cur)[f.path[i]];
    (*cur)[f.path.back()] = f.get(config);
  }
  return out;
}

json config_schema() {
  json root{{"$schema", "https://json-schema.org/draft/2020-12/schema"},
            {"title", "mfmo run configuration"},
            {"type", "object"},
            {"additionalProperties", false},
            {"properties", json::object()}};
  const RunConfig defaults;
  for (const auto& f : fields()) {
    json* node = &root;
    for (std::size_t i = 0; i + 1 < f.path.size(); ++i) {
      json& props = (*node)["properties"];
      if (!props.contains(f.path[i])) {
        props[f.path[i]] = {{"type", "object"}, {"additionalProperties", false}, {"properties", json::object()}};
      }
      node = &props[f.path[i]];
    }
    json leaf;
    switch (f.kind) {
      case Kind::Integer: leaf["type"] = "integer"; break;
      case Kind::Number: leaf["type"] = "number"; break;
      case Kind::Boolean: leaf["type"] = "boolean"; break;
      case Kind::String: leaf["type"] = "string"; break;
      case Kind::NullableString: leaf["type"] = json::array({"string", "null"}); break;
    }
    leaf["description"] = f.description;
    if (f.minimum) leaf["minimum"] = *f.minimum;
    if (f.maximum) leaf["maximum"] = *f.maximum;
    if (!f.choices.empty()) leaf["enum"] = f.choices;
    leaf["default"] = f.get(defaults);
    (*node)["properties"][f.path.back()] = leaf;
  }
  return root;
}

Point decode_split_genes(std::span<const double> genes, std::size_t levels, const Bounds& target) {
  if (levels < 2) throw Error("discrete levels must be >= 2");
  if (genes.size() != 2 * target.size()) throw Error("split-gene vector must have twice the target dimension");
  const auto L = static_cast<double>(levels);
  const double top = L * L - 1.0;
  Point x(target.size());
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double a = std::clamp(std::floor(genes[2 * k]), 0.0, L - 1.0);
    const double b = std::clamp(std::floor(genes[2 * k + 1]), 0.0, L - 1.0);
    x[k] = target.lower(k) + (a * L + b) / top * target.width(k);
  }
  return x;
}

namespace {

class DecodingEvaluator final : public eval::Evaluator {
 public:
  DecodingEvaluator(std::shared_ptr<eval::Evaluator> inner, std::size_t levels, Bounds target)
      : inner_(std::move(inner)), levels_(levels), target_(std::move(target)) {}

  std::vector<eval::EvaluationResponse> evaluate_batch(const std::vector<eval::EvaluationRequest>& requests) override {
    auto decoded = requests;
    for (auto& r : decoded) r.x = decode_split_genes(r.x, levels_, target_);
    return inner_->evaluate_batch(decoded);
  }

 private:
  std::shared_ptr<eval::Evaluator> inner_;
  std::size_t levels_;
  Bounds target_;
};

}  // namespace

BuiltProblem build_problem(const RunConfig& config, const eval::EvaluatorRegistry& registry,
                           std::optional<std::string> env_command) {
  const std::optional<std::string> command = env_command ? env_command : config.evaluator.command;
  std::shared_ptr<eval::Evaluator> external;
  std::string chain;
  if (command) {
    eval::SubprocessOptions so;
    so.command = *command;
    so.timeout_lf = std::chrono::milliseconds(static_cast<std::int64_t>(config.evaluator.timeout_lf_s * 1000.0));
    so.timeout_hf = std::chrono::milliseconds(static_cast<std::int64_t>(config.evaluator.timeout_hf_s * 1000.0));
    so.max_inflight = config.evaluator.max_inflight;
    external = std::make_shared<eval::SubprocessEvaluator>(so);
    chain = "subprocess(" + *command + ")";
  }

  BuiltProblem out;
  if (config.problem == kNasProblem) {
    if (!external) {
      throw ConfigError("/evaluator/command", "nas-unet needs an external evaluator for the performance objective");
    }
    try {
      nas::assemble_architecture(nas::Genotype{{nas::CellGraph{nas::CellKind::Down, {nas::NodeSpec{}}}},
                                               {nas::CellGraph{nas::CellKind::Up, {nas::NodeSpec{}}}}},
                                 config.nas);
    } catch (const nas::ResolutionError& e) {
      throw ConfigError("/nas/input_resolution", e.what());
    } catch (const Error& e) {
      throw ConfigError("/nas", e.what());
    }
    const Bounds bounds = config.encoding == nas::Encoding::Continuous ? nas::continuous_schema(config.nas.encoding)
                                                                       : nas::discrete_schema(config.nas.encoding);
    auto nas_eval = std::make_shared<eval::NasEvaluator>(external, config.nas, config.encoding);
    out.problem = eval::Problem{config.problem, bounds, nas_eval};
    chain = "nas-flops(" + chain + ")";
  } else {
    eval::Problem base;
    try {
      base = registry.resolve(config.problem, eval::ProblemParams{config.dimension});
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("/problem", e.what());
    }
    std::shared_ptr<eval::Evaluator> ev = external ? external : base.evaluator;
    if (!external) chain = "builtin(" + config.problem + ")";
    Bounds bounds = base.bounds;
    if (config.encoding == nas::Encoding::Discrete) {
      const double top = static_cast<double>(config.discrete_levels) - 1e-9;
      bounds = Bounds(std::vector<double>(2 * base.bounds.size(), 0.0), std::vector<double>(2 * base.bounds.size(), top));
      ev = std::make_shared<DecodingEvaluator>(ev, config.discrete_levels, base.bounds);
      chain = "split-genes(" + chain + ")";
    }
    out.problem = eval::Problem{config.problem, bounds, ev};
  }
  if (config.evaluator.cache) {
    out.cache = std::make_shared<eval::CachingEvaluator>(out.problem.evaluator);
    out.problem.evaluator = out.cache;
    chain = "cache(" + chain + ")";
  }
  out.evaluator_description = chain;
  return out;
}

}  // namespace mfmo::config
