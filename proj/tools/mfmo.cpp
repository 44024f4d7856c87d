// mfmo: batch front end for the multi-fidelity optimizer.
//
// Exit codes: 0 ok, 1 usage, 2 configuration, 3 evaluator failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mfmo/ackmfmode.hpp"
#include "mfmo/config.hpp"
#include "mfmo/evaluator.hpp"
#include "mfmo/nas_encoding.hpp"
#include "mfmo/outputs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfmo;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kConfig = 2;
constexpr int kEvaluator = 3;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(what, "'" + item + "' is not a number");
    }
  }
  return out;
}

std::optional<std::string> env_command() {
  if (const char* c = std::getenv("MFMO_EVAL_CMD"); c && *c) return std::string(c);
  return std::nullopt;
}

config::RunConfig load_run_config(const std::string& path, const std::string& ablation) {
  config::RunConfig cfg = path.empty() ? config::parse_config(json::object()) : config::load_config(path);
  if (ablation == "hf-only") {
    cfg.optimizer.mode = opt::Mode::HfOnly;
  } else if (ablation == "lf-only") {
    cfg.optimizer.mode = opt::Mode::LfOnly;
  } else if (ablation == "discrete-encoding") {
    cfg.encoding = nas::Encoding::Discrete;
  }
  return cfg;
}

struct RunOutcome {
  opt::RunResult result;
  outputs::Artifacts artifacts;
};

RunOutcome run_one(const config::RunConfig& cfg, const fs::path& out_dir, const std::string& config_path,
                   bool quiet) {
  const std::string started = utc_now();
  auto built = config::build_problem(cfg, eval::EvaluatorRegistry::with_builtins(), env_command());
  opt::Optimizer optimizer(cfg.optimizer, built.problem.bounds, built.problem.evaluator);
  auto progress = [&](const opt::IterationReport& r) {
    if (quiet) return;
    std::fprintf(stderr, "[seed %llu] iter %3zu  hf %4zu  lf %4zu  hv %.6f%s\n",
                 static_cast<unsigned long long>(cfg.optimizer.seed), r.iteration, r.hf_count, r.lf_count,
                 r.hv_progress, r.diagnostics.empty() ? "" : ("  (" + r.diagnostics.front() + ")").c_str());
  };
  auto result = optimizer.run(progress);
  json manifest{{"config_path", config_path},
                {"output_directory", out_dir.string()},
                {"seeds", {cfg.optimizer.seed}},
                {"started", started},
                {"finished", utc_now()},
                {"artifacts", {"database.jsonl", "front.csv", "hv_trace.csv", "report.json"}}};
  if (built.cache) manifest["cache"] = {{"hits", built.cache->hits()}, {"misses", built.cache->misses()}};
  auto artifacts = outputs::write_run(out_dir, cfg, result, built.evaluator_description, {{"manifest", manifest}});
  return {std::move(result), artifacts};
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
            const std::string& ablation, bool quiet) {
  auto cfg = load_run_config(config_path, ablation);
  if (seed) cfg.optimizer.seed = *seed;
  auto outcome = run_one(cfg, out, config_path, quiet);
  const auto& r = outcome.result;
  std::printf("hf=%zu lf=%zu pareto=%zu hv=%.6f dir=%s\n", r.db.count(Fidelity::HF), r.db.count(Fidelity::LF),
              r.pareto.size(), r.trace.empty() ? 0.0 : r.trace.back().hv, out.c_str());
  if (!r.complete) {
    std::fprintf(stderr, "evaluator failure: %s (partial database written)\n", r.failure.c_str());
    return kEvaluator;
  }
  return kOk;
}

int cmd_seeds(const std::string& config_path, const std::string& out, std::size_t count, std::uint64_t first,
              const std::string& ablation, bool quiet) {
  auto cfg = load_run_config(config_path, ablation);
  std::vector<opt::RunResult> results;
  std::vector<std::uint64_t> seeds;
  bool failed = false;
  for (std::size_t i = 0; i < count; ++i) {
    cfg.optimizer.seed = first + i;
    seeds.push_back(cfg.optimizer.seed);
    auto outcome = run_one(cfg, fs::path(out) / ("seed_" + std::to_string(cfg.optimizer.seed)), config_path, quiet);
    failed = failed || !outcome.result.complete;
    results.push_back(std::move(outcome.result));
  }
  std::vector<const store::SampleDatabase*> dbs;
  for (const auto& r : results) dbs.push_back(&r.db);
  const auto norm = outputs::union_normalization(dbs);
  std::vector<double> finals;
  for (const auto& r : results) finals.push_back(outputs::final_hv(r.db, norm));

  const std::size_t first_hf = cfg.optimizer.mode == opt::Mode::LfOnly ? 0 : cfg.optimizer.n_s_hf;
  std::size_t last_hf = first_hf;
  for (const auto& r : results) last_hf = std::max(last_hf, r.db.count(Fidelity::HF));
  std::vector<std::vector<double>> curves;
  for (const auto& r : results) curves.push_back(outputs::hv_by_hf_count(r.db, norm, first_hf, last_hf));
  std::string table = "hf_count,median,std";
  for (auto s : seeds) table += ",seed_" + std::to_string(s);
  table += "\n";
  for (std::size_t k = 0; k + first_hf <= last_hf; ++k) {
    std::vector<double> col;
    for (const auto& c : curves) col.push_back(c[k]);
    table += std::to_string(first_hf + k) + "," + outputs::format_double(outputs::median(col)) + "," +
             outputs::format_double(outputs::stddev(col));
    for (double v : col) table += "," + outputs::format_double(v);
    table += "\n";
  }
  outputs::write_text(fs::path(out) / "hv_by_hf_count.csv", table);

  json per_seed = json::array();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    per_seed.push_back({{"seed", seeds[i]}, {"directory", "seed_" + std::to_string(seeds[i])}, {"hv", finals[i]}});
  }
  json summary{{"config", config::to_json(cfg)},
               {"runs", per_seed},
               {"median_hv", outputs::median(finals)},
               {"std_hv", outputs::stddev(finals)},
               {"normalization",
                outputs::normalization_json(norm, "objectives min-max normalized over the HF records of all runs in "
                                                  "this batch; hypervolume of each final normalized HF Pareto front")}};
  outputs::write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
  std::printf("runs=%zu median_hv=%.6f std_hv=%.6f dir=%s\n", count, outputs::median(finals),
              outputs::stddev(finals), out.c_str());
  return failed ? kEvaluator : kOk;
}

int cmd_decode(const std::string& vector, const std::string& encoding, const std::string& config_path) {
  const auto cfg = config_path.empty() ? config::RunConfig{} : config::load_config(config_path);
  const auto enc = encoding.empty() ? cfg.encoding : nas::encoding_from_string(encoding);
  const auto x = parse_list(vector, "--vector");
  const auto genotype = nas::decode_genotype(x, cfg.nas.encoding, enc);
  for (const auto& g : genotype.down) std::cout << nas::describe(g);
  for (const auto& g : genotype.up) std::cout << nas::describe(g);
  const auto spec = nas::assemble_architecture(genotype, cfg.nas);
  std::cout << nas::export_architecture(spec).dump(2) << "\n";
  std::cout << "FLOPs: " << nas::estimate_flops(spec).total << "\n";
  return kOk;
}

int cmd_hv(const std::string& front_path, const std::string& ref) {
  const auto r = parse_list(ref, "--ref");
  if (r.size() != 2) throw CLI::ValidationError("--ref", "expected two comma-separated numbers");
  const auto front = outputs::read_front_csv(outputs::read_text(front_path));
  const auto hv = evo::hypervolume_2d(front, {r[0], r[1]});
  std::printf("%.12g\n", hv.value);
  return kOk;
}

int cmd_front(const std::string& db_path, const std::string& out) {
  const auto db = store::SampleDatabase::load(db_path);
  const auto csv = outputs::front_csv(db.count(Fidelity::HF) ? db.hf_pareto().members
                                                              : std::vector<store::EvaluationRecord>{});
  if (out.empty()) {
    std::cout << csv;
  } else {
    outputs::write_text(out, csv);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity multi-objective optimizer"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-config-schema", print_schema, "Print the JSON schema of run configurations");

  std::string config_path, out_dir = "mfmo_out", ablation;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run one optimization");
  run->add_option("-c,--config", config_path, "Run configuration (JSON)");
  run->add_option("-o,--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the configured seed");
  run->add_option("--ablation", ablation, "Ablation protocol")
      ->check(CLI::IsMember({"hf-only", "lf-only", "discrete-encoding"}));
  run->add_flag("-q,--quiet", quiet, "No per-iteration progress lines");

  std::size_t count = 10;
  std::uint64_t first_seed = 0;
  auto* seeds = app.add_subcommand("seeds", "Run several seeds and summarize normalized HV");
  seeds->add_option("-c,--config", config_path, "Run configuration (JSON)");
  seeds->add_option("-o,--out", out_dir, "Output directory");
  seeds->add_option("--count", count, "Number of seeds")->required()->check(CLI::PositiveNumber);
  seeds->add_option("--first-seed", first_seed, "First seed");
  seeds->add_option("--ablation", ablation, "Ablation protocol")
      ->check(CLI::IsMember({"hf-only", "lf-only", "discrete-encoding"}));
  seeds->add_flag("-q,--quiet", quiet, "No per-iteration progress lines");

  std::string vector, encoding;
  auto* decode = app.add_subcommand("decode", "Decode a design vector into a U-Net architecture");
  decode->add_option("--vector", vector, "Comma-separated design vector")->required();
  decode->add_option("--encoding", encoding, "continuous or discrete")
      ->check(CLI::IsMember({"continuous", "discrete"}));
  decode->add_option("-c,--config", config_path, "Configuration supplying the nas section");

  std::string front_path, ref;
  auto* hv = app.add_subcommand("hv", "Hypervolume of a front CSV");
  hv->add_option("--front", front_path, "CSV whose first two columns are f1,f2")->required();
  hv->add_option("--ref", ref, "Reference point a,b")->required();

  std::string db_path, front_out;
  auto* front = app.add_subcommand("front", "Extract the HF Pareto front of a database");
  front->add_option("--db", db_path, "Database (JSON lines)")->required();
  front->add_option("-o,--out", front_out, "Write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (print_schema) {
      std::cout << config::config_schema().dump(2) << "\n";
      return kOk;
    }
    if (run->parsed()) return cmd_run(config_path, out_dir, seed, ablation, quiet);
    if (seeds->parsed()) return cmd_seeds(config_path, out_dir, count, first_seed, ablation, quiet);
    if (decode->parsed()) return cmd_decode(vector, encoding, config_path);
    if (hv->parsed()) return cmd_hv(front_path, ref);
    if (front->parsed()) return cmd_front(db_path, front_out);
    std::cerr << app.help();
    return kUsage;
  } catch (const config::ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return kConfig;
  } catch (const opt::EvaluatorFailure& e) {
    std::cerr << "evaluator failure: " << e.what() << "\n";
    return kEvaluator;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}
