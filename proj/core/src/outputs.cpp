#include "mfmo/outputs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mfmo::outputs {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string front_csv(const std::vector<store::EvaluationRecord>& pareto) {
  std::vector<const store::EvaluationRecord*> rows;
  for (const auto& r : pareto) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return a->f1 != b->f1 ? a->f1 < b->f1 : a->f2 < b->f2;
  });
  std::string out = "f1,f2";
  const std::size_t dim = pareto.empty() ? 0 : pareto.front().x.size();
  for (std::size_t k = 0; k < dim; ++k) out += ",x" + std::to_string(k + 1);
  out += '\n';
  for (const auto* r : rows) {
    out += format_double(r->f1) + "," + format_double(r->f2);
    for (double v : r->x) out += "," + format_double(v);
    out += '\n';
  }
  return out;
}

std::vector<Objectives> read_front_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Objectives> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("f1", 0) == 0) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',')) {
      throw Error("front CSV line " + std::to_string(lineno) + ": expected at least two columns");
    }
    try {
      std::size_t pa = 0, pb = 0;
      const double f1 = std::stod(a, &pa);
      const double f2 = std::stod(b, &pb);
      if (pa != a.size() || pb != b.size()) throw std::invalid_argument("trailing characters");
      out.push_back({f1, f2});
    } catch (const std::exception&) {
      throw Error("front CSV line " + std::to_string(lineno) + ": non-numeric objective");
    }
  }
  return out;
}

std::string trace_csv(const std::vector<opt::HvTracePoint>& trace) {
  std::string out = "iteration,hf_count,hv\n";
  for (const auto& p : trace) {
    out += std::to_string(p.iteration) + "," + std::to_string(p.hf_count) + "," + format_double(p.hv) + "\n";
  }
  return out;
}

json normalization_json(const evo::Normalization& norm, const std::string& recipe, const Objectives& reference) {
  return {{"recipe", recipe},
          {"min", {norm.min[0], norm.min[1]}},
          {"max", {norm.max[0], norm.max[1]}},
          {"reference", {reference[0], reference[1]}}};
}

json run_report(const config::RunConfig& config, const opt::RunResult& result,
                const std::string& evaluator_description) {
  json iterations = json::array();
  for (const auto& it : result.iterations) {
    json j{{"iteration", it.iteration},
           {"hf_count", it.hf_count},
           {"lf_count", it.lf_count},
           {"hv", it.hv},
           {"global_infill", it.global_infill ? json(*it.global_infill) : json(nullptr)},
           {"local_infill", it.local_infill}};
    if (!it.diagnostics.empty()) j["diagnostics"] = it.diagnostics;
    iterations.push_back(std::move(j));
  }
  return {{"config", config::to_json(config)},
          {"evaluator", evaluator_description},
          {"seed", config.optimizer.seed},
          {"complete", result.complete},
          {"failure", result.failure.empty() ? json(nullptr) : json(result.failure)},
          {"hf_evaluations", result.db.count(Fidelity::HF)},
          {"lf_evaluations", result.db.count(Fidelity::LF)},
          {"pareto_size", result.pareto.size()},
          {"final_hv", result.trace.empty() ? 0.0 : result.trace.back().hv},
          {"normalization",
           normalization_json(result.normalization,
                              "objectives min-max normalized over all HF records of this run; "
                              "hypervolume of the normalized HF Pareto front against the reference point")},
          {"wall_seconds", result.wall_seconds},
          {"iterations", iterations}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Artifacts write_run(const std::filesystem::path& dir, const config::RunConfig& config, const opt::RunResult& result,
                    const std::string& evaluator_description, const json& extra) {
  std::filesystem::create_directories(dir);
  Artifacts a{dir / "database.jsonl", dir / "front.csv", dir / "hv_trace.csv", dir / "report.json"};
  result.db.persist(a.database);
  write_text(a.front, front_csv(result.pareto));
  write_text(a.trace, trace_csv(result.trace));
  json report = run_report(config, result, evaluator_description);
  for (const auto& [k, v] : extra.items()) report[k] = v;
  write_text(a.report, report.dump(2) + "\n");
  return a;
}

evo::Normalization union_normalization(const std::vector<const store::SampleDatabase*>& dbs) {
  std::vector<Objectives> all;
  for (const auto* db : dbs) {
    for (const auto& r : db->records(Fidelity::HF)) all.push_back(r.objectives());
  }
  if (all.empty()) return {};
  return evo::Normalization::from_points(all);
}

double final_hv(const store::SampleDatabase& db, const evo::Normalization& norm, const Objectives& reference) {
  if (db.count(Fidelity::HF) == 0) return 0.0;
  return evo::normalized_hypervolume(db.hf_pareto().front(), norm, reference);
}

std::vector<double> hv_by_hf_count(const store::SampleDatabase& db, const evo::Normalization& norm,
                                   std::size_t first, std::size_t last) {
  const auto trace = opt::hv_trace(db, norm);
  std::vector<double> out;
  for (std::size_t n = first; n <= last; ++n) {
    double v = 0.0;
    for (const auto& p : trace) {
      if (p.hf_count <= n) v = p.hv;
    }
    out.push_back(v);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double stddev(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace mfmo::outputs
