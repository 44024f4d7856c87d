#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfmo/ackmfmode.hpp"
#include "mfmo/config.hpp"

/// Run artifacts: front CSV, HV-trace CSV, report JSON.
namespace mfmo::outputs {

/// Header f1,f2,x1..xn; rows sorted by (f1, f2); round-trip precision.
std::string front_csv(const std::vector<store::EvaluationRecord>& pareto);
/// Reads the f1,f2 columns of a front CSV.
std::vector<Objectives> read_front_csv(const std::string& text);

/// Header iteration,hf_count,hv.
std::string trace_csv(const std::vector<opt::HvTracePoint>& trace);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

nlohmann::json normalization_json(const evo::Normalization& norm, const std::string& recipe,
                                  const Objectives& reference = {1.1, 1.1});

nlohmann::json run_report(const config::RunConfig& config, const opt::RunResult& result,
                          const std::string& evaluator_description);

struct Artifacts {
  std::filesystem::path database;
  std::filesystem::path front;
  std::filesystem::path trace;
  std::filesystem::path report;
};

/// Writes database.jsonl, front.csv, hv_trace.csv and report.json into `dir`.
/// `extra` keys are merged into the report.
Artifacts write_run(const std::filesystem::path& dir, const config::RunConfig& config, const opt::RunResult& result,
                    const std::string& evaluator_description, const nlohmann::json& extra = nlohmann::json::object());

// ---------------------------------------------------------------------------
// Multi-run summaries

/// Min-max normalization over the HF records of every database.
evo::Normalization union_normalization(const std::vector<const store::SampleDatabase*>& dbs);

/// Normalized HV of the final HF Pareto front.
double final_hv(const store::SampleDatabase& db, const evo::Normalization& norm,
                const Objectives& reference = {1.1, 1.1});

/// HV after each HF evaluation count in [first, last]: the value of the last
/// iteration whose HF count does not exceed it (0 before the first).
std::vector<double> hv_by_hf_count(const store::SampleDatabase& db, const evo::Normalization& norm,
                                   std::size_t first, std::size_t last);

double median(std::vector<double> values);
/// Population standard deviation.
double stddev(const std::vector<double>& values);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mfmo::outputs
