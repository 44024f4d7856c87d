#include "mfmo/sample_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfmo/evolution.hpp"

namespace mfmo::store {

using nlohmann::json;

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Initial: return "initial";
    case Origin::GlobalInfill: return "global_infill";
    case Origin::LocalInfill: return "local_infill";
    case Origin::Colocated: return "colocated";
  }
  return "?";
}

Origin origin_from_string(std::string_view s) {
  if (s == "initial") return Origin::Initial;
  if (s == "global_infill") return Origin::GlobalInfill;
  if (s == "local_infill") return Origin::LocalInfill;
  if (s == "colocated") return Origin::Colocated;
  throw Error("unknown record origin '" + std::string(s) + "'");
}

std::vector<Objectives> ParetoArchive::front() const {
  std::vector<Objectives> out;
  out.reserve(members.size());
  for (const auto& r : members) out.push_back(r.objectives());
  return out;
}

SampleDatabase::SampleDatabase(Bounds bounds, double dedup_eps) : bounds_(std::move(bounds)), dedup_eps_(dedup_eps) {
  if (!(dedup_eps_ >= 0.0)) throw Error("dedup_eps must be non-negative");
}

bool SampleDatabase::insert(EvaluationRecord record) {
  bounds_.check(record.x);
  if (!std::isfinite(record.f1) || !std::isfinite(record.f2)) {
    std::ostringstream os;
    os << "rejecting " << to_string(record.fidelity) << " record with non-finite objectives (" << record.f1 << ", "
       << record.f2 << ")";
    throw Error(os.str());
  }
  if (!records_.empty() && record.iteration < records_.back().iteration) {
    throw Error("record iteration " + std::to_string(record.iteration) + " precedes last stored iteration " +
                std::to_string(records_.back().iteration));
  }
  if (is_duplicate(record.x, record.fidelity)) return false;
  unit_.push_back(bounds_.normalize(record.x));
  (record.fidelity == Fidelity::HF ? hf_count_ : lf_count_) += 1;
  records_.push_back(std::move(record));
  return true;
}

const EvaluationRecord* SampleDatabase::find(std::span<const double> x, Fidelity fidelity) const {
  const Point u = bounds_.normalize(x);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].fidelity != fidelity) continue;
    const double d = chebyshev_distance(unit_[i], u);
    if (d < dedup_eps_ || d == 0.0) return &records_[i];
  }
  return nullptr;
}

bool SampleDatabase::is_duplicate(std::span<const double> x, Fidelity fidelity) const {
  return find(x, fidelity) != nullptr;
}

std::vector<EvaluationRecord> SampleDatabase::nearest(std::span<const double> center, Fidelity fidelity,
                                                      std::size_t count) const {
  if (count == 0) throw Error("nearest: count must be at least 1");
  const Point u = bounds_.normalize(center);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].fidelity == fidelity) cand.emplace_back(squared_distance(unit_[i], u), i);
  }
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  cand.resize(std::min(count, cand.size()));
  std::vector<EvaluationRecord> out;
  out.reserve(cand.size());
  for (const auto& [d, i] : cand) out.push_back(records_[i]);
  return out;
}

ParetoArchive SampleDatabase::pareto(Fidelity fidelity) const {
  const auto recs = records(fidelity);
  if (recs.empty()) throw Error("no " + std::string(to_string(fidelity)) + " records in the archive");
  std::vector<Objectives> objs;
  objs.reserve(recs.size());
  for (const auto& r : recs) objs.push_back(r.objectives());
  ParetoArchive out;
  for (std::size_t i : evo::nondominated_indices(objs)) out.members.push_back(recs[i]);
  out.crowding = evo::crowding_distance(out.front());
  return out;
}

std::vector<EvaluationRecord> SampleDatabase::records(Fidelity fidelity) const {
  std::vector<EvaluationRecord> out;
  out.reserve(count(fidelity));
  for (const auto& r : records_) {
    if (r.fidelity == fidelity) out.push_back(r);
  }
  return out;
}

Objectives SampleDatabase::minima(Fidelity fidelity) const {
  Objectives m{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& r : records_) {
    if (r.fidelity != fidelity) continue;
    m[0] = std::min(m[0], r.f1);
    m[1] = std::min(m[1], r.f2);
  }
  return m;
}

std::string SampleDatabase::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    json j;
    j["x"] = r.x;
    j["fidelity"] = std::string(to_string(r.fidelity));
    j["f1"] = r.f1;
    j["f2"] = r.f2;
    j["iteration"] = r.iteration;
    j["origin"] = std::string(to_string(r.origin));
    out += j.dump();
    out += '\n';
  }
  return out;
}

void SampleDatabase::persist(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write sample database to " + path.string());
  os << to_jsonl();
  if (!os) throw Error("failed writing sample database to " + path.string());
}

namespace {

double finite_number(const json& j, const char* key, std::size_t line) {
  if (!j.contains(key)) throw ParseError(line, std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw ParseError(line, std::string("field '") + key + "' is not a finite number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(line, std::string("field '") + key + "' is not finite");
  return d;
}

}  // namespace

SampleDatabase SampleDatabase::from_jsonl(const std::string& text, std::optional<Bounds> bounds, double dedup_eps) {
  std::vector<EvaluationRecord> parsed;
  std::vector<std::size_t> lines;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "record is not a JSON object");
    EvaluationRecord r;
    if (!j.contains("x") || !j["x"].is_array()) throw ParseError(lineno, "missing array field 'x'");
    for (const auto& v : j["x"]) {
      if (!v.is_number()) throw ParseError(lineno, "non-numeric design coordinate");
      r.x.push_back(v.get<double>());
    }
    try {
      if (!j.contains("fidelity") || !j["fidelity"].is_string()) throw Error("missing string field 'fidelity'");
      r.fidelity = fidelity_from_string(j["fidelity"].get<std::string>());
      r.origin = origin_from_string(j.value("origin", std::string("initial")));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
    r.f1 = finite_number(j, "f1", lineno);
    r.f2 = finite_number(j, "f2", lineno);
    if (j.contains("iteration")) {
      if (!j["iteration"].is_number_unsigned()) throw ParseError(lineno, "field 'iteration' must be a non-negative integer");
      r.iteration = j["iteration"].get<std::size_t>();
    }
    if (!parsed.empty() && r.x.size() != parsed.front().x.size()) {
      throw ParseError(lineno, "design dimension differs from the first record");
    }
    parsed.push_back(std::move(r));
    lines.push_back(lineno);
  }

  if (!bounds) {
    const std::size_t dim = parsed.empty() ? 0 : parsed.front().x.size();
    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (const auto& r : parsed) {
      for (std::size_t k = 0; k < dim; ++k) {
        lo[k] = std::min(lo[k], r.x[k]);
        hi[k] = std::max(hi[k], r.x[k]);
      }
    }
    bounds = Bounds(lo, hi);
  }

  SampleDatabase db(std::move(*bounds), dedup_eps);
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    try {
      db.insert(std::move(parsed[i]));
    } catch (const Error& e) {
      throw ParseError(lines[i], e.what());
    }
  }
  return db;
}

SampleDatabase SampleDatabase::load(const std::filesystem::path& path, std::optional<Bounds> bounds, double dedup_eps) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read sample database " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_jsonl(ss.str(), std::move(bounds), dedup_eps);
}

}  // namespace mfmo::store
