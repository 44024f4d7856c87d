#include "mfmo/evaluator.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <deque>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "mfmo/problems.hpp"

namespace mfmo::eval {

using Clock = std::chrono::steady_clock;

EvaluationResponse EvaluationResponse::success(std::string id, Objectives f) {
  EvaluationResponse r;
  r.id = std::move(id);
  r.ok = true;
  r.f1 = f[0];
  r.f2 = f[1];
  return r;
}

EvaluationResponse EvaluationResponse::failure(std::string id, std::string message) {
  EvaluationResponse r;
  r.id = std::move(id);
  r.message = std::move(message);
  return r;
}

std::vector<EvaluationResponse> FunctionEvaluator::evaluate_batch(const std::vector<EvaluationRequest>& requests) {
  std::vector<EvaluationResponse> out;
  out.reserve(requests.size());
  for (const auto& req : requests) {
    try {
      const Objectives f = fn_(req.x, req.fidelity);
      if (!std::isfinite(f[0]) || !std::isfinite(f[1])) {
        out.push_back(EvaluationResponse::failure(req.id, "non-finite objective"));
      } else {
        out.push_back(EvaluationResponse::success(req.id, f));
      }
    } catch (const std::exception& e) {
      out.push_back(EvaluationResponse::failure(req.id, e.what()));
    }
  }
  return out;
}

std::string cache_key(Fidelity fidelity, std::span<const double> x) {
  std::string key(to_string(fidelity));
  char buf[64];
  for (double v : x) {
    double r = std::round(v * 1e12) / 1e12;
    if (r == 0.0) r = 0.0;  // fold -0
    std::snprintf(buf, sizeof buf, ",%.12f", r);
    key += buf;
  }
  return key;
}

std::vector<EvaluationResponse> CachingEvaluator::evaluate_batch(const std::vector<EvaluationRequest>& requests) {
  std::vector<std::string> keys;
  keys.reserve(requests.size());
  std::vector<EvaluationRequest> misses;
  std::map<std::string, std::size_t> pending;  // key -> index into misses
  for (const auto& req : requests) {
    keys.push_back(cache_key(req.fidelity, req.x));
    if (!cache_.contains(keys.back()) && !pending.contains(keys.back())) {
      pending[keys.back()] = misses.size();
      misses.push_back(req);
    }
  }
  std::vector<EvaluationResponse> fresh;
  if (!misses.empty()) fresh = inner_->evaluate_batch(misses);
  for (const auto& r : fresh) {
    if (r.ok) {
      const auto it = std::find_if(misses.begin(), misses.end(), [&](const auto& m) { return m.id == r.id; });
      if (it != misses.end()) cache_[cache_key(it->fidelity, it->x)] = {r.f1, r.f2};
    }
  }
  std::vector<EvaluationResponse> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto hit = cache_.find(keys[i]);
    const auto pend = pending.find(keys[i]);
    const bool first_miss = pend != pending.end() && misses[pend->second].id == requests[i].id;
    if (first_miss) {
      ++misses_;
      EvaluationResponse r = fresh[pend->second];
      r.id = requests[i].id;
      out.push_back(std::move(r));
    } else if (hit != cache_.end()) {
      ++hits_;
      out.push_back(EvaluationResponse::success(requests[i].id, hit->second));
    } else {
      // Duplicate of a failed miss in the same batch.
      EvaluationResponse r = fresh[pend->second];
      r.id = requests[i].id;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const EvaluationRequest& r) {
  nlohmann::json j{{"id", r.id}, {"fidelity", to_string(r.fidelity)}, {"x", r.x}};
  if (r.architecture) j["architecture"] = *r.architecture;
  return j;
}

EvaluationResponse response_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) throw Error("response without string id");
  const std::string id = j["id"].get<std::string>();
  const std::string status = j.value("status", "");
  if (status == "ok") {
    if (!j.contains("f1") || !j.contains("f2") || !j["f1"].is_number() || !j["f2"].is_number()) {
      return EvaluationResponse::failure(id, "ok response without numeric f1/f2");
    }
    const double f1 = j["f1"].get<double>();
    const double f2 = j["f2"].get<double>();
    if (!std::isfinite(f1) || !std::isfinite(f2)) return EvaluationResponse::failure(id, "non-finite objective");
    return EvaluationResponse::success(id, {f1, f2});
  }
  if (status == "error") return EvaluationResponse::failure(id, j.value("message", "evaluator error"));
  return EvaluationResponse::failure(id, "unknown status '" + status + "'");
}

SubprocessEvaluator::SubprocessEvaluator(SubprocessOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw Error("evaluator command is empty");
  if (options_.max_inflight < 1) throw Error("max_inflight must be >= 1");
}

SubprocessEvaluator::~SubprocessEvaluator() { stop(); }

bool SubprocessEvaluator::start(std::string* error) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    *error = "socketpair failed";
    return false;
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    *error = "fork failed";
    return false;
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", options_.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  ++launches_;
  pid_ = pid;
  to_child_ = sv[0];
  from_child_ = sv[0];
  buffer_.clear();

  std::vector<std::string> lines;
  const auto deadline = Clock::now() + options_.handshake_timeout;
  while (lines.empty()) {
    if (!read_lines(deadline, lines)) {
      *error = "evaluator exited before handshake";
      stop();
      return false;
    }
    if (lines.empty() && Clock::now() >= deadline) {
      *error = "evaluator handshake timed out";
      stop();
      return false;
    }
  }
  // Anything after the handshake line stays buffered for later reads.
  for (std::size_t i = lines.size(); i-- > 1;) buffer_.insert(0, lines[i] + "\n");
  try {
    const auto hs = nlohmann::json::parse(lines.front());
    const auto& fid = hs.at("fidelities");
    const bool has_hf = std::find(fid.begin(), fid.end(), "HF") != fid.end();
    const bool has_lf = std::find(fid.begin(), fid.end(), "LF") != fid.end();
    if (hs.at("protocol") != "mfmo-eval" || hs.at("version") != 1 || !has_hf || !has_lf) {
      throw Error("unexpected handshake");
    }
  } catch (const std::exception&) {
    *error = "bad handshake: " + lines.front();
    stop();
    return false;
  }
  return true;
}

void SubprocessEvaluator::stop() {
  if (pid_ < 0) return;
  ::shutdown(to_child_, SHUT_WR);
  ::close(to_child_);
  to_child_ = from_child_ = -1;
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, &status, 0);
  pid_ = -1;
}

bool SubprocessEvaluator::write_line(const std::string& line) {
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(to_child_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool SubprocessEvaluator::read_lines(Clock::time_point deadline, std::vector<std::string>& out) {
  auto drain = [&] {
    std::size_t pos;
    while ((pos = buffer_.find('\n')) != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) out.push_back(std::move(line));
    }
  };
  drain();
  if (!out.empty()) return true;
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) return true;
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1'000'000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (rc == 0) return true;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return false;
    }
    if (n == 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
    drain();
    if (!out.empty()) return true;
  }
}

std::vector<EvaluationResponse> SubprocessEvaluator::evaluate_batch(const std::vector<EvaluationRequest>& requests) {
  const std::size_t n = requests.size();
  std::vector<std::optional<EvaluationResponse>> results(n);
  std::vector<int> attempts(n, 0);
  std::deque<std::size_t> pending;
  for (std::size_t i = 0; i < n; ++i) pending.push_back(i);
  struct InFlight {
    std::size_t index;
    Clock::time_point deadline;
  };
  std::map<std::string, InFlight> inflight;

  auto fail_all_pending = [&](const std::string& why) {
    for (std::size_t i : pending) results[i] = EvaluationResponse::failure(requests[i].id, why);
    pending.clear();
  };
  auto ensure_running = [&]() -> bool {
    if (pid_ >= 0) return true;
    if (dead_ || launches_ >= 2) {
      dead_ = true;
      return false;
    }
    std::string err;
    if (start(&err)) return true;
    if (launches_ >= 2) dead_ = true;
    return false;
  };

  while (!pending.empty() || !inflight.empty()) {
    if (!pending.empty() && !ensure_running()) {
      fail_all_pending("evaluator process unavailable");
      continue;
    }
    bool crashed = false;
    while (!crashed && !pending.empty() && static_cast<int>(inflight.size()) < options_.max_inflight) {
      const std::size_t i = pending.front();
      pending.pop_front();
      EvaluationRequest wire = requests[i];
      if (attempts[i] > 0) wire.id += "#retry" + std::to_string(attempts[i]);
      wire.id += "@" + std::to_string(++wire_counter_);
      const auto timeout = requests[i].fidelity == Fidelity::HF ? options_.timeout_hf : options_.timeout_lf;
      inflight[wire.id] = InFlight{i, Clock::now() + timeout};
      if (!write_line(to_json(wire).dump())) crashed = true;
    }

    if (!crashed && !inflight.empty()) {
      auto deadline = Clock::time_point::max();
      for (const auto& [id, f] : inflight) deadline = std::min(deadline, f.deadline);
      std::vector<std::string> lines;
      if (!read_lines(deadline, lines)) crashed = true;
      for (const auto& line : lines) {
        try {
          const auto j = nlohmann::json::parse(line);
          EvaluationResponse r = response_from_json(j);
          const auto it = inflight.find(r.id);
          if (it == inflight.end()) continue;  // late answer to a timed-out attempt
          r.id = requests[it->second.index].id;
          results[it->second.index] = std::move(r);
          inflight.erase(it);
        } catch (const std::exception&) {
          // Malformed line: ignore; the request will time out.
        }
      }
    }

    if (crashed) {
      for (const auto& [id, f] : inflight) {
        results[f.index] = EvaluationResponse::failure(requests[f.index].id, "evaluator process exited");
      }
      inflight.clear();
      stop();
      continue;
    }

    const auto now = Clock::now();
    for (auto it = inflight.begin(); it != inflight.end();) {
      if (it->second.deadline > now) {
        ++it;
        continue;
      }
      const std::size_t i = it->second.index;
      if (attempts[i] < options_.retries) {
        ++attempts[i];
        pending.push_front(i);
      } else {
        results[i] = EvaluationResponse::failure(requests[i].id, "evaluation timed out");
      }
      it = inflight.erase(it);
    }
  }

  std::vector<EvaluationResponse> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------

NasEvaluator::NasEvaluator(std::shared_ptr<Evaluator> inner, nas::ArchitectureConfig arch, nas::Encoding encoding)
    : inner_(std::move(inner)), arch_(arch), encoding_(encoding) {
  if (!inner_) throw Error("NAS evaluator needs an inner evaluator for the performance objective");
}

std::vector<EvaluationResponse> NasEvaluator::evaluate_batch(const std::vector<EvaluationRequest>& requests) {
  std::vector<std::optional<EvaluationResponse>> results(requests.size());
  std::vector<std::int64_t> flops(requests.size(), 0);
  std::vector<EvaluationRequest> forward;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      const auto genotype = nas::decode_genotype(requests[i].x, arch_.encoding, encoding_);
      const auto spec = nas::assemble_architecture(genotype, arch_);
      flops[i] = nas::estimate_flops(spec).total;
      EvaluationRequest req = requests[i];
      req.architecture = nas::export_architecture(spec);
      forward.push_back(std::move(req));
      where.push_back(i);
    } catch (const std::exception& e) {
      results[i] = EvaluationResponse::failure(requests[i].id, e.what());
    }
  }
  if (!forward.empty()) {
    auto answers = inner_->evaluate_batch(forward);
    for (std::size_t k = 0; k < answers.size(); ++k) {
      auto r = std::move(answers[k]);
      if (r.ok) r.f2 = static_cast<double>(flops[where[k]]);
      results[where[k]] = std::move(r);
    }
  }
  std::vector<EvaluationResponse> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------

EvaluatorRegistry EvaluatorRegistry::with_builtins() {
  EvaluatorRegistry reg;
  for (auto v : {problems::ZdtVariant::ZDT1, problems::ZdtVariant::ZDT2, problems::ZdtVariant::ZDT3}) {
    reg.register_builtin(std::string(problems::to_string(v)), [v](const ProblemParams& p) {
      const auto problem = std::make_shared<problems::MfZdtProblem>(v, p.dimension == 0 ? 30 : p.dimension);
      auto fn = [problem](std::span<const double> x, Fidelity f) { return problem->evaluate(x, f); };
      return Problem{std::string(problems::to_string(v)), problem->bounds(),
                     std::make_shared<FunctionEvaluator>(fn)};
    });
  }
  return reg;
}

void EvaluatorRegistry::register_builtin(const std::string& name, Factory factory) {
  if (factories_.contains(name)) throw Error("evaluator '" + name + "' is already registered");
  factories_.emplace(name, std::move(factory));
}

Problem EvaluatorRegistry::resolve(const std::string& name, const ProblemParams& params) const {
  const auto it = factories_.find(name);
  if (it == factories_.end()) {
    std::string known;
    for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
    throw Error("unknown evaluator '" + name + "'; known: " + known);
  }
  return it->second(params);
}

std::vector<std::string> EvaluatorRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, f] : factories_) out.push_back(name);
  return out;
}

}  // namespace mfmo::eval
