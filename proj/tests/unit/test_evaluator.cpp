#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "mfmo/evaluator.hpp"

using namespace mfmo;
using namespace mfmo::eval;
using namespace std::chrono_literals;

namespace fs = std::filesystem;

namespace {

std::string mock(const std::string& args) { return std::string(MFMO_MOCK_EVALUATOR) + " " + args; }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mfmo_eval_tests";
  fs::create_directories(dir);
  const auto p = dir / name;
  fs::remove(p);
  return p;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<EvaluationRequest> zdt_requests(std::size_t n, Fidelity fid = Fidelity::HF) {
  std::vector<EvaluationRequest> out;
  for (std::size_t i = 0; i < n; ++i) {
    Point x(30, 0.0);
    x[0] = static_cast<double>(i) / static_cast<double>(n);
    out.push_back({"q" + std::to_string(i), fid, x, std::nullopt});
  }
  return out;
}

SubprocessOptions fast(const std::string& cmd) {
  SubprocessOptions o;
  o.command = cmd;
  o.timeout_lf = 2s;
  o.timeout_hf = 2s;
  o.handshake_timeout = 2s;
  return o;
}

}  // namespace

TEST_SUITE("evaluator") {
  TEST_CASE("builtin mf-zdt1 at the origin") {
    const auto reg = EvaluatorRegistry::with_builtins();
    const auto p = reg.resolve("mf-zdt1");
    CHECK(p.bounds.size() == 30);
    const auto r = p.evaluator->evaluate_batch({{"a", Fidelity::HF, Point(30, 0.0), std::nullopt}});
    REQUIRE(r.size() == 1);
    CHECK(r[0].ok);
    CHECK(r[0].id == "a");
    CHECK(r[0].f1 == doctest::Approx(0.0));
    CHECK(r[0].f2 == doctest::Approx(1.0));
    CHECK(reg.resolve("mf-zdt2", {10}).bounds.size() == 10);
  }

  TEST_CASE("registry") {
    auto reg = EvaluatorRegistry::with_builtins();
    CHECK(reg.contains("mf-zdt1"));
    CHECK_THROWS_AS(reg.register_builtin("mf-zdt1", [](const ProblemParams&) { return Problem{}; }), Error);
    reg.register_builtin("toy", [](const ProblemParams&) { return Problem{"toy", Bounds::unit(1), nullptr}; });
    CHECK(reg.resolve("toy").name == "toy");
    CHECK_THROWS_WITH(reg.resolve("nope"), doctest::Contains("mf-zdt3"));
  }

  TEST_CASE("cache key") {
    const Point a{0.1, -0.0}, b{0.1 + 1e-14, 0.0};
    CHECK(cache_key(Fidelity::HF, a) == cache_key(Fidelity::HF, b));
    CHECK(cache_key(Fidelity::HF, a) != cache_key(Fidelity::LF, a));
    const Point c{0.1 + 1e-10, 0.0};
    CHECK(cache_key(Fidelity::HF, a) != cache_key(Fidelity::HF, c));
  }

  TEST_CASE("wire json") {
    const EvaluationRequest r{"r1", Fidelity::LF, {0.5, 0.25}, std::nullopt};
    const auto j = to_json(r);
    CHECK(j.at("id") == "r1");
    CHECK(j.at("fidelity") == "LF");
    CHECK(!j.contains("architecture"));
    const auto ok = response_from_json(nlohmann::json::parse(R"({"id":"r1","status":"ok","f1":1,"f2":2})"));
    CHECK(ok.ok);
    CHECK(ok.f2 == 2.0);
    const auto err = response_from_json(nlohmann::json::parse(R"({"id":"r1","status":"error","message":"boom"})"));
    CHECK_FALSE(err.ok);
    CHECK(err.message == "boom");
    const auto nan = response_from_json(nlohmann::json::parse(R"({"id":"r1","status":"ok","f1":null,"f2":2})"));
    CHECK_FALSE(nan.ok);
  }

  TEST_CASE("subprocess answers in request order") {
    const auto log = scratch("order.log");
    SubprocessEvaluator ev(fast(mock("--log " + log.string())));
    const auto req = zdt_requests(10);
    const auto res = ev.evaluate_batch(req);
    REQUIRE(res.size() == req.size());
    const auto builtin = EvaluatorRegistry::with_builtins().resolve("mf-zdt1").evaluator->evaluate_batch(req);
    for (std::size_t i = 0; i < res.size(); ++i) {
      CHECK(res[i].ok);
      CHECK(res[i].id == req[i].id);
      CHECK(res[i].f1 == builtin[i].f1);
      CHECK(res[i].f2 == builtin[i].f2);
    }
    CHECK(ev.launches() == 1);
    CHECK(lines_of(log).size() == 10);
    // Second batch reuses the same child.
    CHECK(ev.evaluate_batch(zdt_requests(3, Fidelity::LF))[2].ok);
    CHECK(ev.launches() == 1);
  }

  TEST_CASE("cache hides repeated requests from the child") {
    const auto log = scratch("cache.log");
    auto child = std::make_shared<SubprocessEvaluator>(fast(mock("--log " + log.string())));
    CachingEvaluator cache(child);
    const auto req = zdt_requests(1);
    const auto first = cache.evaluate_batch(req);
    const auto second = cache.evaluate_batch(req);
    CHECK(first[0].ok);
    CHECK(second[0].ok);
    CHECK(second[0].f1 == first[0].f1);
    CHECK(second[0].f2 == first[0].f2);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK(lines_of(log).size() == 1);
    // Duplicates inside one batch are forwarded once as well.
    auto twice = zdt_requests(2, Fidelity::LF);
    twice[1].x = twice[0].x;
    twice[1].id = "dup";
    const auto r = cache.evaluate_batch(twice);
    CHECK(r[1].id == "dup");
    CHECK(r[1].f2 == r[0].f2);
    CHECK(lines_of(log).size() == 2);
  }

  TEST_CASE("bad handshake fails every request") {
    auto o = fast(mock("--mode bad-handshake"));
    o.handshake_timeout = 500ms;
    SubprocessEvaluator ev(o);
    const auto res = ev.evaluate_batch(zdt_requests(3));
    for (const auto& r : res) CHECK_FALSE(r.ok);
    CHECK(ev.launches() <= 2);
  }

  TEST_CASE("silent child times out the handshake") {
    auto o = fast(mock("--mode silent"));
    o.handshake_timeout = 200ms;
    SubprocessEvaluator ev(o);
    const auto res = ev.evaluate_batch(zdt_requests(1));
    CHECK_FALSE(res[0].ok);
  }

  TEST_CASE("crashing child is restarted once") {
    SubprocessEvaluator ev(fast(mock("--mode crash")));
    const auto res = ev.evaluate_batch(zdt_requests(4));
    for (const auto& r : res) CHECK_FALSE(r.ok);
    CHECK(ev.launches() == 1);
    // The restart happens on the next request; after that the child is given up.
    CHECK_FALSE(ev.evaluate_batch(zdt_requests(1))[0].ok);
    CHECK(ev.launches() == 2);
    const auto again = ev.evaluate_batch(zdt_requests(1));
    CHECK_FALSE(again[0].ok);
    CHECK(again[0].message.find("unavailable") != std::string::npos);
    CHECK(ev.launches() == 2);
  }

  TEST_CASE("crash on first launch recovers after a restart") {
    const auto state = scratch("crash_once.state");
    auto o = fast(mock("--mode crash-once --state " + state.string()));
    o.max_inflight = 1;
    SubprocessEvaluator ev(o);
    const auto res = ev.evaluate_batch(zdt_requests(4));
    CHECK_FALSE(res[0].ok);
    CHECK(res[0].message.find("exited") != std::string::npos);
    for (std::size_t i = 1; i < res.size(); ++i) CHECK(res[i].ok);
    CHECK(ev.launches() == 2);
  }

  TEST_CASE("timed out request is retried once") {
    const auto state = scratch("hang_once.state");
    const auto log = scratch("hang_once.log");
    auto o = fast(mock("--mode hang-hf-once --state " + state.string() + " --log " + log.string()));
    o.timeout_hf = 300ms;
    SubprocessEvaluator ev(o);
    const auto res = ev.evaluate_batch(zdt_requests(2));
    CHECK(res[0].ok);
    CHECK(res[1].ok);
    CHECK(res[0].id == "q0");
    bool retried = false;
    for (const auto& l : lines_of(log)) retried = retried || l.find("#retry1") != std::string::npos;
    CHECK(retried);
  }

  TEST_CASE("hanging child yields timeout errors") {
    auto o = fast(mock("--mode hang"));
    o.timeout_hf = 200ms;
    SubprocessEvaluator ev(o);
    const auto res = ev.evaluate_batch(zdt_requests(2));
    for (const auto& r : res) {
      CHECK_FALSE(r.ok);
      CHECK(r.message.find("timed out") != std::string::npos);
    }
  }

  TEST_CASE("error responses pass through") {
    SubprocessEvaluator ev(fast(mock("--mode error")));
    const auto res = ev.evaluate_batch(zdt_requests(2));
    CHECK_FALSE(res[0].ok);
    CHECK(res[0].message == "mock failure");
  }

  TEST_CASE("nas evaluator attaches the architecture and the flops objective") {
    auto child = std::make_shared<SubprocessEvaluator>(fast(mock("--mode nas")));
    const nas::ArchitectureConfig arch;
    NasEvaluator ev(child, arch, nas::Encoding::Continuous);
    const Point x(12, 1.40);
    const auto res = ev.evaluate_batch({{"n1", Fidelity::LF, x, std::nullopt}, {"bad", Fidelity::LF, Point(12, 9.0), std::nullopt}});
    REQUIRE(res[0].ok);
    const auto spec = nas::assemble_architecture(nas::decode_genotype(x, arch.encoding, nas::Encoding::Continuous), arch);
    CHECK(res[0].f1 == static_cast<double>(spec.ops.size()));
    CHECK(res[0].f2 == static_cast<double>(nas::estimate_flops(spec).total));
    CHECK_FALSE(res[1].ok);
    CHECK(res[1].id == "bad");
  }
}
