#include <doctest.h>

#include <cmath>

#include "mfmo/config.hpp"
#include "mfmo/outputs.hpp"

using namespace mfmo;
using namespace mfmo::config;
using nlohmann::json;

namespace {

std::string pointer_of(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const auto c = parse_config(json::object());
    CHECK(c.problem == "mf-zdt1");
    CHECK(c.optimizer.nfe_max_hf == 100);
    CHECK(c.optimizer.n_s_lf == 100);
    CHECK(c.optimizer.K == 3);
    CHECK(c.optimizer.n_near == 25);
    CHECK(c.optimizer.ei_pop == 50);
    CHECK(c.nas.encoding.n_nodes == 3);
  }

  TEST_CASE("values are read") {
    const auto c = parse_config(json::parse(R"({
      "problem": "mf-zdt2", "seed": 9, "mode": "hf-only", "encoding": "discrete",
      "optimizer": {"nfe_max_hf": 60, "K": 2, "ei_nsga2": {"pop": 12, "gens": 3}, "repair": "clamp"},
      "surrogate": {"likelihood_pop": 10},
      "evaluator": {"command": "x", "timeout_hf_s": 1.5},
      "nas": {"n_down": 4, "n_up": 3}
    })"));
    CHECK(c.problem == "mf-zdt2");
    CHECK(c.optimizer.seed == 9);
    CHECK(c.optimizer.mode == opt::Mode::HfOnly);
    CHECK(c.encoding == nas::Encoding::Discrete);
    CHECK(c.optimizer.nfe_max_hf == 60);
    CHECK(c.optimizer.ei_pop == 12);
    CHECK(c.optimizer.ei_gens == 3);
    CHECK(c.optimizer.repair == evo::RepairMode::Clamp);
    CHECK(c.optimizer.surrogate.likelihood_pop == 10);
    CHECK(*c.evaluator.command == "x");
    CHECK(c.nas.encoding.n_down == 4);
  }

  TEST_CASE("errors carry json pointers") {
    CHECK(pointer_of(json::parse(R"({"optimizer": {"bogus": 1}})")) == "/optimizer/bogus");
    CHECK(pointer_of(json::parse(R"({"optimizer": {"n_p": 3}})")) == "/optimizer/n_p");
    CHECK(pointer_of(json::parse(R"({"optimizer": {"F": "big"}})")) == "/optimizer/F");
    CHECK(pointer_of(json::parse(R"({"mode": "sideways"})")) == "/mode");
    CHECK(pointer_of(json::parse(R"({"optimizer": {"ei_nsga2": {"gens": 0}}})")) == "/optimizer/ei_nsga2/gens");
    CHECK(pointer_of(json::parse(R"({"optimizer": {"nfe_max_hf": 2.5}})")) == "/optimizer/nfe_max_hf");
    CHECK(pointer_of(json::parse(R"([1, 2])")) == "/");
    CHECK_THROWS_WITH(parse_config(json::parse(R"({"optimizer": {"n_p": 3}})")), doctest::Contains(">= 6"));
  }

  TEST_CASE("echo round trip") {
    const auto c = parse_config(json::parse(R"({"seed": 3, "optimizer": {"K": 4}})"));
    const auto j = to_json(c);
    CHECK(j.at("optimizer").at("K") == 4);
    CHECK(to_json(parse_config(j)) == j);
  }

  TEST_CASE("schema lists every echoed key") {
    const auto schema = config_schema();
    const auto echo = to_json(RunConfig{});
    for (const auto& [k, v] : echo.items()) {
      REQUIRE(schema.at("properties").contains(k));
      if (v.is_object()) {
        for (const auto& [k2, v2] : v.items()) CHECK(schema["properties"][k]["properties"].contains(k2));
      }
    }
  }

  TEST_CASE("split genes") {
    const Bounds target = Bounds::unit(2);
    const std::vector<double> genes{0.0, 0.0, 9.99, 9.99};
    const auto x = decode_split_genes(genes, 10, target);
    CHECK(x[0] == 0.0);
    CHECK(x[1] == doctest::Approx(1.0));
    const std::vector<double> mid{4.5, 9.2};
    CHECK(decode_split_genes(mid, 10, Bounds::unit(1))[0] == doctest::Approx(49.0 / 99.0));
  }

  TEST_CASE("build problem") {
    const auto reg = eval::EvaluatorRegistry::with_builtins();
    RunConfig c;
    c.dimension = 5;
    auto built = build_problem(c, reg);
    CHECK(built.problem.bounds.size() == 5);
    CHECK(built.cache != nullptr);

    c.encoding = nas::Encoding::Discrete;
    built = build_problem(c, reg);
    CHECK(built.problem.bounds.size() == 10);
    const auto r = built.problem.evaluator->evaluate_batch({{"z", Fidelity::HF, Point(10, 0.0), std::nullopt}});
    CHECK(r[0].ok);
    CHECK(r[0].f2 == doctest::Approx(1.0));

    RunConfig n;
    n.problem = kNasProblem;
    try {
      build_problem(n, reg);
      CHECK(false);
    } catch (const ConfigError& e) {
      CHECK(e.pointer() == "/evaluator/command");
    }
    n.nas.input_resolution = 32;
    CHECK_THROWS_AS(build_problem(n, reg, std::string("true")), ConfigError);

    RunConfig u;
    u.problem = "unknown-problem";
    try {
      build_problem(u, reg);
      CHECK(false);
    } catch (const ConfigError& e) {
      CHECK(e.pointer() == "/problem");
      CHECK(std::string(e.what()).find("mf-zdt1") != std::string::npos);
    }
  }
}

TEST_SUITE("outputs") {
  TEST_CASE("front csv is sorted and round-trips") {
    std::vector<store::EvaluationRecord> recs(3);
    recs[0].x = {0.1};
    recs[0].f1 = 0.3;
    recs[0].f2 = 0.1;
    recs[1].x = {0.2};
    recs[1].f1 = 0.1;
    recs[1].f2 = 1.0 / 3.0;
    recs[2].x = {0.3};
    recs[2].f1 = 0.2;
    recs[2].f2 = 0.2;
    const auto csv = outputs::front_csv(recs);
    CHECK(csv.rfind("f1,f2,x1\n", 0) == 0);
    const auto back = outputs::read_front_csv(csv);
    REQUIRE(back.size() == 3);
    CHECK(back[0][0] == 0.1);
    CHECK(back[0][1] == 1.0 / 3.0);
    CHECK(back[2][0] == 0.3);
  }

  TEST_CASE("format double is shortest round trip") {
    CHECK(outputs::format_double(0.1) == "0.1");
    CHECK(std::stod(outputs::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }

  TEST_CASE("summaries") {
    CHECK(outputs::median({3, 1, 2}) == 2);
    CHECK(outputs::median({4, 1, 2, 3}) == 2.5);
    CHECK(outputs::stddev({1, 3}) == doctest::Approx(1.0));
    CHECK(outputs::trace_csv({{0, 50, 0.5}, {1, 54, 0.75}}) == "iteration,hf_count,hv\n0,50,0.5\n1,54,0.75\n");
  }

  TEST_CASE("hv by hf count is a step function") {
    store::SampleDatabase db(Bounds::unit(1));
    auto add = [&](double x, double f1, double f2, std::size_t it) {
      store::EvaluationRecord r;
      r.x = {x};
      r.f1 = f1;
      r.f2 = f2;
      r.iteration = it;
      db.insert(r);
    };
    add(0.1, 1, 1, 0);
    add(0.2, 2, 0, 0);
    add(0.3, 0, 2, 1);
    add(0.4, 0.5, 0.5, 2);
    const auto norm = evo::Normalization::from_points(std::vector<Objectives>{{0, 0}, {2, 2}});
    const auto v = outputs::hv_by_hf_count(db, norm, 1, 4);
    REQUIRE(v.size() == 4);
    CHECK(v[0] == 0.0);
    CHECK(v[1] > 0.0);
    CHECK(v[2] >= v[1]);
    CHECK(v[3] >= v[2]);
    CHECK(v[3] == doctest::Approx(outputs::final_hv(db, norm)));
  }
}
