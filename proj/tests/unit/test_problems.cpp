#include <doctest.h>

#include <cmath>

#include "mfmo/evolution.hpp"
#include "mfmo/problems.hpp"

using namespace mfmo;
using problems::MfZdtProblem;
using problems::ZdtVariant;

TEST_SUITE("problems") {
  TEST_CASE("zdt1 at the origin") {
    const MfZdtProblem p(ZdtVariant::ZDT1);
    const Point x(30, 0.0);
    const auto hf = p.evaluate(x, Fidelity::HF);
    CHECK(hf[0] == doctest::Approx(0.0));
    CHECK(hf[1] == doctest::Approx(1.0));
    const auto lf = p.evaluate(x, Fidelity::LF);
    CHECK(lf[1] == doctest::Approx(0.84).epsilon(1e-12));
  }

  TEST_CASE("zdt2 lf with h = 0") {
    const MfZdtProblem p(ZdtVariant::ZDT2);
    Point x(30, 0.0);
    x[0] = 1.0;
    CHECK(p.evaluate(x, Fidelity::LF)[1] == doctest::Approx(-0.2).epsilon(1e-12));
  }

  TEST_CASE("out of box input is rejected") {
    const MfZdtProblem p(ZdtVariant::ZDT3);
    Point x(30, 0.0);
    x[3] = 1.5;
    CHECK_THROWS_AS(p.evaluate(x, Fidelity::HF), Error);
  }

  TEST_CASE("true fronts") {
    const auto z1 = problems::true_front(ZdtVariant::ZDT1, 101);
    CHECK(z1.front()[0] == doctest::Approx(0.0));
    CHECK(z1.front()[1] == doctest::Approx(1.0));
    CHECK(z1.back()[0] == doctest::Approx(1.0));
    CHECK(z1.back()[1] == doctest::Approx(0.0));

    const auto z2 = problems::true_front(ZdtVariant::ZDT2, 101);
    bool found = false;
    for (const auto& f : z2) {
      if (std::abs(f[0] - 0.5) < 1e-12) {
        found = true;
        CHECK(f[1] == doctest::Approx(0.75));
      }
    }
    CHECK(found);

    // Disconnected: count f1 gaps wider than 0.05 in the dominance-filtered scan.
    const auto z3 = problems::true_front(ZdtVariant::ZDT3, 1000);
    int gaps = 0;
    for (std::size_t i = 1; i < z3.size(); ++i) gaps += (z3[i][0] - z3[i - 1][0]) > 0.05;
    CHECK(gaps >= 2);
    CHECK(evo::nondominated_indices(z3).size() == z3.size());
  }

  TEST_CASE("hf front points are attained by the hf objective") {
    // x = (t, 0, ..., 0) lies on the ZDT1 front.
    const MfZdtProblem p(ZdtVariant::ZDT1);
    Point x(30, 0.0);
    x[0] = 0.25;
    const auto f = p.evaluate(x, Fidelity::HF);
    CHECK(f[1] == doctest::Approx(1.0 - std::sqrt(0.25)));
  }
}
