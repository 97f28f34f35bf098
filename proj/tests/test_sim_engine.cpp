#include <doctest.h>

#include <cmath>
#include <numbers>

#include "botgrid/sim_engine.hpp"
#include "oracles.hpp"

using namespace botgrid;
using namespace botgrid::sim;
using Eigen::VectorXd;

namespace {

const oracle::Ieee39& P() { return oracle::ieee39_plant(); }

SimulationLog run(const AttackScenario& sc, const VectorXd& x0)
{
  return run_scenario(P().system, P().model, P().grid, oracle::reference_weights(P().grid), sc, x0);
}

AttackScenario single(double duration, AttackPolicy attack, DefenderMode mode)
{
  AttackScenario sc;
  sc.defender_mode = mode;
  sc.stages = {Stage{duration, cyber::CyberGameSpec{}, attack}};
  return sc;
}

SimulationLog synthetic(double dev_hz, int n)
{
  SimulationLog log;
  for (int k = 0; k < n; ++k) {
    StepRecord r;
    r.t = 0.1 * k;
    r.freq = VectorXd::Constant(3, 60.0 + dev_hz);
    log.steps.push_back(r);
  }
  return log;
}

} // namespace

TEST_CASE("safety report on synthetic logs")
{
  auto r = check_safety(synthetic(0.0, 10), 60.0, 2.0);
  CHECK_FALSE(r.any_trip);
  CHECK(r.n_tripped == 0);
  CHECK(r.peak == 0.0);
  for (double s : r.settle_time) CHECK(s == 0.0);
  for (double f : r.first_trip) CHECK(f < 0.0);

  r = check_safety(synthetic(3.0, 10), 60.0, 2.0);
  CHECK(r.any_trip);
  CHECK(r.n_tripped == 3);
  for (double f : r.first_trip) CHECK(f == 0.0);
  CHECK(r.peak == doctest::Approx(3.0));

  // window restricts the evaluated records
  r = check_safety(synthetic(3.0, 10), 60.0, 2.0, 0.55, 10.0);
  for (double f : r.first_trip) CHECK(f == doctest::Approx(0.6));
  CHECK(check_safety(SimulationLog{}, 60.0, 2.0).peak == 0.0);
}

TEST_CASE("initial state")
{
  const auto& g = P().grid;
  CHECK((initial_state(g) - g.equilibrium()).norm() == 0.0);
  const VectorXd d = VectorXd::LinSpaced(g.NG, -0.5, 0.5);
  const VectorXd x = initial_state(g, d);
  CHECK((x.segment(g.omega0(), g.NG) - g.equilibrium().segment(g.omega0(), g.NG) - 2 * std::numbers::pi * d)
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  CHECK_THROWS(initial_state(g, VectorXd::Zero(3)));
}

TEST_CASE("PI-only recovery from a perturbed start")
{
  const auto& g = P().grid;
  const VectorXd x0 = oracle::perturbed_start(g, 0.5, 41);
  const auto log = run(single(60.0, AttackPolicy::none(), DefenderMode::PIOnly), x0);
  REQUIRE(log.solver_ok);
  REQUIRE(log.steps.size() == 601);
  CHECK(log.steps.back().t == doctest::Approx(60.0));
  const auto rep = check_safety(log, 60.0, 2.0);
  CHECK_FALSE(rep.any_trip);
  for (int i = 0; i < g.NG; ++i) CHECK(std::abs(log.steps.back().freq[i] - 60.0) <= 1e-3);
  // the final record carries no inputs
  CHECK(log.steps.back().Pd.norm() == 0.0);
  CHECK(log.steps.back().Pa.norm() == 0.0);
  // frequency column equals 60 + omega / 2 pi
  const auto& s = log.steps[5];
  CHECK(s.freq[2] == doctest::Approx(60.0 + s.x[g.omega0() + 2] / (2 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("load switching follows the stage caps")
{
  auto sc = single(3.0, AttackPolicy::load_switch(0.9, 1.0), DefenderMode::PIOnly);
  const auto log = run(sc, P().grid.equilibrium());
  REQUIRE(log.stages.size() == 1);
  const VectorXd caps = log.stages[0].caps;
  CHECK((caps - log.stages[0].eq.R_bar * P().system.rho_vulnerable()).norm() <= 1e-12);
  for (size_t k = 0; k + 1 < log.steps.size(); ++k) {
    const auto& r = log.steps[k];
    const bool on = (long)std::floor(r.t / 1.0 + 1e-9) % 2 == 0;
    CHECK((r.Pa - (on ? 0.9 : 0.0) * caps).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(r.Pd.norm() == 0.0);
  }
}

TEST_CASE("constant attacks must respect the caps")
{
  const int NV = P().grid.n_vuln();
  auto sc = single(1.0, AttackPolicy::constant(VectorXd::Constant(NV, 1e4)), DefenderMode::PIOnly);
  CHECK_THROWS_AS(run(sc, P().grid.equilibrium()), std::invalid_argument);
  sc.stages[0].attack = AttackPolicy::constant(VectorXd::Constant(NV - 1, 1.0));
  CHECK_THROWS_AS(run(sc, P().grid.equilibrium()), std::invalid_argument);

  sc.stages[0].attack = AttackPolicy::constant(VectorXd::Constant(NV, 5.0), 0.3, 0.6);
  const auto log = run(sc, P().grid.equilibrium());
  for (size_t k = 0; k + 1 < log.steps.size(); ++k) {
    const double t = log.steps[k].t;
    const double expect = (t >= 0.3 - 1e-9 && t < 0.6 - 1e-9) ? 5.0 : 0.0;
    CHECK(log.steps[k].Pa.maxCoeff() == expect);
  }
}

TEST_CASE("scenario validation")
{
  auto sc = single(1.05, AttackPolicy::none(), DefenderMode::PIOnly);
  CHECK_THROWS(run(sc, P().grid.equilibrium()));
  sc.stages.clear();
  CHECK_THROWS(run(sc, P().grid.equilibrium()));
  sc = single(1.0, AttackPolicy::load_switch(1.5, 1.0), DefenderMode::PIOnly);
  CHECK_THROWS(run(sc, P().grid.equilibrium()));
}

TEST_CASE("strategic attack under min-max control")
{
  const auto& g = P().grid;
  const auto sc = single(2.0, AttackPolicy::strategic(), DefenderMode::MinMax);
  const VectorXd x0 = g.equilibrium();
  const auto log = run(sc, x0);
  REQUIRE(log.solver_ok);
  REQUIRE(log.warnings.empty());
  const VectorXd caps = log.stages[0].caps;
  bool nonzero = false;
  for (const auto& r : log.steps) {
    for (int i = 0; i < caps.size(); ++i) CHECK(r.Pa[i] <= caps[i]);
    nonzero = nonzero || r.Pa.norm() > 0.0;
  }
  CHECK(nonzero);

  // the first record replays the first action of a direct solve
  auto w = oracle::reference_weights(g);
  w.caps = caps;
  game::BarrierOptions opt;
  opt.check_riccati = false;
  const auto sol = game::refine(g, w, x0, opt);
  CHECK((log.steps[0].Pd - sol.Pd.col(0)).norm() == 0.0);
  CHECK((log.steps[0].Pa - sol.Pa.col(0)).norm() == 0.0);

  // restarting from a logged state reproduces the rest bitwise
  const int k = 10;
  const auto tail = run(single(1.0, AttackPolicy::strategic(), DefenderMode::MinMax), log.steps[k].x);
  REQUIRE(tail.steps.size() == 11);
  for (int j = 0; j <= 10; ++j) {
    CHECK((tail.steps[j].x - log.steps[k + j].x).norm() == 0.0);
    if (j < 10) {
      CHECK((tail.steps[j].Pd - log.steps[k + j].Pd).norm() == 0.0);
      CHECK((tail.steps[j].Pa - log.steps[k + j].Pa).norm() == 0.0);
    }
  }
}

TEST_CASE("min-max control dominates PI-only under the strategic attack")
{
  const VectorXd x0 = P().grid.equilibrium();
  const auto mm = run(single(5.0, AttackPolicy::strategic(), DefenderMode::MinMax), x0);
  const auto pi = run(single(5.0, AttackPolicy::strategic(), DefenderMode::PIOnly), x0);
  REQUIRE(mm.solver_ok);
  REQUIRE(pi.solver_ok);
  CHECK(check_safety(mm, 60.0, 2.0).peak <= check_safety(pi, 60.0, 2.0).peak);
}

TEST_CASE("dynamic attack script")
{
  const auto sc = dynamic_attack_scenario();
  REQUIRE(sc.stages.size() == 3);
  CHECK(sc.defender_mode == DefenderMode::MinMax);
  CHECK(sc.stages[0].attack.kind == AttackPolicy::Kind::StrategicNE);
  CHECK(sc.stages[1].attack.kind == AttackPolicy::Kind::LoadSwitch);
  CHECK(sc.stages[2].attack.kind == AttackPolicy::Kind::StrategicNE);
  CHECK(sc.stages[1].cyber.zeta_curve.scale == 1.5);
  CHECK(sc.stages[2].cyber.zeta_curve.scale == 1.5);
  CHECK(sc.stages[2].cyber.cost_d.c == 0.3);
  double total = 0.0;
  for (const auto& s : sc.stages) total += s.duration;
  CHECK(total == doctest::Approx(30.0));

  // weakening the attacker never raises the risk
  const auto e1 = cyber::nash_equilibrium(sc.stages[0].cyber);
  const auto e2 = cyber::nash_equilibrium(sc.stages[1].cyber);
  CHECK(e2.I_bar <= e1.I_bar);
  CHECK(e2.R_bar / e2.I_bar == doctest::Approx(e1.R_bar / e1.I_bar));
}

TEST_CASE("transient caps follow the epidemic")
{
  auto sc = single(2.0, AttackPolicy::load_switch(0.9, 10.0), DefenderMode::PIOnly);
  sc.transient_caps = true;
  sc.transient_I0 = 0.05;
  const auto log = run(sc, P().grid.equilibrium());
  REQUIRE(log.solver_ok);
  CHECK(log.steps.front().I_bar == doctest::Approx(0.05));
  CHECK(log.steps[15].I_bar > log.steps.front().I_bar);
  const VectorXd rho = P().system.rho_vulnerable();
  for (size_t k = 0; k + 1 < log.steps.size(); ++k)
    CHECK((log.steps[k].Pa - 0.9 * log.steps[k].R_bar * rho).cwiseAbs().maxCoeff() <= 1e-9);
}
