#include "botgrid/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace botgrid {
namespace sim {

AttackPolicy AttackPolicy::constant(VectorXd load, double from, double to)
{
  AttackPolicy p;
  p.kind = Kind::ConstantLoad;
  p.load = std::move(load);
  p.active_from = from;
  p.active_to = to;
  return p;
}

AttackPolicy AttackPolicy::load_switch(double fraction, double period)
{
  AttackPolicy p;
  p.kind = Kind::LoadSwitch;
  p.fraction = fraction;
  p.period = period;
  return p;
}

const char* to_string(AttackPolicy::Kind k)
{
  switch (k) {
  case AttackPolicy::Kind::None: return "none";
  case AttackPolicy::Kind::StrategicNE: return "strategic";
  case AttackPolicy::Kind::ConstantLoad: return "constant";
  case AttackPolicy::Kind::LoadSwitch: return "load_switch";
  }
  return "?";
}

static long steps_in(double duration, double Ts)
{
  const double n = duration / Ts;
  const long r = std::lround(n);
  if (std::abs(n - r) > 1e-6 || r < 1)
    throw std::invalid_argument("stage duration " + std::to_string(duration) +
                                " s is not a positive multiple of Ts");
  return r;
}

void AttackScenario::validate(double Ts) const
{
  if (stages.empty()) throw std::invalid_argument("scenario has no stages");
  for (const auto& s : stages) {
    if (!(s.duration > 0.0)) throw std::invalid_argument("stage duration must be > 0");
    steps_in(s.duration, Ts);
    s.cyber.validate();
    if (s.attack.kind == AttackPolicy::Kind::LoadSwitch) {
      if (!(s.attack.period > 0.0)) throw std::invalid_argument("load switch period must be > 0");
      if (s.attack.fraction < 0.0 || s.attack.fraction > 1.0)
        throw std::invalid_argument("load switch fraction must lie in [0,1]");
    }
  }
}

VectorXd initial_state(const grid::DiscreteGrid& grid, const VectorXd& omega_perturb_hz)
{
  VectorXd x = grid.equilibrium();
  if (omega_perturb_hz.size()) {
    if (omega_perturb_hz.size() != grid.NG)
      throw std::invalid_argument("perturbation needs one entry per generator");
    x.segment(grid.omega0(), grid.NG) += 2.0 * std::numbers::pi * omega_perturb_hz;
  }
  return x;
}

SimulationLog run_scenario(const grid::BusSystem& system, const grid::GridModel& model,
                           const grid::DiscreteGrid& grid, const game::GameWeights& weights,
                           const AttackScenario& sc, const VectorXd& x0)
{
  sc.validate(grid.Ts);
  weights.validate(grid);
  const double Ts = grid.Ts;
  const VectorXd rho = system.rho_vulnerable();
  const double two_pi = 2.0 * std::numbers::pi;
  const int NV = grid.n_vuln();

  SimulationLog log;
  game::BarrierOptions bopt = sc.barrier;
  bool certified = true;
  const bool needs_game_any = sc.defender_mode == DefenderMode::MinMax ||
                              std::any_of(sc.stages.begin(), sc.stages.end(), [](const Stage& s) {
                                return s.attack.kind == AttackPolicy::Kind::StrategicNE;
                              });
  if (needs_game_any) {
    const auto rc = game::riccati_check(grid, weights);
    certified = rc.defender_ok && rc.attacker_ok;
    if (!certified)
      log.warnings.push_back("Riccati conditions fail: game solutions are uncertified");
    bopt.check_riccati = false;
  }

  epidemic::DegreeDistribution dist;
  epidemic::EpidemicState epi;
  if (sc.transient_caps) {
    dist = epidemic::scale_free_distribution(sc.stages.front().cyber.d_min, sc.k_max);
    epi = epidemic::uniform_state(dist, sc.transient_I0);
  }

  auto record = [&](double t, int stage, const VectorXd& x, const VectorXd& pd, const VectorXd& pa,
                    double I, double R) {
    StepRecord r;
    r.t = t;
    r.stage = stage;
    r.x = x;
    r.Pd = pd;
    r.Pa = pa;
    r.phi = grid::recover_phi(model, x, model.P_ls, grid.expand_attack(pa));
    r.freq = (system.omega_nominal + x.segment(grid.omega0(), grid.NG).array() / two_pi).matrix();
    r.trip.resize(grid.NG);
    for (int i = 0; i < grid.NG; ++i)
      r.trip[i] = std::abs(r.freq[i] - system.omega_nominal) > system.omega_max;
    r.I_bar = I;
    r.R_bar = R;
    log.steps.push_back(std::move(r));
  };

  VectorXd x = x0;
  long k = 0;
  double I_cur = 0.0, R_cur = 0.0;
  for (int s = 0; s < (int)sc.stages.size(); ++s) {
    const Stage& st = sc.stages[s];
    StageSummary sum;
    sum.t_start = k * Ts;
    sum.eq = cyber::nash_equilibrium(st.cyber, sc.nash, sc.fleet);
    if (!sum.eq.converged)
      log.warnings.push_back("cyber NE did not converge in stage " + std::to_string(s + 1));
    sum.caps = sum.eq.R_bar * rho;
    log.stages.push_back(sum);
    I_cur = sum.eq.I_bar;
    R_cur = sum.eq.R_bar;

    game::GameWeights w = weights;
    w.caps = sum.caps;
    if (st.attack.kind == AttackPolicy::Kind::ConstantLoad) {
      if (st.attack.load.size() != NV)
        throw std::invalid_argument("constant attack needs one load per vulnerable bus");
      if ((st.attack.load.array() > w.caps.array()).any())
        throw std::invalid_argument("constant attack exceeds the stage caps R_bar * rho in stage " +
                                    std::to_string(s + 1));
    }
    const bool needs_game = sc.defender_mode == DefenderMode::MinMax ||
                            st.attack.kind == AttackPolicy::Kind::StrategicNE;
    epidemic::EpidemicParams ep{st.cyber.gamma_curve.value(sum.eq.u_d),
                                st.cyber.zeta_curve.value(sum.eq.u_a)};

    const long n = steps_in(st.duration, Ts);
    for (long j = 0; j < n; ++j, ++k) {
      const double t = k * Ts, ts = j * Ts;
      if (sc.transient_caps) {
        I_cur = epidemic::cyber_risk(epi, dist);
        R_cur = epidemic::systemic_risk(I_cur, sc.fleet);
        w.caps = R_cur * rho;
      }

      VectorXd pd = VectorXd::Zero(grid.NG), pa = VectorXd::Zero(NV);
      game::OpenLoopSolution sol;
      if (needs_game) {
        sol = game::refine(grid, w, x, bopt);
        if (!sol.converged) {
          log.solver_ok = false;
          log.error = "min-max solve did not converge at t=" + std::to_string(t) +
                      " (residual " + std::to_string(sol.residual) + ")";
          record(t, s, x, pd, pa, I_cur, R_cur);
          return log;
        }
        if (sc.defender_mode == DefenderMode::MinMax) pd = sol.Pd.col(0);
      }

      const AttackPolicy& pol = st.attack;
      if (pol.active(ts)) {
        switch (pol.kind) {
        case AttackPolicy::Kind::None: break;
        case AttackPolicy::Kind::StrategicNE: pa = sol.Pa.col(0); break;
        case AttackPolicy::Kind::ConstantLoad: pa = pol.load; break;
        case AttackPolicy::Kind::LoadSwitch: {
          const long phase = (long)std::floor((ts - pol.active_from) / pol.period + 1e-9);
          if (phase % 2 == 0) pa = pol.fraction * w.caps;
          break;
        }
        }
      }
      // transient caps may shrink below a scripted load; clip rather than violate
      for (int i = 0; i < NV; ++i) pa[i] = std::min(pa[i], w.caps[i]);

      record(t, s, x, pd, pa, I_cur, R_cur);
      x = grid.step(x, pd, grid.expand_attack(pa));
      if (sc.transient_caps) {
        const double dt = epidemic::default_dt(ep, dist);
        const long m = std::max(1L, (long)std::ceil(Ts / dt));
        epi = epidemic::integrate(epi, ep, dist, Ts / m, m);
      }
    }
  }
  record(k * Ts, (int)sc.stages.size() - 1, x, VectorXd::Zero(grid.NG), VectorXd::Zero(NV), I_cur,
         R_cur);
  return log;
}

AttackScenario dynamic_attack_scenario(const cyber::CyberGameSpec& base)
{
  AttackScenario sc;
  sc.defender_mode = DefenderMode::MinMax;

  Stage s1{10.0, base, AttackPolicy::strategic()};

  Stage s2 = s1;
  s2.cyber.zeta_curve.scale = 1.5;
  s2.attack = AttackPolicy::load_switch(0.9, 5.0);

  // overrides accumulate: the weakened attacker persists when defense gets costlier
  Stage s3 = s2;
  s3.cyber.cost_d.c = 0.3;
  s3.attack = AttackPolicy::strategic();

  sc.stages = {s1, s2, s3};
  return sc;
}

SimulationLog run_dynamic_attack(const grid::BusSystem& system, const grid::GridModel& model,
                                 const grid::DiscreteGrid& grid, const game::GameWeights& weights,
                                 const VectorXd& x0)
{
  return run_scenario(system, model, grid, weights, dynamic_attack_scenario(), x0);
}

SafetyReport check_safety(const SimulationLog& log, double omega_nominal, double omega_max,
                          double t_from, double t_to, double settle_band)
{
  SafetyReport r;
  if (log.steps.empty()) return r;
  const int NG = (int)log.steps.front().freq.size();
  r.max_dev = VectorXd::Zero(NG);
  r.first_trip.assign(NG, -1.0);
  r.settle_time.assign(NG, 0.0);
  for (const auto& s : log.steps) {
    if (s.t < t_from - 1e-9 || s.t > t_to + 1e-9) continue;
    for (int i = 0; i < NG; ++i) {
      const double dev = std::abs(s.freq[i] - omega_nominal);
      r.max_dev[i] = std::max(r.max_dev[i], dev);
      if (dev > omega_max && r.first_trip[i] < 0.0) r.first_trip[i] = s.t;
      if (dev > settle_band) r.settle_time[i] = s.t;
    }
  }
  r.peak = r.max_dev.maxCoeff();
  for (double f : r.first_trip)
    if (f >= 0.0) ++r.n_tripped;
  r.any_trip = r.n_tripped > 0;
  return r;
}

} // namespace sim
} // namespace botgrid
