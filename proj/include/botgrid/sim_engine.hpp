#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "botgrid/cyber_game.hpp"
#include "botgrid/epidemic.hpp"
#include "botgrid/grid_model.hpp"
#include "botgrid/physical_game.hpp"

namespace botgrid {
namespace sim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct AttackPolicy
{
  enum class Kind { None, StrategicNE, ConstantLoad, LoadSwitch };

  Kind kind = Kind::None;
  VectorXd load;            // ConstantLoad, one entry per vulnerable bus
  double fraction = 0.9;    // LoadSwitch, share of each cap switched on
  double period = 50.0;     // LoadSwitch, seconds on followed by seconds off
  double active_from = 0.0; // stage-relative window outside which the attack is zero
  double active_to = std::numeric_limits<double>::infinity();

  static AttackPolicy none() { return {}; }
  static AttackPolicy strategic() { AttackPolicy p; p.kind = Kind::StrategicNE; return p; }
  static AttackPolicy constant(VectorXd load, double from = 0.0,
                               double to = std::numeric_limits<double>::infinity());
  static AttackPolicy load_switch(double fraction, double period);

  bool active(double t_stage) const { return t_stage >= active_from - 1e-9 && t_stage < active_to - 1e-9; }
};

const char* to_string(AttackPolicy::Kind k);

enum class DefenderMode { PIOnly, MinMax };

struct Stage
{
  double duration = 10.0;
  cyber::CyberGameSpec cyber;
  AttackPolicy attack;
};

struct AttackScenario
{
  std::vector<Stage> stages;
  DefenderMode defender_mode = DefenderMode::MinMax;
  epidemic::FleetParams fleet;
  cyber::NashOptions nash;
  game::BarrierOptions barrier;
  /// drive caps from the transient I(t) instead of the steady state
  bool transient_caps = false;
  double transient_I0 = 0.05;
  int k_max = 100;

  void validate(double Ts) const;
};

struct StepRecord
{
  double t = 0.0;
  int stage = 0;
  VectorXd x, phi;
  VectorXd Pd;      // N_G, inputs applied on [t, t + Ts)
  VectorXd Pa;      // N_V
  VectorXd freq;    // Hz
  std::vector<char> trip;
  double I_bar = 0.0;
  double R_bar = 0.0;
};

struct StageSummary
{
  double t_start = 0.0;
  cyber::CyberEquilibrium eq;
  VectorXd caps;
};

struct SimulationLog
{
  std::vector<StepRecord> steps;
  std::vector<StageSummary> stages;
  std::vector<std::string> warnings;
  bool solver_ok = true;
  std::string error;
};

struct SafetyReport
{
  VectorXd max_dev;                 // Hz per generator
  std::vector<double> first_trip;   // s, negative when never tripped
  std::vector<double> settle_time;  // last time |dev| > settle_band, 0 if never
  double peak = 0.0;
  int n_tripped = 0;
  bool any_trip = false;
};

/// pre-attack operating point plus an optional frequency perturbation (Hz) on every generator
VectorXd initial_state(const grid::DiscreteGrid& grid, const VectorXd& omega_perturb_hz = VectorXd());

SimulationLog run_scenario(const grid::BusSystem& system, const grid::GridModel& model,
                           const grid::DiscreteGrid& grid, const game::GameWeights& weights,
                           const AttackScenario& scenario, const VectorXd& x0);

/// three-stage botnet campaign: strategic, weakened attacker with load switching, costlier defense
AttackScenario dynamic_attack_scenario(const cyber::CyberGameSpec& base = {});

SimulationLog run_dynamic_attack(const grid::BusSystem& system, const grid::GridModel& model,
                                 const grid::DiscreteGrid& grid, const game::GameWeights& weights,
                                 const VectorXd& x0);

SafetyReport check_safety(const SimulationLog& log, double omega_nominal, double omega_max,
                          double t_from = -std::numeric_limits<double>::infinity(),
                          double t_to = std::numeric_limits<double>::infinity(),
                          double settle_band = 0.05);

} // namespace sim
} // namespace botgrid
