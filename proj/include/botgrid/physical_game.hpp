#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "botgrid/grid_model.hpp"

namespace botgrid {
namespace game {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Weights of the finite-horizon min-max problem. R_d / R_a hold diagonals;
/// the attacker acts on the vulnerable loads only.
struct GameWeights
{
  MatrixXd Q, Qf;
  VectorXd Rd, Ra;
  int T = 20;
  double mu = 2.0;
  double alpha = 5.0;
  int n_rounds = 6;
  VectorXd caps;   // v_i per vulnerable load

  void validate(const grid::DiscreteGrid& grid) const;
};

/// Q = diag(q_delta, q_theta, q_omega) blocks, Q_f = qf_scale * Q
GameWeights make_weights(const grid::DiscreteGrid& grid, double q_delta, double q_theta,
                         double q_omega, double qf_scale, double r_d, double r_a, int T);

struct RiccatiReport
{
  bool defender_ok = true;
  bool attacker_ok = true;
  double defender_min_eig = 0.0;
  double attacker_min_eig = 0.0;
  std::vector<MatrixXd> Sd, Sa;   // index t = 0..T
};

struct OpenLoopSolution
{
  MatrixXd Pd;   // N_G x T
  MatrixXd Pa;   // N_V x T
  std::vector<VectorXd> x;        // x_0..x_T
  std::vector<VectorXd> lambda;   // lambda_0 unused, lambda_1..lambda_T
  double objective = 0.0;         // barrier objective; plain J when barrier is off
  double residual = 0.0;
  double mu = 0.0;                // barrier weight of the last solve, 0 = none
  int iterations = 0;
  bool converged = true;
  bool certified = true;
  std::string method;
};

struct BarrierOptions
{
  double eta = 0.5;
  double tol = 1e-8;
  int max_iter = 2000;
  bool newton_fallback = true;
  bool check_riccati = true;   // off when the caller already certified grid and weights
};

RiccatiReport riccati_check(const grid::DiscreteGrid& grid, const GameWeights& w);

OpenLoopSolution solve_unconstrained(const grid::DiscreteGrid& grid, const GameWeights& w,
                                     const VectorXd& x0);

double attacker_root(double r, double v, double b, double mu);

OpenLoopSolution solve_barrier(const grid::DiscreteGrid& grid, const GameWeights& w,
                               const VectorXd& x0, const OpenLoopSolution& init,
                               const BarrierOptions& opt = {});

OpenLoopSolution refine(const grid::DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                        const BarrierOptions& opt = {});

// helpers shared with tests and the simulator

std::vector<VectorXd> rollout(const grid::DiscreteGrid& grid, const VectorXd& x0,
                              const MatrixXd& Pd, const MatrixXd& Pa);

/// plain quadratic J
double objective(const grid::DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                 const MatrixXd& Pd, const MatrixXd& Pa);

/// J plus (1/mu) sum log(v - Pa); -inf outside the barrier domain
double barrier_objective(const grid::DiscreteGrid& grid, const GameWeights& w, double mu,
                         const VectorXd& x0, const MatrixXd& Pd, const MatrixXd& Pa);

std::vector<VectorXd> costates(const grid::DiscreteGrid& grid, const GameWeights& w,
                               const std::vector<VectorXd>& x);

/// max defect over dynamics, costate and stationarity conditions; mu <= 0 means no barrier
double pmp_residual(const grid::DiscreteGrid& grid, const GameWeights& w, double mu,
                    const VectorXd& x0, const OpenLoopSolution& s);

} // namespace game
} // namespace botgrid
