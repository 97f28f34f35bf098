#pragma once

// Independent reference computations shared by the unit tests and the acceptance binary.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "botgrid/grid_model.hpp"
#include "botgrid/physical_game.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace botgrid;

struct Ieee39
{
  grid::BusSystem system;
  grid::GridModel model;
  grid::DiscreteGrid grid;
};

inline const Ieee39& ieee39_plant()
{
  static const Ieee39 p = [] {
    Ieee39 q;
    q.system = grid::load_case(std::string(BOTGRID_DATA_DIR) + "/ieee39.case");
    q.model = grid::build_continuous(q.system);
    q.grid = grid::discretize(q.model, 0.1);
    return q;
  }();
  return p;
}

inline grid::DiscreteGrid toy_grid()
{
  return grid::discretize(grid::build_continuous(grid::two_bus_example()), 0.1);
}

inline game::GameWeights reference_weights(const grid::DiscreteGrid& g)
{
  return game::make_weights(g, 1.0, 1.0, 5.0, 5.0, 0.2, 0.05, 20);
}

/// the toy needs a heavier attacker weight for the concavity condition to hold
inline game::GameWeights toy_weights(const grid::DiscreteGrid& g)
{
  return game::make_weights(g, 1.0, 1.0, 5.0, 5.0, 0.2, 1.0, 20);
}

/// operating point plus uniform frequency offsets in [-amp, amp] Hz
inline VectorXd perturbed_start(const grid::DiscreteGrid& g, double amp_hz, unsigned seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-amp_hz, amp_hz);
  VectorXd x = g.equilibrium();
  for (int i = 0; i < g.NG; ++i) x[g.omega0() + i] += 2.0 * std::numbers::pi * U(rng);
  return x;
}

/// finite-horizon affine LQR by a value-function sweep V_t(x) = x'P x + 2 p'x + const
inline MatrixXd lqr_defender(const grid::DiscreteGrid& g, const game::GameWeights& w, const VectorXd& x0)
{
  const int T = w.T;
  const MatrixXd& A = g.A;
  const MatrixXd& B = g.Bd;
  const MatrixXd R = w.Rd.asDiagonal();
  std::vector<MatrixXd> K(T);
  std::vector<VectorXd> k(T);
  MatrixXd P = w.Qf;
  VectorXd p = VectorXd::Zero(g.n());
  for (int t = T - 1; t >= 0; --t) {
    const MatrixXd G = R + B.transpose() * P * B;
    K[t] = G.llt().solve(B.transpose() * P * A);
    k[t] = G.llt().solve(B.transpose() * (P * g.c + p));
    const MatrixXd F = A - B * K[t];
    const VectorXd h = g.c - B * k[t];
    const VectorXd pn = K[t].transpose() * R * k[t] + F.transpose() * (P * h + p);
    const MatrixXd Pn = w.Q + K[t].transpose() * R * K[t] + F.transpose() * P * F;
    P = 0.5 * (Pn + Pn.transpose());
    p = pn;
  }
  MatrixXd Pd(g.NG, T);
  VectorXd x = x0;
  for (int t = 0; t < T; ++t) {
    Pd.col(t) = -K[t] * x - k[t];
    x = A * x + B * Pd.col(t) + g.c;
  }
  return Pd;
}

/// lambda_T = 2 Qf x_T, lambda_t = A' lambda_{t+1} + 2 Q x_t, from a fresh rollout
inline std::vector<VectorXd> costates(const grid::DiscreteGrid& g, const game::GameWeights& w,
                                      const VectorXd& x0, const MatrixXd& Pd, const MatrixXd& Pa)
{
  const int T = (int)Pd.cols();
  const MatrixXd Ba = g.Ba_v();
  std::vector<VectorXd> x(T + 1), lam(T + 1, VectorXd::Zero(g.n()));
  x[0] = x0;
  for (int t = 0; t < T; ++t) x[t + 1] = g.A * x[t] + g.Bd * Pd.col(t) + Ba * Pa.col(t) + g.c;
  lam[T] = 2.0 * w.Qf * x[T];
  for (int t = T - 1; t >= 1; --t) lam[t] = g.A.transpose() * lam[t + 1] + 2.0 * w.Q * x[t];
  return lam;
}

/// maximizer of -r P^2 + b P + log(v - P) / mu on P < v (long double quadratic formula)
inline double attacker_target(double r, double v, double b, double mu)
{
  if (mu <= 0.0 || !std::isfinite(v)) return b / (2.0 * r);
  const long double R = r, V = v, Bb = b, M = mu;
  const long double qa = 2 * R, qb = -(2 * R * V + Bb), qc = V * Bb - 1 / M;
  const long double disc = qb * qb - 4 * qa * qc;
  return (double)((-qb - std::sqrt(disc)) / (2 * qa));
}

/// largest gap between the controls and the best responses to their own costates
inline double stationarity_defect(const grid::DiscreteGrid& g, const game::GameWeights& w, double mu,
                                  const VectorXd& x0, const MatrixXd& Pd, const MatrixXd& Pa)
{
  const auto lam = costates(g, w, x0, Pd, Pa);
  const MatrixXd Ba = g.Ba_v();
  double worst = 0.0;
  for (int t = 0; t < Pd.cols(); ++t) {
    const VectorXd bd = g.Bd.transpose() * lam[t + 1];
    for (int i = 0; i < bd.size(); ++i)
      worst = std::max(worst, std::abs(Pd(i, t) + bd[i] / (2.0 * w.Rd[i])));
    const VectorXd ba = Ba.transpose() * lam[t + 1];
    for (int i = 0; i < ba.size(); ++i)
      worst = std::max(worst, std::abs(Pa(i, t) - attacker_target(w.Ra[i], w.caps[i], ba[i], mu)));
  }
  return worst;
}

} // namespace oracle
