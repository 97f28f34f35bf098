#include "botgrid/physical_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace botgrid {
namespace game {

using grid::DiscreteGrid;

void GameWeights::validate(const DiscreteGrid& grid) const
{
  const int n = grid.n();
  if (Q.rows() != n || Q.cols() != n || Qf.rows() != n || Qf.cols() != n)
    throw std::invalid_argument("Q / Qf dimension mismatch");
  if (Rd.size() != grid.NG) throw std::invalid_argument("R_d must have one entry per generator");
  if (Ra.size() != grid.n_vuln()) throw std::invalid_argument("R_a must have one entry per vulnerable load");
  if (caps.size() != grid.n_vuln()) throw std::invalid_argument("caps must have one entry per vulnerable load");
  if ((Rd.array() <= 0.0).any()) throw std::invalid_argument("R_d must be positive definite");
  if ((Ra.array() <= 0.0).any()) throw std::invalid_argument("R_a must be positive definite");
  if ((caps.array() < 0.0).any()) throw std::invalid_argument("caps must be nonnegative");
  if (T < 1) throw std::invalid_argument("horizon T must be >= 1");
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  auto psd = [](const MatrixXd& M, const char* name) {
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()))
      throw std::invalid_argument(std::string(name) + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12)
      throw std::invalid_argument(std::string(name) + " must be positive semidefinite");
  };
  psd(Q, "Q");
  psd(Qf, "Qf");
}

GameWeights make_weights(const DiscreteGrid& grid, double q_delta, double q_theta, double q_omega,
                         double qf_scale, double r_d, double r_a, int T)
{
  GameWeights w;
  VectorXd q(grid.n());
  q.head(grid.NG).setConstant(q_delta);
  q.segment(grid.NG, grid.NL).setConstant(q_theta);
  q.tail(grid.NG).setConstant(q_omega);
  w.Q = q.asDiagonal();
  w.Qf = qf_scale * w.Q;
  w.Rd = VectorXd::Constant(grid.NG, r_d);
  w.Ra = VectorXd::Constant(grid.n_vuln(), r_a);
  w.T = T;
  w.caps = VectorXd::Constant(grid.n_vuln(), std::numeric_limits<double>::infinity());
  return w;
}

static double min_eig(const MatrixXd& M)
{
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

RiccatiReport riccati_check(const DiscreteGrid& grid, const GameWeights& w)
{
  const MatrixXd& A = grid.A;
  const MatrixXd& Bd = grid.Bd;
  const MatrixXd Ba = grid.Ba_v();
  RiccatiReport r;
  r.Sd.assign(w.T + 1, MatrixXd());
  r.Sa.assign(w.T + 1, MatrixXd());
  r.Sd[w.T] = w.Qf;
  r.Sa[w.T] = w.Qf;
  r.defender_min_eig = r.attacker_min_eig = std::numeric_limits<double>::infinity();

  for (int t = w.T - 1; t >= 0; --t) {
    const MatrixXd& Sd = r.Sd[t + 1];
    MatrixXd Md = MatrixXd(w.Rd.asDiagonal()) + Bd.transpose() * Sd * Bd;
    const double ed = min_eig(Md);
    r.defender_min_eig = std::min(r.defender_min_eig, ed);
    if (!(ed > 1e-10)) r.defender_ok = false;
    const MatrixXd SdA = Sd * A;
    r.Sd[t] = w.Q + A.transpose() * SdA -
              SdA.transpose() * Bd * Md.ldlt().solve(Bd.transpose() * SdA);

    const MatrixXd& Sa = r.Sa[t + 1];
    MatrixXd Ma = MatrixXd(w.Ra.asDiagonal()) - Ba.transpose() * Sa * Ba;
    const double ea = min_eig(Ma);
    r.attacker_min_eig = std::min(r.attacker_min_eig, ea);
    if (!(ea > 1e-10)) r.attacker_ok = false;
    const MatrixXd SaA = Sa * A;
    r.Sa[t] = w.Q + A.transpose() * SaA +
              SaA.transpose() * Ba * Ma.partialPivLu().solve(Ba.transpose() * SaA);
  }
  return r;
}

std::vector<VectorXd> rollout(const DiscreteGrid& grid, const VectorXd& x0, const MatrixXd& Pd,
                              const MatrixXd& Pa)
{
  const MatrixXd Ba = grid.Ba_v();
  std::vector<VectorXd> x(Pd.cols() + 1);
  x[0] = x0;
  for (int t = 0; t < Pd.cols(); ++t)
    x[t + 1] = grid.A * x[t] + grid.Bd * Pd.col(t) + Ba * Pa.col(t) + grid.c;
  return x;
}

double objective(const DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                 const MatrixXd& Pd, const MatrixXd& Pa)
{
  const auto x = rollout(grid, x0, Pd, Pa);
  const int T = (int)Pd.cols();
  double J = x[T].dot(w.Qf * x[T]);
  for (int t = 0; t < T; ++t) {
    J += x[t].dot(w.Q * x[t]);
    J += Pd.col(t).dot(w.Rd.cwiseProduct(Pd.col(t)));
    J -= Pa.col(t).dot(w.Ra.cwiseProduct(Pa.col(t)));
  }
  return J;
}

double barrier_objective(const DiscreteGrid& grid, const GameWeights& w, double mu,
                         const VectorXd& x0, const MatrixXd& Pd, const MatrixXd& Pa)
{
  double J = objective(grid, w, x0, Pd, Pa);
  for (int t = 0; t < Pa.cols(); ++t)
    for (int i = 0; i < Pa.rows(); ++i) {
      const double slack = w.caps[i] - Pa(i, t);
      if (!(slack > 0.0)) return -std::numeric_limits<double>::infinity();
      if (std::isfinite(slack)) J += std::log(slack) / mu;
    }
  return J;
}

std::vector<VectorXd> costates(const DiscreteGrid& grid, const GameWeights& w,
                               const std::vector<VectorXd>& x)
{
  const int T = (int)x.size() - 1;
  std::vector<VectorXd> lam(T + 1);
  lam[T] = 2.0 * w.Qf * x[T];
  for (int t = T - 1; t >= 1; --t)
    lam[t] = grid.A.transpose() * lam[t + 1] + 2.0 * w.Q * x[t];
  lam[0] = VectorXd::Zero(x[0].size());
  return lam;
}

double attacker_root(double r, double v, double b, double mu)
{
  if (!(r > 0.0) || !(mu > 0.0) || v < 0.0)
    throw std::invalid_argument("attacker_root: need r > 0, mu > 0, v >= 0");
  if (!std::isfinite(v))
    return b / (2.0 * r);
  // roots of 2r P^2 - (2rv + b) P + (vb - 1/mu) = 0
  const double s = 2.0 * r * v + b;
  const double disc = (2.0 * r * v - b) * (2.0 * r * v - b) + 8.0 * r / mu;
  const double sq = std::sqrt(disc);
  if (s > 0.0)
    return 2.0 * (v * b - 1.0 / mu) / (s + sq);   // avoids cancellation in s - sq
  return (s - sq) / (4.0 * r);
}

namespace {

// Newton-linearized attacker stationarity at Pa_bar enters as a modified weight and offset.
struct AttackerModel
{
  std::vector<VectorXd> Rhat;   // per t, N_V
  std::vector<VectorXd> e;      // per t, N_V
};

AttackerModel plain_attacker(const GameWeights& w)
{
  return {std::vector<VectorXd>(w.T, w.Ra), std::vector<VectorXd>(w.T, VectorXd::Zero(w.Ra.size()))};
}

AttackerModel linearized_attacker(const GameWeights& w, double mu, const MatrixXd& Pa)
{
  AttackerModel m = plain_attacker(w);
  for (int t = 0; t < w.T; ++t)
    for (int i = 0; i < Pa.rows(); ++i) {
      const double slack = w.caps[i] - Pa(i, t);
      if (!std::isfinite(slack)) continue;
      const double g = 1.0 / (mu * slack), gp = g / slack;
      const double r = w.Ra[i];
      m.Rhat[t][i] = r + 0.5 * gp;
      m.e[t][i] = (g - gp * Pa(i, t)) / (2.0 * r + gp);
    }
  return m;
}

// Backward affine sweep on lambda_t = K_t x_t + k_t for the linear(ized) PMP system.
OpenLoopSolution sweep(const DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                       const AttackerModel& am)
{
  const int n = grid.n(), T = w.T;
  const MatrixXd& A = grid.A;
  const MatrixXd Ba = grid.Ba_v();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Sd = grid.Bd * w.Rd.cwiseInverse().asDiagonal() * grid.Bd.transpose();

  std::vector<MatrixXd> K(T + 1), W(T);
  std::vector<VectorXd> k(T + 1), cp(T), S_k(T);
  std::vector<MatrixXd> S(T);
  K[T] = 2.0 * w.Qf;
  k[T] = VectorXd::Zero(n);
  for (int t = T - 1; t >= 0; --t) {
    S[t] = Sd - Ba * am.Rhat[t].cwiseInverse().asDiagonal() * Ba.transpose();
    cp[t] = grid.c - Ba * am.e[t];
    Eigen::PartialPivLU<MatrixXd> lu(I + 0.5 * S[t] * K[t + 1]);
    if (!(std::abs(lu.determinant()) > 1e-14))
      throw std::runtime_error("singular sweep matrix at t=" + std::to_string(t));
    W[t] = lu.inverse();
    S_k[t] = cp[t] - 0.5 * S[t] * k[t + 1];
    if (t >= 1) {
      const MatrixXd KW = K[t + 1] * W[t];
      K[t] = 2.0 * w.Q + A.transpose() * KW * A;
      k[t] = A.transpose() * (KW * S_k[t] + k[t + 1]);
    }
  }

  OpenLoopSolution s;
  s.Pd.resize(grid.NG, T);
  s.Pa.resize(grid.n_vuln(), T);
  s.x.assign(T + 1, VectorXd());
  s.lambda.assign(T + 1, VectorXd::Zero(n));
  s.x[0] = x0;
  for (int t = 0; t < T; ++t) {
    s.x[t + 1] = W[t] * (A * s.x[t] + S_k[t]);
    s.lambda[t + 1] = K[t + 1] * s.x[t + 1] + k[t + 1];
    s.Pd.col(t) = -0.5 * w.Rd.cwiseInverse().cwiseProduct(grid.Bd.transpose() * s.lambda[t + 1]);
    s.Pa.col(t) = 0.5 * am.Rhat[t].cwiseInverse().cwiseProduct(Ba.transpose() * s.lambda[t + 1]) - am.e[t];
  }
  // re-roll the controls so the dynamics hold to rounding
  s.x = rollout(grid, x0, s.Pd, s.Pa);
  s.lambda = costates(grid, w, s.x);
  return s;
}

// best responses implied by the current costates
void pmp_targets(const DiscreteGrid& grid, const GameWeights& w, double mu, const MatrixXd& Ba,
                 const std::vector<VectorXd>& lam, MatrixXd& Pd_t, MatrixXd& Pa_t)
{
  Pd_t.resize(grid.NG, w.T);
  Pa_t.resize(grid.n_vuln(), w.T);
  for (int t = 0; t < w.T; ++t) {
    Pd_t.col(t) = -0.5 * w.Rd.cwiseInverse().cwiseProduct(grid.Bd.transpose() * lam[t + 1]);
    const VectorXd b = Ba.transpose() * lam[t + 1];
    for (int i = 0; i < b.size(); ++i)
      Pa_t(i, t) = mu > 0.0 ? attacker_root(w.Ra[i], w.caps[i], b[i], mu) : b[i] / (2.0 * w.Ra[i]);
  }
}

void finish(const DiscreteGrid& grid, const GameWeights& w, double mu, const VectorXd& x0,
            OpenLoopSolution& s)
{
  s.x = rollout(grid, x0, s.Pd, s.Pa);
  s.lambda = costates(grid, w, s.x);
  s.mu = mu;
  s.residual = pmp_residual(grid, w, mu, x0, s);
  s.objective = mu > 0.0 ? barrier_objective(grid, w, mu, x0, s.Pd, s.Pa)
                         : objective(grid, w, x0, s.Pd, s.Pa);
}

} // namespace

double pmp_residual(const DiscreteGrid& grid, const GameWeights& w, double mu, const VectorXd& x0,
                    const OpenLoopSolution& s)
{
  const int T = (int)s.Pd.cols();
  const MatrixXd Ba = grid.Ba_v();
  double res = (s.x[0] - x0).cwiseAbs().maxCoeff();
  for (int t = 0; t < T; ++t) {
    const VectorXd nx = grid.A * s.x[t] + grid.Bd * s.Pd.col(t) + Ba * s.Pa.col(t) + grid.c;
    res = std::max(res, (s.x[t + 1] - nx).cwiseAbs().maxCoeff());
  }
  res = std::max(res, (s.lambda[T] - 2.0 * w.Qf * s.x[T]).cwiseAbs().maxCoeff());
  for (int t = 1; t < T; ++t)
    res = std::max(res, (s.lambda[t] - grid.A.transpose() * s.lambda[t + 1] - 2.0 * w.Q * s.x[t])
                            .cwiseAbs().maxCoeff());
  MatrixXd Pd_t, Pa_t;
  pmp_targets(grid, w, mu, Ba, s.lambda, Pd_t, Pa_t);
  res = std::max(res, (s.Pd - Pd_t).cwiseAbs().maxCoeff());
  res = std::max(res, (s.Pa - Pa_t).cwiseAbs().maxCoeff());
  return res;
}

OpenLoopSolution solve_unconstrained(const DiscreteGrid& grid, const GameWeights& w,
                                     const VectorXd& x0)
{
  w.validate(grid);
  OpenLoopSolution s = sweep(grid, w, x0, plain_attacker(w));
  s.method = "sweep";
  finish(grid, w, 0.0, x0, s);
  s.converged = true;
  const auto rc = riccati_check(grid, w);
  s.certified = rc.defender_ok && rc.attacker_ok;
  return s;
}

namespace {

OpenLoopSolution barrier_newton(const DiscreteGrid& grid, const GameWeights& w, double mu,
                                const VectorXd& x0, OpenLoopSolution cur, const BarrierOptions& opt,
                                int budget)
{
  cur.method = "newton";
  for (int it = 0; it < budget; ++it) {
    if (cur.residual <= opt.tol) {
      cur.converged = true;
      return cur;
    }
    OpenLoopSolution nxt = sweep(grid, w, x0, linearized_attacker(w, mu, cur.Pa));
    // fraction to the boundary keeps the attacker strictly inside the caps
    double tau = 1.0;
    for (int t = 0; t < w.T; ++t)
      for (int i = 0; i < nxt.Pa.rows(); ++i) {
        const double d = nxt.Pa(i, t) - cur.Pa(i, t);
        const double slack = w.caps[i] - cur.Pa(i, t);
        if (d > 0.0 && std::isfinite(slack)) tau = std::min(tau, 0.99 * slack / d);
      }
    OpenLoopSolution trial = cur;
    for (int ls = 0; ls < 40; ++ls) {
      trial.Pd = cur.Pd + tau * (nxt.Pd - cur.Pd);
      trial.Pa = cur.Pa + tau * (nxt.Pa - cur.Pa);
      finish(grid, w, mu, x0, trial);
      if (trial.residual < cur.residual || tau < 1e-6) break;
      tau *= 0.5;
    }
    trial.iterations = cur.iterations + 1;
    if (!(trial.residual < cur.residual)) {
      cur.converged = cur.residual <= opt.tol;
      return cur;
    }
    cur = trial;
  }
  cur.converged = cur.residual <= opt.tol;
  return cur;
}

} // namespace

namespace {

OpenLoopSolution barrier_impl(const DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                              const OpenLoopSolution& init, const BarrierOptions& opt)
{
  const double mu = w.mu;
  const MatrixXd Ba = grid.Ba_v();

  OpenLoopSolution cur;
  cur.Pd = init.Pd;
  cur.Pa = init.Pa;
  // pull an infeasible start back inside the caps
  for (int t = 0; t < cur.Pa.cols(); ++t)
    for (int i = 0; i < cur.Pa.rows(); ++i)
      if (std::isfinite(w.caps[i])) {
        const double margin = std::max(1e-6, 1e-3 * std::abs(w.caps[i]));
        cur.Pa(i, t) = std::min(cur.Pa(i, t), w.caps[i] - margin);
      }
  finish(grid, w, mu, x0, cur);

  // damped fixed point on the PMP conditions
  double eta = opt.eta;
  int it = 0;
  MatrixXd Pd_t, Pa_t;
  for (; it < opt.max_iter && cur.residual > opt.tol && eta > 1e-4; ++it) {
    pmp_targets(grid, w, mu, Ba, cur.lambda, Pd_t, Pa_t);
    OpenLoopSolution trial = cur;
    trial.Pd = (1.0 - eta) * cur.Pd + eta * Pd_t;
    trial.Pa = (1.0 - eta) * cur.Pa + eta * Pa_t;
    finish(grid, w, mu, x0, trial);
    if (trial.residual > cur.residual) {
      eta *= 0.5;
      continue;
    }
    cur = trial;
  }
  cur.iterations = it;
  cur.method = "fixed-point";
  cur.converged = cur.residual <= opt.tol;

  if (!cur.converged && opt.newton_fallback)
    cur = barrier_newton(grid, w, mu, x0, cur, opt, 100);
  return cur;
}

} // namespace

OpenLoopSolution solve_barrier(const DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                               const OpenLoopSolution& init, const BarrierOptions& opt)
{
  w.validate(grid);
  OpenLoopSolution s = barrier_impl(grid, w, x0, init, opt);
  const auto rc = riccati_check(grid, w);
  s.certified = rc.defender_ok && rc.attacker_ok;
  return s;
}

OpenLoopSolution refine(const DiscreteGrid& grid, const GameWeights& w, const VectorXd& x0,
                        const BarrierOptions& opt)
{
  w.validate(grid);
  OpenLoopSolution s = sweep(grid, w, x0, plain_attacker(w));
  if (opt.check_riccati) {
    const auto rc = riccati_check(grid, w);
    s.certified = rc.defender_ok && rc.attacker_ok;
  }
  GameWeights wk = w;
  bool ok = true;
  int total = 0;
  const bool certified = s.certified;
  for (int round = 0; round < w.n_rounds; ++round) {
    s = barrier_impl(grid, wk, x0, s, opt);
    ok = ok && s.converged;
    total += s.iterations;
    if (round + 1 < w.n_rounds) wk.mu *= w.alpha;
  }
  s.converged = ok;
  s.certified = certified;
  s.iterations = total;
  return s;
}

} // namespace game
} // namespace botgrid
