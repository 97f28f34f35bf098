#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "botgrid/physical_game.hpp"
#include "oracles.hpp"

using namespace botgrid;
using namespace botgrid::game;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

grid::DiscreteGrid scalar_grid(double a, double bd, double ba)
{
  grid::DiscreteGrid g;
  g.NG = 1;
  g.NL = 1;
  g.A = MatrixXd::Constant(1, 1, a);
  g.Bd = MatrixXd::Constant(1, 1, bd);
  g.Ba = MatrixXd::Constant(1, 1, ba);
  g.c = VectorXd::Zero(1);
  g.vuln = {0};
  return g;
}

GameWeights scalar_weights(double q, double qf, double rd, double ra, int T)
{
  GameWeights w;
  w.Q = MatrixXd::Constant(1, 1, q);
  w.Qf = MatrixXd::Constant(1, 1, qf);
  w.Rd = VectorXd::Constant(1, rd);
  w.Ra = VectorXd::Constant(1, ra);
  w.T = T;
  w.caps = VectorXd::Constant(1, std::numeric_limits<double>::infinity());
  return w;
}

double rel(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

// attacker Hamiltonian in one coordinate
double h_att(double r, double v, double b, double mu, double P)
{
  return -r * P * P + b * P + std::log(v - P) / mu;
}

} // namespace

TEST_CASE("scalar Riccati steps")
{
  const auto g = scalar_grid(1.0, 1.0, 1.0);
  auto w = scalar_weights(1.0, 1.0, 1.0, 1.0, 1);
  auto rc = riccati_check(g, w);
  CHECK(rc.defender_ok);
  CHECK(rc.Sd[1](0, 0) == 1.0);
  CHECK(rc.defender_min_eig == doctest::Approx(2.0));
  CHECK(rc.Sd[0](0, 0) == doctest::Approx(1.5).epsilon(1e-15));

  w.Ra[0] = 0.5;
  rc = riccati_check(g, w);
  CHECK_FALSE(rc.attacker_ok);
  CHECK(rc.attacker_min_eig == doctest::Approx(-0.5));
}

TEST_CASE("Riccati conditions on IEEE-39 with the reference weights")
{
  const auto& P = oracle::ieee39_plant();
  const auto rc = riccati_check(P.grid, oracle::reference_weights(P.grid));
  CHECK(rc.defender_ok);
  CHECK(rc.attacker_ok);
  CHECK(rc.attacker_min_eig > 0.0);
}

TEST_CASE("stationary saddle at the operating point")
{
  const auto& P = oracle::ieee39_plant();
  const auto z = P.grid.shifted(P.grid.equilibrium());
  const auto s = solve_unconstrained(z, oracle::reference_weights(z), VectorXd::Zero(z.n()));
  CHECK(s.Pd.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(s.Pa.cwiseAbs().maxCoeff() <= 1e-12);
  for (int t = 1; t <= s.Pd.cols(); ++t) CHECK(s.lambda[t].cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("unconstrained solution meets the optimality conditions")
{
  for (int which = 0; which < 2; ++which) {
    const auto g = which == 0 ? oracle::toy_grid() : oracle::ieee39_plant().grid;
    const auto w = which == 0 ? oracle::toy_weights(g) : oracle::reference_weights(g);
    const VectorXd x0 = oracle::perturbed_start(g, 0.3, 4);
    const auto s = solve_unconstrained(g, w, x0);
    CHECK(s.certified);
    CHECK(s.residual <= 1e-8);
    CHECK(oracle::stationarity_defect(g, w, 0.0, x0, s.Pd, s.Pa) <= 1e-8);
    CHECK(pmp_residual(g, w, 0.0, x0, s) <= 1e-8);
  }
}

TEST_CASE("large attacker weight reduces to the LQR defender")
{
  for (int which = 0; which < 2; ++which) {
    const auto g = which == 0 ? oracle::toy_grid() : oracle::ieee39_plant().grid;
    auto w = which == 0 ? oracle::toy_weights(g) : oracle::reference_weights(g);
    w.Ra *= 1e6;
    const VectorXd x0 = oracle::perturbed_start(g, 0.3, 9);
    const MatrixXd ref = oracle::lqr_defender(g, w, x0);
    CHECK(rel(solve_unconstrained(g, w, x0).Pd, ref) <= 1e-6);
    CHECK(rel(refine(g, w, x0).Pd, ref) <= 1e-6);
  }
}

TEST_CASE("unilateral deviations from the unconstrained saddle")
{
  const auto& g = oracle::ieee39_plant().grid;
  const auto w = oracle::reference_weights(g);
  const VectorXd x0 = oracle::perturbed_start(g, 0.3, 5);
  const auto s = solve_unconstrained(g, w, x0);
  const double J = objective(g, w, x0, s.Pd, s.Pa);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> N(0.0, 1.0);
  int bad_d = 0, bad_a = 0;
  for (int n = 0; n < 100; ++n) {
    const double scale = std::pow(10.0, -3.0 + 3.0 * n / 99.0);
    MatrixXd dPd = s.Pd, dPa = s.Pa;
    for (int i = 0; i < dPd.size(); ++i) dPd.data()[i] = scale * N(rng);
    for (int i = 0; i < dPa.size(); ++i) dPa.data()[i] = scale * N(rng);
    if (objective(g, w, x0, s.Pd + dPd, s.Pa) < J - 1e-9 * std::abs(J)) ++bad_d;
    if (objective(g, w, x0, s.Pd, s.Pa + dPa) > J + 1e-9 * std::abs(J)) ++bad_a;
  }
  CHECK(bad_d == 0);
  CHECK(bad_a == 0);
}

TEST_CASE("attacker root")
{
  const double r = 0.3, mu = 4.0;
  CHECK(attacker_root(r, 0.0, 0.0, mu) == doctest::Approx(-std::sqrt(8 * r / mu) / (4 * r)).epsilon(1e-14));
  CHECK(attacker_root(r, 0.0, 0.0, mu) < 0.0);
  CHECK(attacker_root(r, std::numeric_limits<double>::infinity(), 0.7, mu) == doctest::Approx(0.7 / (2 * r)));

  // large mu recovers the interior stationary point
  double prev = 1e300;
  for (double m = 1.0; m < 1e12; m *= 10.0) {
    const double p = attacker_root(r, 5.0, 0.9, m);
    const double gap = std::abs(p - 0.9 / (2 * r));
    CHECK(gap <= prev);
    prev = gap;
  }
  CHECK(prev <= 1e-10);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const double rr = 0.01 + U(rng), v = 10.0 * U(rng), b = 20.0 * (U(rng) - 0.5), m = std::pow(10.0, 4.0 * U(rng) - 1.0);
    const double P = attacker_root(rr, v, b, m);
    REQUIRE(P < v);
    const double quad = 2 * rr * P * P - (2 * rr * v + b) * P + (v * b - 1.0 / m);
    const double scale = std::max({1.0, 2 * rr * P * P, std::abs((2 * rr * v + b) * P), std::abs(v * b)});
    CHECK(std::abs(quad) <= 1e-12 * scale);
    // dense one-sided scan below the cap
    const double hP = h_att(rr, v, b, m, P);
    const double lo = std::min(P, 0.0) - 20.0;
    for (int j = 0; j < 4000; ++j) {
      const double q = lo + (v - lo) * (j + 0.5) / 4000.0;
      CHECK(h_att(rr, v, b, m, q) <= hP + 1e-12 * std::max(1.0, std::abs(hP)));
    }
  }
  CHECK_THROWS(attacker_root(0.0, 1.0, 1.0, 1.0));
}

TEST_CASE("barrier with inactive caps matches the unconstrained saddle")
{
  const auto& g = oracle::ieee39_plant().grid;
  auto w = oracle::reference_weights(g);
  const VectorXd x0 = oracle::perturbed_start(g, 0.3, 6);
  const auto u = solve_unconstrained(g, w, x0);
  w.caps = VectorXd::Constant(g.n_vuln(), 1e9);
  const auto b = solve_barrier(g, w, x0, u);
  CHECK(b.converged);
  CHECK(rel(b.Pd, u.Pd) <= 1e-6);
  CHECK(rel(b.Pa, u.Pa) <= 1e-6);
}

TEST_CASE("binding caps")
{
  const auto& g = oracle::ieee39_plant().grid;
  auto w = oracle::reference_weights(g);
  w.caps = VectorXd::Constant(g.n_vuln(), 1.0);
  const VectorXd x0 = oracle::perturbed_start(g, 0.3, 7);
  const auto s = refine(g, w, x0);
  REQUIRE(s.converged);
  CHECK(s.residual <= 1e-8);
  CHECK(s.Pa.maxCoeff() > 0.9);   // the caps actually bind
  for (int t = 0; t < s.Pa.cols(); ++t)
    for (int i = 0; i < s.Pa.rows(); ++i) CHECK(s.Pa(i, t) < w.caps[i]);

  // best responses recomputed from an independent costate pass
  CHECK(oracle::stationarity_defect(g, w, s.mu, x0, s.Pd, s.Pa) <= 1e-8);

  // saddle ordering under caps with feasible unilateral deviations
  const double J = barrier_objective(g, w, s.mu, x0, s.Pd, s.Pa);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> N(0.0, 1.0);
  int bad_a = 0, bad_d = 0;
  for (int n = 0; n < 200; ++n) {
    const double scale = std::pow(10.0, -4.0 + 3.0 * n / 199.0);
    MatrixXd Pa = s.Pa, Pd = s.Pd;
    for (int i = 0; i < Pa.size(); ++i) {
      const double d = scale * N(rng);
      Pa.data()[i] = std::min(Pa.data()[i] + d, 0.5 * (Pa.data()[i] + 1.0));
    }
    for (int i = 0; i < Pd.size(); ++i) Pd.data()[i] += scale * N(rng);
    if (barrier_objective(g, w, s.mu, x0, s.Pd, Pa) > J + 1e-10 * std::abs(J)) ++bad_a;
    if (barrier_objective(g, w, s.mu, x0, Pd, s.Pa) < J - 1e-10 * std::abs(J)) ++bad_d;
  }
  CHECK(bad_a == 0);
  CHECK(bad_d == 0);
}

TEST_CASE("defender gradient against central differences")
{
  const auto& g = oracle::ieee39_plant().grid;
  auto w = oracle::reference_weights(g);
  w.caps = VectorXd::Constant(g.n_vuln(), 5.0);
  const double mu = 3.0;
  const VectorXd x0 = oracle::perturbed_start(g, 0.2, 8);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> N(0.0, 1.0);
  MatrixXd Pd(g.NG, w.T), Pa(g.n_vuln(), w.T);
  for (int i = 0; i < Pd.size(); ++i) Pd.data()[i] = N(rng);
  for (int i = 0; i < Pa.size(); ++i) Pa.data()[i] = std::min(2.0 * N(rng), 4.0);
  const auto x = rollout(g, x0, Pd, Pa);
  const auto lam = costates(g, w, x);
  for (int n = 0; n < 20; ++n) {
    const int t = n % w.T, i = (3 * n) % g.NG;
    const double analytic = 2.0 * w.Rd[i] * Pd(i, t) + g.Bd.col(i).dot(lam[t + 1]);
    const double h = 1e-4;
    MatrixXd Pp = Pd, Pm = Pd;
    Pp(i, t) += h;
    Pm(i, t) -= h;
    const double fd = (barrier_objective(g, w, mu, x0, Pp, Pa) - barrier_objective(g, w, mu, x0, Pm, Pa)) / (2 * h);
    CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
  }
}

TEST_CASE("refine with slack caps is independent of the barrier weight")
{
  const auto& g = oracle::ieee39_plant().grid;
  auto w = oracle::reference_weights(g);
  w.caps = VectorXd::Constant(g.n_vuln(), 1e7);
  const VectorXd x0 = oracle::perturbed_start(g, 0.3, 12);
  auto w1 = w;
  w1.n_rounds = 1;
  const auto a = refine(g, w1, x0), b = refine(g, w, x0);
  CHECK(rel(a.Pa, b.Pa) <= 1e-6);
  CHECK(rel(a.Pd, b.Pd) <= 1e-6);
}

TEST_CASE("cap slack tightens as the barrier weight grows")
{
  const auto g = oracle::toy_grid();
  auto w = oracle::toy_weights(g);
  // pick the frequency offset whose unconstrained attack is positive somewhere
  VectorXd x0 = g.equilibrium();
  x0[g.omega0()] += std::numbers::pi;
  if (solve_unconstrained(g, w, x0).Pa.maxCoeff() <= 0.0) x0[g.omega0()] -= 2.0 * std::numbers::pi;
  const auto free = solve_unconstrained(g, w, x0);
  w.caps = VectorXd::Constant(1, 0.5 * free.Pa.maxCoeff());
  REQUIRE(w.caps[0] > 0.0);
  OpenLoopSolution s = free;
  double prev = 1e300;
  for (double mu = 1.0; mu < 1e5; mu *= 5.0) {
    w.mu = mu;
    s = solve_barrier(g, w, x0, s);
    REQUIRE(s.converged);
    CHECK(s.residual <= 1e-8);
    const double slack = (w.caps[0] - s.Pa.array()).minCoeff();
    CHECK(slack > 0.0);
    CHECK(slack <= prev * (1.0 + 1e-9));
    prev = slack;
  }
}

TEST_CASE("uncertified games still return stationary solutions")
{
  const auto g = scalar_grid(0.9, 1.0, 1.0);
  auto w = scalar_weights(1.0, 1.0, 1.0, 0.6, 3);
  const VectorXd x0 = VectorXd::Constant(1, 1.0);
  for (const auto& s : {solve_unconstrained(g, w, x0), refine(g, w, x0)}) {
    CHECK_FALSE(s.certified);
    CHECK(s.residual <= 1e-8);
  }
  w.Ra[0] = 5.0;
  CHECK(solve_unconstrained(g, w, x0).certified);
}

TEST_CASE("weight validation")
{
  const auto g = oracle::toy_grid();
  auto w = oracle::reference_weights(g);
  w.Rd[0] = 0.0;
  CHECK_THROWS(solve_unconstrained(g, w, VectorXd::Zero(g.n())));
  w = oracle::reference_weights(g);
  w.Q(0, 1) = 1.0;
  CHECK_THROWS(solve_unconstrained(g, w, VectorXd::Zero(g.n())));
}
