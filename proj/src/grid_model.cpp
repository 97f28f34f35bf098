#include "botgrid/grid_model.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <set>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace botgrid {
namespace grid {

std::vector<int> BusSystem::vulnerable_index() const
{
  std::vector<int> idx;
  for (int v : vulnerable) {
    int pos = -1;
    for (int i = 0; i < n_load(); ++i)
      if (loads[i].id == v)
        pos = i;
    if (pos < 0)
      throw CaseError("vulnerable bus " + std::to_string(v) + " is not a load bus");
    idx.push_back(pos);
  }
  return idx;
}

VectorXd BusSystem::rho_vulnerable() const
{
  VectorXd r(vulnerable.size());
  for (size_t i = 0; i < vulnerable.size(); ++i) {
    auto it = rho.find(vulnerable[i]);
    r[i] = it == rho.end() ? 0.0 : it->second;
  }
  return r;
}

double BusSystem::omega_sync() const
{
  return 2.0 * std::numbers::pi * omega_nominal;
}

void BusSystem::validate() const
{
  auto fail = [](const std::string& m) { throw CaseError(m); };
  if (generators.empty()) fail("generators: at least one generator required");
  if (loads.empty()) fail("loads: at least one load bus required");
  if (!(omega_nominal > 0.0)) fail("omega_nominal must be > 0");
  if (!(omega_max > 0.0)) fail("omega_max must be > 0");
  if (!(base_mva > 0.0)) fail("base_mva must be > 0");

  std::set<int> ids;
  for (const auto& g : generators) {
    const std::string tag = "generator " + std::to_string(g.id);
    if (!ids.insert(g.id).second) fail(tag + ": duplicate bus id");
    if (!(g.M > 0.0)) fail(tag + ": inertia M must be > 0");
    if (!(g.D > 0.0)) fail(tag + ": damping D must be > 0");
    if (!(g.KP > 0.0)) fail(tag + ": KP must be > 0");
    if (!(g.KI > 0.0)) fail(tag + ": KI must be > 0");
  }
  std::set<int> load_ids;
  for (const auto& l : loads) {
    const std::string tag = "load " + std::to_string(l.id);
    if (!ids.insert(l.id).second) fail(tag + ": duplicate bus id");
    if (!(l.D > 0.0)) fail(tag + ": damping D must be > 0");
    load_ids.insert(l.id);
  }
  for (const auto& b : branches) {
    if (!ids.count(b.a) || !ids.count(b.b))
      fail("branch " + std::to_string(b.a) + "-" + std::to_string(b.b) + ": unknown bus");
    if (b.a == b.b) fail("branch " + std::to_string(b.a) + ": self loop");
    if (!(b.B > 0.0))
      fail("branch " + std::to_string(b.a) + "-" + std::to_string(b.b) + ": susceptance must be > 0");
  }

  double total = 0.0;
  std::set<int> vset(vulnerable.begin(), vulnerable.end());
  if (vset.size() != vulnerable.size()) fail("vulnerable: duplicate bus");
  for (int v : vulnerable)
    if (!load_ids.count(v)) fail("vulnerable: bus " + std::to_string(v) + " is not a load bus");
  for (const auto& [id, r] : rho) {
    if (r < 0.0) fail("rho: negative fraction at bus " + std::to_string(id));
    if (r > 0.0 && !vset.count(id)) fail("rho: bus " + std::to_string(id) + " is not vulnerable");
    total += r;
  }
  if (!vulnerable.empty() && std::abs(total - 1.0) > 1e-9) fail("rho: fractions must sum to 1");
}

namespace {

// bus id -> matrix position with generators first
std::map<int, int> bus_order(const BusSystem& s)
{
  std::map<int, int> pos;
  int k = 0;
  for (const auto& g : s.generators) pos[g.id] = k++;
  for (const auto& l : s.loads) pos[l.id] = k++;
  return pos;
}

} // namespace

Admittance build_admittance(const BusSystem& system)
{
  const auto pos = bus_order(system);
  const int N = (int)pos.size();
  const int NG = system.n_gen();
  Admittance Y;
  Y.full = MatrixXd::Zero(N, N);

  std::set<std::pair<int, int>> seen;
  std::vector<std::vector<int>> adj(N);
  for (const auto& br : system.branches) {
    auto ia = pos.find(br.a), ib = pos.find(br.b);
    if (ia == pos.end() || ib == pos.end())
      throw CaseError("branch references unknown bus");
    const int i = ia->second, j = ib->second;
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second)
      Y.warnings.push_back("duplicate branch " + std::to_string(br.a) + "-" + std::to_string(br.b) +
                           ": susceptances summed");
    Y.full(i, i) += br.B;
    Y.full(j, j) += br.B;
    Y.full(i, j) -= br.B;
    Y.full(j, i) -= br.B;
    adj[i].push_back(j);
    adj[j].push_back(i);
  }

  std::vector<char> mark(N, 0);
  std::queue<int> q;
  q.push(0);
  mark[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!mark[v]) {
        mark[v] = 1;
        ++reached;
        q.push(v);
      }
  }
  if (reached != N)
    throw CaseError("branch graph is disconnected (" + std::to_string(N - reached) +
                    " buses unreachable)");

  const int NL = N - NG;
  Y.GG = Y.full.topLeftCorner(NG, NG);
  Y.GL = Y.full.topRightCorner(NG, NL);
  Y.LG = Y.full.bottomLeftCorner(NL, NG);
  Y.LL = Y.full.bottomRightCorner(NL, NL);
  return Y;
}

GridModel build_continuous(const BusSystem& system, SignConvention conv)
{
  system.validate();
  const Admittance Y = build_admittance(system);
  GridModel m;
  m.NG = system.n_gen();
  m.NL = system.n_load();
  m.convention = conv;
  m.vuln = system.vulnerable_index();
  const int NG = m.NG, NL = m.NL, n = m.n();

  VectorXd Minv(NG), KI(NG), KPD(NG);
  for (int i = 0; i < NG; ++i) {
    const auto& g = system.generators[i];
    Minv[i] = 1.0 / g.M;
    KI[i] = g.KI;
    KPD[i] = g.KP + g.D;
  }
  m.DL.resize(NL);
  m.P_ls.resize(NL);
  for (int i = 0; i < NL; ++i) {
    m.DL[i] = system.loads[i].D;
    m.P_ls[i] = system.loads[i].P_ls;
  }
  m.BLG = Y.LG;
  m.BLL = Y.LL;

  // theta rows: D^L phi = -(B^LG delta + B^LL theta + P^LS + P^a), with theta' = s * phi
  const double s = conv == SignConvention::Physical ? 1.0 : -1.0;
  const VectorXd DLinv = m.DL.cwiseInverse();

  m.A = MatrixXd::Zero(n, n);
  m.A.block(0, m.omega0(), NG, NG).setIdentity();
  m.A.block(m.theta0(), 0, NL, NG) = -s * (DLinv.asDiagonal() * Y.LG);
  m.A.block(m.theta0(), m.theta0(), NL, NL) = -s * (DLinv.asDiagonal() * Y.LL);
  MatrixXd KIB = Y.GG;
  KIB.diagonal() += KI;
  m.A.block(m.omega0(), 0, NG, NG) = -(Minv.asDiagonal() * KIB);
  m.A.block(m.omega0(), m.theta0(), NG, NL) = -(Minv.asDiagonal() * Y.GL);
  m.A.block(m.omega0(), m.omega0(), NG, NG) = -MatrixXd(Minv.cwiseProduct(KPD).asDiagonal());

  m.B_d = MatrixXd::Zero(n, NG);
  m.B_d.block(m.omega0(), 0, NG, NG) = Minv.asDiagonal();
  m.B_a = MatrixXd::Zero(n, NL);
  m.B_a.block(m.theta0(), 0, NL, NL) = -s * MatrixXd(DLinv.asDiagonal());
  m.c = VectorXd::Zero(n);
  m.c.segment(m.theta0(), NL) = -s * DLinv.cwiseProduct(m.P_ls);
  return m;
}

VectorXd recover_phi(const GridModel& model, const VectorXd& x, const VectorXd& P_ls,
                     const VectorXd& P_a)
{
  const VectorXd flow = model.BLG * x.segment(model.delta0(), model.NG) +
                        model.BLL * x.segment(model.theta0(), model.NL);
  return -(flow + P_ls + P_a).cwiseQuotient(model.DL);
}

DiscreteGrid discretize(const GridModel& model, double Ts, DiscretizationMethod method)
{
  if (!(Ts > 0.0))
    throw std::invalid_argument("sampling time must be positive");
  const int n = model.n(), NG = model.NG, NL = model.NL;
  DiscreteGrid d;
  d.NG = NG;
  d.NL = NL;
  d.Ts = Ts;
  d.vuln = model.vuln;

  if (method == DiscretizationMethod::Euler) {
    d.A = MatrixXd::Identity(n, n) + Ts * model.A;
    d.Bd = Ts * model.B_d;
    d.Ba = Ts * model.B_a;
    d.c = Ts * model.c;
    return d;
  }

  // zero-order hold through the exponential of the augmented generator
  const int m = n + NG + NL + 1;
  MatrixXd Z = MatrixXd::Zero(m, m);
  Z.topLeftCorner(n, n) = model.A;
  Z.block(0, n, n, NG) = model.B_d;
  Z.block(0, n + NG, n, NL) = model.B_a;
  Z.block(0, n + NG + NL, n, 1) = model.c;
  const MatrixXd E = (Z * Ts).exp();
  d.A = E.topLeftCorner(n, n);
  d.Bd = E.block(0, n, n, NG);
  d.Ba = E.block(0, n + NG, n, NL);
  d.c = E.block(0, n + NG + NL, n, 1);
  return d;
}

MatrixXd DiscreteGrid::Ba_v() const
{
  MatrixXd B(n(), n_vuln());
  for (int j = 0; j < n_vuln(); ++j)
    B.col(j) = Ba.col(vuln[j]);
  return B;
}

VectorXd DiscreteGrid::expand_attack(const VectorXd& pa_v) const
{
  VectorXd pa = VectorXd::Zero(NL);
  for (int j = 0; j < n_vuln(); ++j)
    pa[vuln[j]] = pa_v[j];
  return pa;
}

VectorXd DiscreteGrid::equilibrium(const VectorXd& Pd, const VectorXd& Pa) const
{
  VectorXd rhs = c;
  if (Pd.size()) rhs += Bd * Pd;
  if (Pa.size()) rhs += Ba * Pa;
  const MatrixXd IA = MatrixXd::Identity(n(), n()) - A;
  return IA.partialPivLu().solve(rhs);
}

VectorXd DiscreteGrid::step(const VectorXd& x, const VectorXd& Pd, const VectorXd& Pa) const
{
  VectorXd nx = A * x + c;
  if (Pd.size()) nx.noalias() += Bd * Pd;
  if (Pa.size()) nx.noalias() += Ba * Pa;
  return nx;
}

DiscreteGrid DiscreteGrid::shifted(const VectorXd& x_ref) const
{
  DiscreteGrid s = *this;
  s.c = A * x_ref + c - x_ref;
  return s;
}

std::vector<VectorXd> simulate(const DiscreteGrid& grid, const VectorXd& x0, const MatrixXd& Pd,
                               const MatrixXd& Pa)
{
  const long T = std::max(Pd.cols(), Pa.cols());
  if ((Pd.cols() && Pd.cols() != T) || (Pa.cols() && Pa.cols() != T))
    throw std::invalid_argument("input sequences have different lengths");
  std::vector<VectorXd> xs;
  xs.reserve(T + 1);
  xs.push_back(x0);
  for (long t = 0; t < T; ++t) {
    const VectorXd pd = Pd.cols() ? VectorXd(Pd.col(t)) : VectorXd();
    const VectorXd pa = Pa.cols() ? VectorXd(Pa.col(t)) : VectorXd();
    xs.push_back(grid.step(xs.back(), pd, pa));
  }
  return xs;
}

BusSystem two_bus_example()
{
  BusSystem s;
  s.name = "two_bus";
  s.generators.push_back({1, 1.0, 1.0, 1.0, 1.0});
  s.loads.push_back({2, 1.0, 0.0});
  s.branches.push_back({1, 2, 1.0, 1.0});
  s.vulnerable = {2};
  s.rho[2] = 1.0;
  return s;
}

} // namespace grid
} // namespace botgrid
