#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace botgrid {
namespace grid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Generator
{
  int id = 0;
  double M = 1.0;    // 2H / omega_s, p.u. power * s^2 / rad
  double D = 1.0;
  double KP = 1.0;
  double KI = 1.0;
};

struct Load
{
  int id = 0;
  double D = 1.0;
  double P_ls = 0.0;
};

struct Branch
{
  int a = 0;
  int b = 0;
  double B = 1.0;   // 1 / x
  double x = 1.0;   // reactance as read from the case file
};

struct BusSystem
{
  std::string name = "case";
  double base_mva = 100.0;
  double omega_nominal = 60.0;   // Hz
  double omega_max = 2.0;        // Hz
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<Branch> branches;
  std::vector<int> vulnerable;   // load bus ids
  std::map<int, double> rho;

  int n_gen() const { return (int)generators.size(); }
  int n_load() const { return (int)loads.size(); }
  /// positions of vulnerable buses inside `loads`
  std::vector<int> vulnerable_index() const;
  VectorXd rho_vulnerable() const;
  double omega_sync() const;   // rad/s

  /// throws CaseError naming the offending field
  void validate() const;
};

class CaseError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct Admittance
{
  MatrixXd full;   // gens first, then loads
  MatrixXd GG, GL, LG, LL;
  std::vector<std::string> warnings;
};

/// Physical uses phi = +dtheta/dt (stable); AsPrinted keeps the opposite sign on the theta rows.
enum class SignConvention { Physical, AsPrinted };

struct GridModel
{
  int NG = 0, NL = 0;
  MatrixXd A, B_d, B_a;
  VectorXd c;
  MatrixXd BLG, BLL;
  VectorXd DL, P_ls;
  std::vector<int> vuln;
  SignConvention convention = SignConvention::Physical;

  int n() const { return 2 * NG + NL; }
  int delta0() const { return 0; }
  int theta0() const { return NG; }
  int omega0() const { return NG + NL; }
};

enum class DiscretizationMethod { Exact, Euler };

struct DiscreteGrid
{
  int NG = 0, NL = 0;
  MatrixXd A, Bd, Ba;   // Ba has N_L columns
  VectorXd c;
  double Ts = 0.1;
  std::vector<int> vuln;

  int n() const { return (int)A.rows(); }
  int n_vuln() const { return (int)vuln.size(); }
  int omega0() const { return NG + NL; }
  /// columns of Ba for the vulnerable loads
  MatrixXd Ba_v() const;
  /// scatter a vulnerable-bus vector into all loads
  VectorXd expand_attack(const VectorXd& pa_v) const;

  /// fixed point of the affine map under constant inputs
  VectorXd equilibrium(const VectorXd& Pd = VectorXd(), const VectorXd& Pa = VectorXd()) const;
  VectorXd step(const VectorXd& x, const VectorXd& Pd, const VectorXd& Pa) const;
  /// same dynamics in coordinates z = x - x_ref
  DiscreteGrid shifted(const VectorXd& x_ref) const;
};

Admittance build_admittance(const BusSystem& system);

GridModel build_continuous(const BusSystem& system, SignConvention conv = SignConvention::Physical);

VectorXd recover_phi(const GridModel& model, const VectorXd& x, const VectorXd& P_ls,
                     const VectorXd& P_a);

DiscreteGrid discretize(const GridModel& model, double Ts,
                        DiscretizationMethod method = DiscretizationMethod::Exact);

/// all states x_0..x_T; Pd and Pa hold one column per step (Pa over all loads)
std::vector<VectorXd> simulate(const DiscreteGrid& grid, const VectorXd& x0, const MatrixXd& Pd,
                               const MatrixXd& Pa);

BusSystem load_case(const std::string& path);
BusSystem parse_case(const std::string& text, const std::string& origin = "<string>");
std::string serialize_case(const BusSystem& system);

/// minimal two-bus system used by tests and docs
BusSystem two_bus_example();

} // namespace grid
} // namespace botgrid
