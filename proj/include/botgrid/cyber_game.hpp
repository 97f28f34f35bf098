#pragma once

#include <optional>
#include <string>
#include <vector>

#include "botgrid/epidemic.hpp"

namespace botgrid {
namespace cyber {

/// Effort-response curve gamma(u_d) or zeta(u_a).
struct EffortCurve
{
  enum class Kind { Linear, SqrtOffset, LogOffset };

  Kind kind = Kind::Linear;
  double scale = 1.0;   // slope for Linear; multiplier of sqrt / log otherwise
  double offset = 0.1;

  static EffortCurve linear(double slope, double offset) { return {Kind::Linear, slope, offset}; }
  static EffortCurve sqrt_offset(double offset, double scale = 1.0) { return {Kind::SqrtOffset, scale, offset}; }
  static EffortCurve log_offset(double scale, double offset) { return {Kind::LogOffset, scale, offset}; }

  double value(double u) const;
  double d1(double u) const;
  double d2(double u) const;

  /// throws unless increasing, concave and positive at zero
  void validate(const char* name) const;
};

/// C(u) = c * u^2
struct CostCurve
{
  double c = 0.2;

  double value(double u) const { return c * u * u; }
  double d1(double u) const { return 2.0 * c * u; }
  double d2(double) const { return 2.0 * c; }
};

struct CyberGameSpec
{
  EffortCurve gamma_curve = EffortCurve::sqrt_offset(0.1);
  EffortCurve zeta_curve = EffortCurve::log_offset(2.5, 0.1);
  CostCurve cost_d{0.2};
  CostCurve cost_a{0.2};
  int d_min = 1;
  double u_max_d = 100.0;
  double u_max_a = 100.0;

  void validate() const;
};

struct CyberEquilibrium
{
  double u_d = 0.0;
  double u_a = 0.0;
  double I_bar = 0.0;
  double R_bar = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;   // max step size per iteration
};

struct RiskDerivs
{
  double I, dI_dud, dI_dua, d2I_dud2, d2I_dua2;
};

class ConvergenceError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

double risk_bar(const CyberGameSpec& spec, double u_d, double u_a);
RiskDerivs risk_derivs(const CyberGameSpec& spec, double u_d, double u_a);

bool epidemic_free_region(const CyberGameSpec& spec, const epidemic::DegreeDistribution& dist,
                          double u_d, double u_a);

/// Linear curves only. Empty when the attacker objective is concave for every u_a.
std::optional<double> inflection_point(const CyberGameSpec& spec, double u_d);

double defender_cost(const CyberGameSpec& spec, double u_d, double u_a);
double attacker_payoff(const CyberGameSpec& spec, double u_d, double u_a);

double best_response_defender(const CyberGameSpec& spec, double u_a);
double best_response_attacker(const CyberGameSpec& spec, double u_d);

/// C_a = c_a/2 u^2 with linear zeta of slope k_a.
bool unique_br_condition(double k_a, double c_a);
bool unique_br_condition(const CyberGameSpec& spec);

struct NashOptions
{
  double u_d0 = 0.5;
  double u_a0 = 0.5;
  double eps = 1e-8;
  int max_iter = 200;
};

CyberEquilibrium nash_equilibrium(const CyberGameSpec& spec, const NashOptions& opt = {},
                                  const epidemic::FleetParams& fleet = {});

} // namespace cyber
} // namespace botgrid
