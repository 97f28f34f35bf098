#include "botgrid/cyber_game.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace botgrid {
namespace cyber {

double EffortCurve::value(double u) const
{
  switch (kind) {
  case Kind::Linear: return offset + scale * u;
  case Kind::SqrtOffset: return offset + scale * std::sqrt(u);
  case Kind::LogOffset: return offset + scale * std::log1p(u);
  }
  return 0.0;
}

double EffortCurve::d1(double u) const
{
  switch (kind) {
  case Kind::Linear: return scale;
  case Kind::SqrtOffset:
    return u > 0.0 ? 0.5 * scale / std::sqrt(u) : std::numeric_limits<double>::infinity();
  case Kind::LogOffset: return scale / (1.0 + u);
  }
  return 0.0;
}

double EffortCurve::d2(double u) const
{
  switch (kind) {
  case Kind::Linear: return 0.0;
  case Kind::SqrtOffset:
    return u > 0.0 ? -0.25 * scale / (u * std::sqrt(u)) : -std::numeric_limits<double>::infinity();
  case Kind::LogOffset: return -scale / ((1.0 + u) * (1.0 + u));
  }
  return 0.0;
}

void EffortCurve::validate(const char* name) const
{
  if (!(offset > 0.0))
    throw std::invalid_argument(std::string(name) + ": offset must be > 0");
  if (kind == Kind::Linear ? scale < 0.0 : !(scale > 0.0))
    throw std::invalid_argument(std::string(name) + ": scale must be positive");
}

void CyberGameSpec::validate() const
{
  gamma_curve.validate("gamma_curve");
  zeta_curve.validate("zeta_curve");
  if (cost_d.c < 0.0 || cost_a.c < 0.0)
    throw std::invalid_argument("cost coefficients must be >= 0");
  if (d_min < 1)
    throw std::invalid_argument("d_min must be >= 1");
  if (!(u_max_d > 0.0) || !(u_max_a > 0.0))
    throw std::invalid_argument("u_max must be > 0");
}

static void check_efforts(double u_d, double u_a)
{
  if (u_d < 0.0 || u_a < 0.0)
    throw std::invalid_argument("effort levels must be nonnegative");
}

double risk_bar(const CyberGameSpec& spec, double u_d, double u_a)
{
  check_efforts(u_d, u_a);
  return std::exp(-spec.gamma_curve.value(u_d) / (spec.d_min * spec.zeta_curve.value(u_a)));
}

RiskDerivs risk_derivs(const CyberGameSpec& spec, double u_d, double u_a)
{
  check_efforts(u_d, u_a);
  const double d = spec.d_min;
  const double g = spec.gamma_curve.value(u_d), g1 = spec.gamma_curve.d1(u_d), g2 = spec.gamma_curve.d2(u_d);
  const double z = spec.zeta_curve.value(u_a), z1 = spec.zeta_curve.d1(u_a), z2 = spec.zeta_curve.d2(u_a);
  const double I = std::exp(-g / (d * z));

  // I = exp(-h), h = g / (d z)
  const double hd = g1 / (d * z), hdd = g2 / (d * z);
  const double ha = -g * z1 / (d * z * z);
  const double haa = -g / d * (z2 / (z * z) - 2.0 * z1 * z1 / (z * z * z));

  RiskDerivs r;
  r.I = I;
  r.dI_dud = -I * hd;
  r.dI_dua = -I * ha;
  r.d2I_dud2 = I * (hd * hd - hdd);
  r.d2I_dua2 = I * (ha * ha - haa);
  return r;
}

bool epidemic_free_region(const CyberGameSpec& spec, const epidemic::DegreeDistribution& dist,
                          double u_d, double u_a)
{
  check_efforts(u_d, u_a);
  return spec.gamma_curve.value(u_d) >= dist.threshold() * spec.zeta_curve.value(u_a);
}

std::optional<double> inflection_point(const CyberGameSpec& spec, double u_d)
{
  if (spec.gamma_curve.kind != EffortCurve::Kind::Linear ||
      spec.zeta_curve.kind != EffortCurve::Kind::Linear)
    throw std::invalid_argument("inflection_point requires linear effort curves");
  const double d = spec.d_min;
  const double g = spec.gamma_curve.value(u_d);
  const double z0 = spec.zeta_curve.offset, ka = spec.zeta_curve.scale;
  if (z0 >= g / (2.0 * d) || ka <= 0.0)
    return std::nullopt;
  return (g - 2.0 * d * z0) / (2.0 * d * ka);
}

double defender_cost(const CyberGameSpec& spec, double u_d, double u_a)
{
  return spec.cost_d.value(u_d) + risk_bar(spec, u_d, u_a);
}

double attacker_payoff(const CyberGameSpec& spec, double u_d, double u_a)
{
  return -spec.cost_a.value(u_a) + risk_bar(spec, u_d, u_a);
}

namespace {

struct Objective1D
{
  std::function<double(double)> f, df, d2f;
};

// Safeguarded Newton on f' inside a bracket [a, b] with f'(a) < 0 <= f'(b).
double refine_bracket(const Objective1D& ob, double a, double b)
{
  double u = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double g = ob.df(u);
    if (std::abs(g) <= 1e-13)
      break;
    if (g < 0.0)
      a = u;
    else
      b = u;
    const double h = ob.d2f(u);
    double next = (h > 0.0 && std::isfinite(h)) ? u - g / h : 0.5 * (a + b);
    // fall back to bisection when the Newton step leaves the bracket
    if (!(next > a && next < b))
      next = 0.5 * (a + b);
    if (b - a <= 1e-15 * std::max(1.0, std::abs(u)))
      break;
    u = next;
  }
  return u;
}

// Global minimizer on [lo, hi]: bracket stationary points on a prescan grid, refine, compare.
double minimize_1d(const Objective1D& ob, double lo, double hi)
{
  constexpr int n = 256;
  std::vector<double> u(n + 1), g(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double s = double(j) / n;
    u[j] = lo + (hi - lo) * s * s;   // denser near zero where the curves bend
    g[j] = ob.df(u[j]);
  }

  std::vector<double> cand{lo, hi};
  for (int j = 0; j < n; ++j)
    if (g[j] < 0.0 && g[j + 1] >= 0.0)
      cand.push_back(g[j + 1] == 0.0 ? u[j + 1] : refine_bracket(ob, u[j], u[j + 1]));

  std::sort(cand.begin(), cand.end());
  double best = cand.front(), fbest = ob.f(best);
  for (double c : cand) {
    const double fc = ob.f(c);
    // ties go to the smallest effort
    if (fc < fbest - 1e-15 * std::max(1.0, std::abs(fbest))) {
      fbest = fc;
      best = c;
    }
  }
  return best;
}

} // namespace

double best_response_defender(const CyberGameSpec& spec, double u_a)
{
  check_efforts(0.0, u_a);
  Objective1D ob{
    [&](double u) { return defender_cost(spec, u, u_a); },
    [&](double u) { return spec.cost_d.d1(u) + risk_derivs(spec, u, u_a).dI_dud; },
    [&](double u) { return spec.cost_d.d2(u) + risk_derivs(spec, u, u_a).d2I_dud2; }};
  return minimize_1d(ob, 0.0, spec.u_max_d);
}

double best_response_attacker(const CyberGameSpec& spec, double u_d)
{
  check_efforts(u_d, 0.0);
  Objective1D ob{
    [&](double u) { return -attacker_payoff(spec, u_d, u); },
    [&](double u) { return spec.cost_a.d1(u) - risk_derivs(spec, u_d, u).dI_dua; },
    [&](double u) { return spec.cost_a.d2(u) - risk_derivs(spec, u_d, u).d2I_dua2; }};
  return minimize_1d(ob, 0.0, spec.u_max_a);
}

bool unique_br_condition(double k_a, double c_a)
{
  // exact boundary k_a = e c_a must count as satisfied despite rounding
  return std::exp(-1.0) * k_a >= c_a * (1.0 - 1e-14);
}

bool unique_br_condition(const CyberGameSpec& spec)
{
  if (spec.zeta_curve.kind != EffortCurve::Kind::Linear)
    throw std::invalid_argument("unique_br_condition requires a linear zeta curve");
  return unique_br_condition(spec.zeta_curve.scale, 2.0 * spec.cost_a.c);
}

CyberEquilibrium nash_equilibrium(const CyberGameSpec& spec, const NashOptions& opt,
                                  const epidemic::FleetParams& fleet)
{
  spec.validate();
  CyberEquilibrium eq;
  double ud = opt.u_d0, ua = opt.u_a0;
  for (int i = 0; i < opt.max_iter; ++i) {
    const double bd = best_response_defender(spec, ua);
    const double ba = best_response_attacker(spec, ud);
    const double step = std::max(std::abs(bd - ud), std::abs(ba - ua));
    eq.trace.push_back(step);
    eq.iterations = i + 1;
    ud = bd;
    ua = ba;
    if (step < opt.eps) {
      eq.converged = true;
      break;
    }
  }
  eq.u_d = ud;
  eq.u_a = ua;
  eq.I_bar = risk_bar(spec, ud, ua);
  eq.R_bar = epidemic::systemic_risk(eq.I_bar, fleet);
  return eq;
}

} // namespace cyber
} // namespace botgrid
