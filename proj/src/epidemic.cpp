#include "botgrid/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace botgrid {
namespace epidemic {

namespace {

void finalize_moments(DegreeDistribution& d)
{
  d.mean_k = 0.0;
  d.mean_k2 = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    const double k = d.degree(i);
    d.mean_k += k * d.p[i];
    d.mean_k2 += k * k * d.p[i];
  }
}

void check_support(const EpidemicState& s, const DegreeDistribution& d)
{
  if ((int)s.I.size() != d.size())
    throw std::invalid_argument("epidemic state has " + std::to_string(s.I.size()) +
                                " degree classes, distribution has " + std::to_string(d.size()));
}

// dI_k/dt for all classes
void rhs(const std::vector<double>& I, const EpidemicParams& prm, const DegreeDistribution& d,
         std::vector<double>& out)
{
  double th = 0.0;
  for (int i = 0; i < d.size(); ++i)
    th += d.degree(i) * d.p[i] * I[i];
  th /= d.mean_k;
  for (int i = 0; i < d.size(); ++i)
    out[i] = -prm.gamma * I[i] + prm.zeta * d.degree(i) * (1.0 - I[i]) * th;
}

} // namespace

DegreeDistribution make_distribution(int d_min, std::vector<double> weights)
{
  if (d_min < 1)
    throw std::invalid_argument("d_min must be >= 1");
  if (weights.empty())
    throw std::invalid_argument("empty degree support");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("negative degree weight");
    total += w;
  }
  if (!(total > 0.0))
    throw std::invalid_argument("degree weights sum to zero");

  DegreeDistribution d;
  d.d_min = d_min;
  d.k_max = d_min + (int)weights.size() - 1;
  d.p = std::move(weights);
  for (double& v : d.p)
    v /= total;
  finalize_moments(d);
  return d;
}

DegreeDistribution scale_free_distribution(int d_min, int k_max)
{
  if (d_min < 1)
    throw std::invalid_argument("d_min must be >= 1");
  if (k_max < d_min)
    throw std::invalid_argument("k_max < d_min");
  std::vector<double> w(k_max - d_min + 1);
  for (int i = 0; i < (int)w.size(); ++i) {
    const double k = d_min + i;
    w[i] = 1.0 / (k * k * k);
  }
  return make_distribution(d_min, std::move(w));
}

EpidemicState uniform_state(const DegreeDistribution& dist, double I0, double t)
{
  if (I0 < 0.0 || I0 > 1.0)
    throw std::invalid_argument("initial infection outside [0,1]");
  return EpidemicState{t, std::vector<double>(dist.size(), I0)};
}

double theta(const EpidemicState& state, const DegreeDistribution& dist)
{
  check_support(state, dist);
  double s = 0.0;
  for (int i = 0; i < dist.size(); ++i)
    s += dist.degree(i) * dist.p[i] * state.I[i];
  return s / dist.mean_k;
}

double default_dt(const EpidemicParams& params, const DegreeDistribution& dist)
{
  return 0.01 / std::max(params.gamma, params.zeta * dist.k_max);
}

EpidemicState integrate(const EpidemicState& state, const EpidemicParams& params,
                        const DegreeDistribution& dist, double dt, long steps)
{
  check_support(state, dist);
  if (!(dt > 0.0))
    throw std::invalid_argument("dt must be positive");
  if (!(params.gamma > 0.0) || params.zeta < 0.0)
    throw std::invalid_argument("invalid epidemic rates");

  const int n = dist.size();
  std::vector<double> I = state.I, k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (long s = 0; s < steps; ++s) {
    rhs(I, params, dist, k1);
    for (int i = 0; i < n; ++i) tmp[i] = I[i] + 0.5 * dt * k1[i];
    rhs(tmp, params, dist, k2);
    for (int i = 0; i < n; ++i) tmp[i] = I[i] + 0.5 * dt * k2[i];
    rhs(tmp, params, dist, k3);
    for (int i = 0; i < n; ++i) tmp[i] = I[i] + dt * k3[i];
    rhs(tmp, params, dist, k4);
    for (int i = 0; i < n; ++i) {
      double v = I[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (v < -1e-9 || v > 1.0 + 1e-9)
        throw IntegrationError("I_k left [0,1] at degree " + std::to_string(dist.degree(i)) +
                               "; reduce dt");
      I[i] = std::clamp(v, 0.0, 1.0);
    }
  }
  return EpidemicState{state.t + dt * steps, std::move(I)};
}

double cyber_risk(const EpidemicState& state, const DegreeDistribution& dist)
{
  check_support(state, dist);
  double s = 0.0;
  for (int i = 0; i < dist.size(); ++i)
    s += dist.p[i] * state.I[i];
  return s;
}

double systemic_risk(double I, const FleetParams& fleet)
{
  return I * fleet.capacity();
}

double self_consistency(double th, const EpidemicParams& params, const DegreeDistribution& dist)
{
  double s = 0.0;
  for (int i = 0; i < dist.size(); ++i) {
    const double k = dist.degree(i);
    s += k * dist.p[i] * params.zeta * k / (params.gamma + params.zeta * k * th);
  }
  return s - dist.mean_k;
}

SteadyState steady_state(const EpidemicParams& params, const DegreeDistribution& dist)
{
  if (params.zeta <= 0.0 || params.gamma / params.zeta >= dist.threshold())
    return {};

  // f is strictly decreasing; f(0+) > 0 below threshold and f(1) < 0 always
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi)
      break;
    if (self_consistency(mid, params, dist) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  SteadyState ss;
  ss.theta = 0.5 * (lo + hi);
  for (int i = 0; i < dist.size(); ++i) {
    const double zk = params.zeta * dist.degree(i) * ss.theta;
    ss.I += dist.p[i] * zk / (params.gamma + zk);
  }
  return ss;
}

SteadyState steady_state_continuum(const EpidemicParams& params, int d_min)
{
  if (d_min < 1)
    throw std::invalid_argument("d_min must be >= 1");
  const double x = params.gamma / (d_min * params.zeta);
  const double e = std::exp(-x);
  return {x * e / (1.0 - e), e};
}

} // namespace epidemic
} // namespace botgrid
