#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace botgrid {
namespace epidemic {

/// Finite-support degree law. Entry i of p is the probability of degree d_min + i.
struct DegreeDistribution
{
  int d_min = 1;
  int k_max = 1;
  std::vector<double> p;
  double mean_k = 1.0;
  double mean_k2 = 1.0;

  int size() const { return k_max - d_min + 1; }
  int degree(int i) const { return d_min + i; }
  double threshold() const { return mean_k2 / mean_k; }
};

struct EpidemicParams
{
  double gamma = 0.2;
  double zeta = 0.5;
};

struct EpidemicState
{
  double t = 0.0;
  std::vector<double> I;
};

struct FleetParams
{
  double N_d = 1e7;
  double W_d = 5000.0;
  double power_base = 1e8;
  double capacity_override = 0.0;   // p.u.; used instead of N_d W_d / base when > 0

  double capacity() const { return capacity_override > 0.0 ? capacity_override : N_d * W_d / power_base; }
  static FleetParams paper_match() { FleetParams f; f.capacity_override = 297.0; return f; }
};

struct SteadyState
{
  double theta = 0.0;
  double I = 0.0;
};

class IntegrationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

DegreeDistribution scale_free_distribution(int d_min, int k_max);

/// Build from explicit weights (normalized here). Used by tests and custom configs.
DegreeDistribution make_distribution(int d_min, std::vector<double> weights);

EpidemicState uniform_state(const DegreeDistribution& dist, double I0, double t = 0.0);

double theta(const EpidemicState& state, const DegreeDistribution& dist);

EpidemicState integrate(const EpidemicState& state, const EpidemicParams& params,
                        const DegreeDistribution& dist, double dt, long steps);

/// Step guard 0.01 / max(gamma, zeta * k_max).
double default_dt(const EpidemicParams& params, const DegreeDistribution& dist);

double cyber_risk(const EpidemicState& state, const DegreeDistribution& dist);

double systemic_risk(double I, const FleetParams& fleet);

SteadyState steady_state(const EpidemicParams& params, const DegreeDistribution& dist);

/// f(Theta) whose root is the stationary link-infection probability.
double self_consistency(double th, const EpidemicParams& params, const DegreeDistribution& dist);

SteadyState steady_state_continuum(const EpidemicParams& params, int d_min);

} // namespace epidemic
} // namespace botgrid
