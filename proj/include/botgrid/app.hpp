#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "botgrid/cyber_game.hpp"
#include "botgrid/epidemic.hpp"
#include "botgrid/grid_model.hpp"
#include "botgrid/physical_game.hpp"
#include "botgrid/sim_engine.hpp"

namespace botgrid {
namespace app {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct EpidemicConfig
{
  int d_min = 1;
  int k_max = 100;
  double gamma = 0.2;
  std::vector<double> zeta_sweep{0.2, 0.25, 0.3, 0.4, 0.5};
  double I0 = 0.05;
  double t_end = 100.0;
  double dt = 0.0;        // 0 selects the default guard
  double sample_every = 1.0;
};

struct CyberConfig
{
  cyber::CyberGameSpec spec;
  cyber::NashOptions nash;
  double br_lo = 0.0;
  double br_hi = 2.0;
  int br_points = 101;
};

struct GridConfig
{
  std::string case_path;
  double Ts = 0.1;
  grid::DiscretizationMethod method = grid::DiscretizationMethod::Exact;
  grid::SignConvention convention = grid::SignConvention::Physical;
  std::optional<double> gen_damping;    // overrides every generator
  std::optional<double> load_damping;   // overrides every load
};

struct WeightsConfig
{
  double q_delta = 1.0, q_theta = 1.0, q_omega = 5.0, qf_scale = 5.0;
  double r_d = 0.2, r_a = 0.05;
  int T = 20;
  double mu0 = 2.0, alpha = 5.0;
  int rounds = 6;
  double eta = 0.5, tol = 1e-8;
};

struct ScenarioSection
{
  sim::AttackScenario scenario;
  double perturb_hz = 0.0;   // amplitude of the seeded uniform frequency offsets
};

struct OutputConfig
{
  std::string dir = "out";
  bool csv = true;
  bool json = true;
};

struct ScenarioConfig
{
  std::string name = "custom";
  std::string command;   // preset's natural subcommand, informational
  EpidemicConfig epidemic;
  CyberConfig cyber;
  epidemic::FleetParams fleet;
  GridConfig grid;
  WeightsConfig weights;
  ScenarioSection scenario;
  OutputConfig output;
  json source;
};

/// base_dir resolves relative case paths
ScenarioConfig parse_config(const json& j, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);

std::vector<std::string> preset_names();
json preset_json(const std::string& name);
ScenarioConfig preset(const std::string& name);

// assembled model objects
struct Plant
{
  grid::BusSystem system;
  grid::GridModel model;
  grid::DiscreteGrid grid;
  game::GameWeights weights;
};

Plant build_plant(const ScenarioConfig& cfg);

/// uniform offsets in [-a, a] Hz, reproducible across platforms
Eigen::VectorXd seeded_perturbation(int n, double amplitude, std::uint64_t seed);

// output helpers
std::string fmt_num(double v);   // 9 significant digits, scientific
void write_text(const std::string& path, const std::string& body);

struct RunOptions
{
  std::string out_dir;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool assert_safety = false;
};

enum ExitCode { kOk = 0, kConfigError = 2, kNonConvergence = 3, kSafetyFailure = 4 };

int cmd_epidemic(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out);
int cmd_cyber_ne(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out);
int cmd_run(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out);
int cmd_validate(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out);

/// simulation of a config with the seeded initial state; used by cmd_run and the tests
sim::SimulationLog simulate_config(const ScenarioConfig& cfg, const Plant& plant, std::uint64_t seed);

} // namespace app
} // namespace botgrid
