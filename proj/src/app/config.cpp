#include "botgrid/app.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace botgrid {
namespace app {

namespace fs = std::filesystem;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double get_num(const json& j, const char* key, double def, const std::string& where)
{
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return v.get<double>();
}

int get_int(const json& j, const char* key, int def, const std::string& where)
{
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

std::string get_str(const json& j, const char* key, const std::string& def, const std::string& where)
{
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> get_vec(const json& j, const char* key, std::vector<double> def,
                            const std::string& where)
{
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + "." + key + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void positive(double v, const std::string& field)
{
  if (!(v > 0.0)) throw ConfigError(field + ": must be > 0");
}

cyber::EffortCurve parse_curve(const json& j, const cyber::EffortCurve& def, const std::string& where)
{
  check_keys(j, {"kind", "scale", "offset"}, where);
  cyber::EffortCurve c = def;
  if (j.contains("kind")) {
    const std::string k = get_str(j, "kind", "", where);
    if (k == "linear") c.kind = cyber::EffortCurve::Kind::Linear;
    else if (k == "sqrt_offset") c.kind = cyber::EffortCurve::Kind::SqrtOffset;
    else if (k == "log_offset") c.kind = cyber::EffortCurve::Kind::LogOffset;
    else throw ConfigError(where + ".kind: expected linear, sqrt_offset or log_offset");
  }
  c.scale = get_num(j, "scale", c.scale, where);
  c.offset = get_num(j, "offset", c.offset, where);
  try {
    c.validate(where.c_str());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

// fields shared by the cyber_game section and per-stage overrides
void apply_cyber(const json& j, cyber::CyberGameSpec& s, const std::string& where)
{
  if (j.contains("gamma")) s.gamma_curve = parse_curve(j.at("gamma"), s.gamma_curve, where + ".gamma");
  if (j.contains("zeta")) s.zeta_curve = parse_curve(j.at("zeta"), s.zeta_curve, where + ".zeta");
  s.cost_d.c = get_num(j, "c_d", s.cost_d.c, where);
  s.cost_a.c = get_num(j, "c_a", s.cost_a.c, where);
  s.d_min = get_int(j, "d_min", s.d_min, where);
  const double umax = get_num(j, "u_max", s.u_max_d, where);
  s.u_max_d = s.u_max_a = umax;
  if (s.cost_d.c < 0.0) throw ConfigError(where + ".c_d: must be >= 0");
  if (s.cost_a.c < 0.0) throw ConfigError(where + ".c_a: must be >= 0");
  if (s.d_min < 1) throw ConfigError(where + ".d_min: must be >= 1");
  positive(umax, where + ".u_max");
}

sim::AttackPolicy parse_attack(const json& j, const std::string& where)
{
  check_keys(j, {"kind", "load", "fraction", "period", "from", "to"}, where);
  const std::string k = get_str(j, "kind", "none", where);
  sim::AttackPolicy p;
  if (k == "none") p = sim::AttackPolicy::none();
  else if (k == "strategic") p = sim::AttackPolicy::strategic();
  else if (k == "constant") {
    const auto v = get_vec(j, "load", {}, where);
    if (v.empty()) throw ConfigError(where + ".load: required for constant attacks");
    p = sim::AttackPolicy::constant(Eigen::Map<const Eigen::VectorXd>(v.data(), (long)v.size()));
  } else if (k == "load_switch") {
    p = sim::AttackPolicy::load_switch(get_num(j, "fraction", 0.9, where), get_num(j, "period", 50.0, where));
    positive(p.period, where + ".period");
    if (p.fraction < 0.0 || p.fraction > 1.0) throw ConfigError(where + ".fraction: must lie in [0,1]");
  } else
    throw ConfigError(where + ".kind: expected none, strategic, constant or load_switch");
  p.active_from = get_num(j, "from", 0.0, where);
  if (j.contains("to")) p.active_to = get_num(j, "to", 0.0, where);
  return p;
}

} // namespace

ScenarioConfig parse_config(const json& j, const std::string& base_dir)
{
  ScenarioConfig c;
  c.source = j;
  check_keys(j, {"schema_version", "name", "command", "epidemic", "cyber_game", "fleet", "grid",
                 "weights", "scenario", "output"},
             "config");
  if (j.contains("schema_version") && get_int(j, "schema_version", 0, "config") != kSchemaVersion)
    throw ConfigError("config.schema_version: unsupported version");
  c.name = get_str(j, "name", c.name, "config");
  c.command = get_str(j, "command", "", "config");

  if (j.contains("epidemic")) {
    const auto& e = j.at("epidemic");
    const std::string w = "epidemic";
    check_keys(e, {"d_min", "k_max", "gamma", "zeta_sweep", "I0", "t_end", "dt", "sample_every"}, w);
    auto& E = c.epidemic;
    E.d_min = get_int(e, "d_min", E.d_min, w);
    E.k_max = get_int(e, "k_max", E.k_max, w);
    E.gamma = get_num(e, "gamma", E.gamma, w);
    E.zeta_sweep = get_vec(e, "zeta_sweep", E.zeta_sweep, w);
    E.I0 = get_num(e, "I0", E.I0, w);
    E.t_end = get_num(e, "t_end", E.t_end, w);
    E.dt = get_num(e, "dt", E.dt, w);
    E.sample_every = get_num(e, "sample_every", E.sample_every, w);
    if (E.d_min < 1) throw ConfigError("epidemic.d_min: must be >= 1");
    if (E.k_max < E.d_min) throw ConfigError("epidemic.k_max: must be >= d_min");
    positive(E.gamma, "epidemic.gamma");
    for (double z : E.zeta_sweep) positive(z, "epidemic.zeta_sweep");
    if (E.I0 < 0.0 || E.I0 > 1.0) throw ConfigError("epidemic.I0: must lie in [0,1]");
    positive(E.t_end, "epidemic.t_end");
    if (E.dt < 0.0) throw ConfigError("epidemic.dt: must be >= 0");
    positive(E.sample_every, "epidemic.sample_every");
  }

  if (j.contains("cyber_game")) {
    const auto& g = j.at("cyber_game");
    const std::string w = "cyber_game";
    check_keys(g, {"gamma", "zeta", "c_d", "c_a", "d_min", "u_max", "eps", "max_iter", "init",
                   "br_range", "br_points"}, w);
    apply_cyber(g, c.cyber.spec, w);
    c.cyber.nash.eps = get_num(g, "eps", c.cyber.nash.eps, w);
    c.cyber.nash.max_iter = get_int(g, "max_iter", c.cyber.nash.max_iter, w);
    const auto init = get_vec(g, "init", {c.cyber.nash.u_d0, c.cyber.nash.u_a0}, w);
    if (init.size() != 2 || init[0] < 0.0 || init[1] < 0.0)
      throw ConfigError("cyber_game.init: expected two nonnegative efforts");
    c.cyber.nash.u_d0 = init[0];
    c.cyber.nash.u_a0 = init[1];
    const auto br = get_vec(g, "br_range", {c.cyber.br_lo, c.cyber.br_hi}, w);
    if (br.size() != 2 || br[0] < 0.0 || !(br[1] > br[0]))
      throw ConfigError("cyber_game.br_range: expected [lo, hi] with 0 <= lo < hi");
    c.cyber.br_lo = br[0];
    c.cyber.br_hi = br[1];
    c.cyber.br_points = get_int(g, "br_points", c.cyber.br_points, w);
    positive(c.cyber.nash.eps, "cyber_game.eps");
    if (c.cyber.nash.max_iter < 1) throw ConfigError("cyber_game.max_iter: must be >= 1");
    if (c.cyber.br_points < 2) throw ConfigError("cyber_game.br_points: must be >= 2");
  }

  if (j.contains("fleet")) {
    const auto& f = j.at("fleet");
    const std::string w = "fleet";
    check_keys(f, {"N_d", "W_d", "power_base", "capacity"}, w);
    c.fleet.N_d = get_num(f, "N_d", c.fleet.N_d, w);
    c.fleet.W_d = get_num(f, "W_d", c.fleet.W_d, w);
    c.fleet.power_base = get_num(f, "power_base", c.fleet.power_base, w);
    positive(c.fleet.N_d, "fleet.N_d");
    positive(c.fleet.W_d, "fleet.W_d");
    positive(c.fleet.power_base, "fleet.power_base");
    if (f.contains("capacity")) {
      const auto& cap = f.at("capacity");
      if (cap.is_string()) {
        const std::string s = cap.get<std::string>();
        if (s == "paper-match") c.fleet.capacity_override = epidemic::FleetParams::paper_match().capacity_override;
        else if (s != "nominal") throw ConfigError("fleet.capacity: expected nominal, paper-match or a number");
      } else if (cap.is_number()) {
        c.fleet.capacity_override = cap.get<double>();
        positive(c.fleet.capacity_override, "fleet.capacity");
      } else
        throw ConfigError("fleet.capacity: expected nominal, paper-match or a number");
    }
  }

  c.grid.case_path = (fs::path(BOTGRID_DATA_DIR) / "ieee39.case").string();
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    const std::string w = "grid";
    check_keys(g, {"case", "Ts", "method", "convention", "gen_damping", "load_damping"}, w);
    if (g.contains("case")) {
      const std::string p = get_str(g, "case", "", w);
      if (p == "ieee39") c.grid.case_path = (fs::path(BOTGRID_DATA_DIR) / "ieee39.case").string();
      else c.grid.case_path = fs::path(p).is_absolute() ? p : (fs::path(base_dir) / p).string();
    }
    c.grid.Ts = get_num(g, "Ts", c.grid.Ts, w);
    positive(c.grid.Ts, "grid.Ts");
    const std::string m = get_str(g, "method", "exact", w);
    if (m == "exact") c.grid.method = grid::DiscretizationMethod::Exact;
    else if (m == "euler") c.grid.method = grid::DiscretizationMethod::Euler;
    else throw ConfigError("grid.method: expected exact or euler");
    const std::string cv = get_str(g, "convention", "physical", w);
    if (cv == "physical") c.grid.convention = grid::SignConvention::Physical;
    else if (cv == "as-printed") c.grid.convention = grid::SignConvention::AsPrinted;
    else throw ConfigError("grid.convention: expected physical or as-printed");
    if (g.contains("gen_damping")) {
      c.grid.gen_damping = get_num(g, "gen_damping", 0.0, w);
      positive(*c.grid.gen_damping, "grid.gen_damping");
    }
    if (g.contains("load_damping")) {
      c.grid.load_damping = get_num(g, "load_damping", 0.0, w);
      positive(*c.grid.load_damping, "grid.load_damping");
    }
  }
  if (!fs::exists(c.grid.case_path)) throw ConfigError("grid.case: file not found: " + c.grid.case_path);

  if (j.contains("weights")) {
    const auto& g = j.at("weights");
    const std::string w = "weights";
    check_keys(g, {"q_delta", "q_theta", "q_omega", "qf_scale", "r_d", "r_a", "T", "mu0", "alpha",
                   "rounds", "eta", "tol"}, w);
    auto& W = c.weights;
    W.q_delta = get_num(g, "q_delta", W.q_delta, w);
    W.q_theta = get_num(g, "q_theta", W.q_theta, w);
    W.q_omega = get_num(g, "q_omega", W.q_omega, w);
    W.qf_scale = get_num(g, "qf_scale", W.qf_scale, w);
    W.r_d = get_num(g, "r_d", W.r_d, w);
    W.r_a = get_num(g, "r_a", W.r_a, w);
    W.T = get_int(g, "T", W.T, w);
    W.mu0 = get_num(g, "mu0", W.mu0, w);
    W.alpha = get_num(g, "alpha", W.alpha, w);
    W.rounds = get_int(g, "rounds", W.rounds, w);
    W.eta = get_num(g, "eta", W.eta, w);
    W.tol = get_num(g, "tol", W.tol, w);
    for (auto [v, n] : {std::pair{W.q_delta, "q_delta"}, {W.q_theta, "q_theta"}, {W.q_omega, "q_omega"},
                        {W.qf_scale, "qf_scale"}})
      if (v < 0.0) throw ConfigError(std::string("weights.") + n + ": must be >= 0");
    positive(W.r_d, "weights.r_d");
    positive(W.r_a, "weights.r_a");
    positive(W.mu0, "weights.mu0");
    if (!(W.alpha > 1.0)) throw ConfigError("weights.alpha: must be > 1");
    if (W.T < 1) throw ConfigError("weights.T: must be >= 1");
    if (W.rounds < 1) throw ConfigError("weights.rounds: must be >= 1");
    if (!(W.eta > 0.0 && W.eta <= 1.0)) throw ConfigError("weights.eta: must lie in (0,1]");
    positive(W.tol, "weights.tol");
  }

  auto& S = c.scenario.scenario;
  S.fleet = c.fleet;
  S.nash = c.cyber.nash;
  S.barrier.eta = c.weights.eta;
  S.barrier.tol = c.weights.tol;
  if (j.contains("scenario")) {
    const auto& g = j.at("scenario");
    const std::string w = "scenario";
    check_keys(g, {"defender", "perturb_hz", "stages", "transient_caps", "transient_I0"}, w);
    const std::string d = get_str(g, "defender", "minmax", w);
    if (d == "minmax") S.defender_mode = sim::DefenderMode::MinMax;
    else if (d == "pi_only") S.defender_mode = sim::DefenderMode::PIOnly;
    else throw ConfigError("scenario.defender: expected minmax or pi_only");
    c.scenario.perturb_hz = get_num(g, "perturb_hz", 0.0, w);
    if (c.scenario.perturb_hz < 0.0) throw ConfigError("scenario.perturb_hz: must be >= 0");
    if (g.contains("transient_caps")) {
      if (!g.at("transient_caps").is_boolean()) throw ConfigError("scenario.transient_caps: expected a boolean");
      S.transient_caps = g.at("transient_caps").get<bool>();
    }
    S.transient_I0 = get_num(g, "transient_I0", S.transient_I0, w);
    if (g.contains("stages")) {
      const auto& st = g.at("stages");
      if (!st.is_array()) throw ConfigError("scenario.stages: expected an array");
      // cyber overrides accumulate from the base spec through the stages
      cyber::CyberGameSpec spec = c.cyber.spec;
      int i = 0;
      for (const auto& e : st) {
        const std::string ws = "scenario.stages[" + std::to_string(i++) + "]";
        check_keys(e, {"duration", "cyber", "attack"}, ws);
        sim::Stage stage;
        stage.duration = get_num(e, "duration", 10.0, ws);
        positive(stage.duration, ws + ".duration");
        if (e.contains("cyber")) {
          check_keys(e.at("cyber"), {"gamma", "zeta", "c_d", "c_a", "d_min", "u_max"}, ws + ".cyber");
          apply_cyber(e.at("cyber"), spec, ws + ".cyber");
        }
        stage.cyber = spec;
        if (e.contains("attack")) stage.attack = parse_attack(e.at("attack"), ws + ".attack");
        S.stages.push_back(stage);
      }
    }
  }
  if (S.stages.empty()) S.stages.push_back({10.0, c.cyber.spec, sim::AttackPolicy::none()});
  // Ts alignment is checked here so config errors surface before any solve
  for (size_t i = 0; i < S.stages.size(); ++i) {
    const double n = S.stages[i].duration / c.grid.Ts;
    if (std::abs(n - std::round(n)) > 1e-6)
      throw ConfigError("scenario.stages[" + std::to_string(i) + "].duration: not a multiple of grid.Ts");
  }

  if (j.contains("output")) {
    const auto& g = j.at("output");
    check_keys(g, {"dir", "formats"}, "output");
    c.output.dir = get_str(g, "dir", c.output.dir, "output");
    if (g.contains("formats")) {
      if (!g.at("formats").is_array()) throw ConfigError("output.formats: expected an array");
      c.output.csv = c.output.json = false;
      for (const auto& f : g.at("formats")) {
        const std::string s = f.is_string() ? f.get<std::string>() : "";
        if (s == "csv") c.output.csv = true;
        else if (s == "json") c.output.json = true;
        else throw ConfigError("output.formats: expected csv and/or json");
      }
    }
  }
  return c;
}

ScenarioConfig load_config(const std::string& path)
{
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(f, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

Plant build_plant(const ScenarioConfig& cfg)
{
  Plant p;
  try {
    p.system = grid::load_case(cfg.grid.case_path);
    if (cfg.grid.gen_damping)
      for (auto& g : p.system.generators) g.D = *cfg.grid.gen_damping;
    if (cfg.grid.load_damping)
      for (auto& l : p.system.loads) l.D = *cfg.grid.load_damping;
    p.model = grid::build_continuous(p.system, cfg.grid.convention);
  } catch (const grid::CaseError& e) {
    throw ConfigError(e.what());
  }
  p.grid = grid::discretize(p.model, cfg.grid.Ts, cfg.grid.method);
  const auto& W = cfg.weights;
  p.weights = game::make_weights(p.grid, W.q_delta, W.q_theta, W.q_omega, W.qf_scale, W.r_d, W.r_a, W.T);
  p.weights.mu = W.mu0;
  p.weights.alpha = W.alpha;
  p.weights.n_rounds = W.rounds;
  return p;
}

Eigen::VectorXd seeded_perturbation(int n, double amplitude, std::uint64_t seed)
{
  // splitmix64 keeps the stream identical on every platform
  std::uint64_t s = seed;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    const double u = (z >> 11) * 0x1.0p-53;
    v[i] = amplitude * (2.0 * u - 1.0);
  }
  return v;
}

std::string fmt_num(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

void write_text(const std::string& path, const std::string& body)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << body;
}

} // namespace app
} // namespace botgrid
