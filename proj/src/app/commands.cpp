#include "botgrid/app.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace botgrid {
namespace app {

namespace fs = std::filesystem;

namespace {

std::string out_dir(const ScenarioConfig& cfg, const RunOptions& opt)
{
  const std::string d = opt.out_dir.empty() ? cfg.output.dir : opt.out_dir;
  fs::create_directories(d);
  return d;
}

std::string label(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_json(const std::string& path, const json& j)
{
  write_text(path, j.dump(2) + "\n");
}

json vec_json(const Eigen::VectorXd& v)
{
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

double spectral_abscissa(const Eigen::MatrixXd& A)
{
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

double spectral_radius(const Eigen::MatrixXd& A)
{
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace

int cmd_epidemic(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out)
{
  const auto& E = cfg.epidemic;
  const auto dist = epidemic::scale_free_distribution(E.d_min, E.k_max);
  const int nz = (int)E.zeta_sweep.size();

  struct Series
  {
    std::vector<double> t, I;
    double I_discrete = 0.0, I_continuum = 0.0;
  };
  std::vector<Series> series(nz);

  auto run_point = [&](int z) {
    const epidemic::EpidemicParams p{E.gamma, E.zeta_sweep[z]};
    const double dt = E.dt > 0.0 ? E.dt : epidemic::default_dt(p, dist);
    const long per_sample = std::max(1L, std::lround(E.sample_every / dt));
    const long total = std::lround(E.t_end / dt);
    Series& s = series[z];
    auto st = epidemic::uniform_state(dist, E.I0);
    s.t.push_back(0.0);
    s.I.push_back(epidemic::cyber_risk(st, dist));
    for (long done = 0; done < total;) {
      const long n = std::min(per_sample, total - done);
      st = epidemic::integrate(st, p, dist, dt, n);
      done += n;
      s.t.push_back(done * dt);
      s.I.push_back(epidemic::cyber_risk(st, dist));
    }
    s.I_discrete = epidemic::steady_state(p, dist).I;
    s.I_continuum = epidemic::steady_state_continuum(p, E.d_min).I;
  };

  // each worker owns its sweep points, outputs are merged afterwards
  const int jobs = std::max(1, std::min(opt.jobs, nz));
  if (jobs <= 1) {
    for (int z = 0; z < nz; ++z) run_point(z);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (int z; (z = next.fetch_add(1)) < nz;) run_point(z);
      });
    for (auto& th : pool) th.join();
  }

  const std::string dir = out_dir(cfg, opt);
  std::ostringstream ts;
  ts << "t";
  for (double z : E.zeta_sweep) ts << ",I_zeta_" << label(z);
  ts << "\n";
  const size_t rows = nz ? series[0].t.size() : 0;
  for (size_t r = 0; r < rows; ++r) {
    ts << fmt_num(series[0].t[r]);
    for (int z = 0; z < nz; ++z) ts << "," << fmt_num(series[z].I[r]);
    ts << "\n";
  }
  write_text(dir + "/epidemic_timeseries.csv", ts.str());

  std::ostringstream ss;
  ss << "zeta,I_discrete,I_continuum\n";
  for (int z = 0; z < nz; ++z)
    ss << fmt_num(E.zeta_sweep[z]) << "," << fmt_num(series[z].I_discrete) << ","
       << fmt_num(series[z].I_continuum) << "\n";
  write_text(dir + "/steady_state.csv", ss.str());

  out << "epidemic: " << nz << " series, threshold <k^2>/<k> = " << dist.threshold() << ", wrote " << dir
      << "\n";
  return kOk;
}

int cmd_cyber_ne(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out)
{
  const auto& C = cfg.cyber;
  const auto eq = cyber::nash_equilibrium(C.spec, C.nash, cfg.fleet);
  const std::string dir = out_dir(cfg, opt);

  if (cfg.output.csv) {
    std::ostringstream br;
    br << "u,br_defender,br_attacker\n";
    for (int i = 0; i < C.br_points; ++i) {
      const double u = C.br_lo + (C.br_hi - C.br_lo) * i / (C.br_points - 1);
      br << fmt_num(u) << "," << fmt_num(cyber::best_response_defender(C.spec, u)) << ","
         << fmt_num(cyber::best_response_attacker(C.spec, u)) << "\n";
    }
    write_text(dir + "/best_response.csv", br.str());

    std::ostringstream cv;
    cv << "iteration,max_diff\n";
    for (size_t i = 0; i < eq.trace.size(); ++i) cv << i + 1 << "," << fmt_num(eq.trace[i]) << "\n";
    write_text(dir + "/convergence.csv", cv.str());
  }
  if (cfg.output.json) {
    json j{{"schema_version", kSchemaVersion},
           {"name", cfg.name},
           {"u_d", eq.u_d},
           {"u_a", eq.u_a},
           {"I_bar", eq.I_bar},
           {"R_bar", eq.R_bar},
           {"gamma", C.spec.gamma_curve.value(eq.u_d)},
           {"zeta", C.spec.zeta_curve.value(eq.u_a)},
           {"iterations", eq.iterations},
           {"converged", eq.converged}};
    write_json(dir + "/nash.json", j);
  }
  out << "cyber-ne: u_d=" << eq.u_d << " u_a=" << eq.u_a << " I_bar=" << eq.I_bar << " after "
      << eq.iterations << " iterations" << (eq.converged ? "" : " (not converged)") << "\n";
  return eq.converged ? kOk : kNonConvergence;
}

sim::SimulationLog simulate_config(const ScenarioConfig& cfg, const Plant& plant, std::uint64_t seed)
{
  Eigen::VectorXd pert;
  if (cfg.scenario.perturb_hz > 0.0) pert = seeded_perturbation(plant.grid.NG, cfg.scenario.perturb_hz, seed);
  const Eigen::VectorXd x0 = sim::initial_state(plant.grid, pert);
  return sim::run_scenario(plant.system, plant.model, plant.grid, plant.weights, cfg.scenario.scenario, x0);
}

int cmd_run(const ScenarioConfig& cfg, const RunOptions& opt, std::ostream& out)
{
  const Plant plant = build_plant(cfg);
  sim::SimulationLog log;
  try {
    log = simulate_config(cfg, plant, opt.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto& sys = plant.system;
  const auto rep = sim::check_safety(log, sys.omega_nominal, sys.omega_max);
  const std::string dir = out_dir(cfg, opt);
  const auto vidx = sys.vulnerable_index();

  if (cfg.output.csv) {
    std::ostringstream tr;
    tr << "t";
    for (const auto& g : sys.generators) tr << ",f_" << g.id;
    for (const auto& g : sys.generators) tr << ",Pd_" << g.id;
    for (int v : vidx) tr << ",Pa_" << sys.loads[v].id;
    tr << ",stage,I_bar,R_bar\n";
    for (const auto& s : log.steps) {
      tr << fmt_num(s.t);
      for (int i = 0; i < s.freq.size(); ++i) tr << "," << fmt_num(s.freq[i]);
      for (int i = 0; i < s.Pd.size(); ++i) tr << "," << fmt_num(s.Pd[i]);
      for (int i = 0; i < s.Pa.size(); ++i) tr << "," << fmt_num(s.Pa[i]);
      tr << "," << s.stage + 1 << "," << fmt_num(s.I_bar) << "," << fmt_num(s.R_bar) << "\n";
    }
    write_text(dir + "/trajectory.csv", tr.str());
  }

  if (cfg.output.json) {
    json gens = json::array();
    for (int i = 0; i < sys.n_gen(); ++i)
      gens.push_back({{"id", sys.generators[i].id},
                      {"max_dev_hz", rep.max_dev[i]},
                      {"first_trip", rep.first_trip[i] >= 0.0 ? json(rep.first_trip[i]) : json(nullptr)},
                      {"settle_time", rep.settle_time[i]}});
    json stages = json::array();
    const auto& S = cfg.scenario.scenario.stages;
    for (size_t s = 0; s < log.stages.size(); ++s) {
      const auto& st = log.stages[s];
      stages.push_back({{"index", (int)s + 1},
                        {"t_start", st.t_start},
                        {"duration", S[s].duration},
                        {"attack", sim::to_string(S[s].attack.kind)},
                        {"u_d", st.eq.u_d},
                        {"u_a", st.eq.u_a},
                        {"I_bar", st.eq.I_bar},
                        {"R_bar", st.eq.R_bar},
                        {"nash_iterations", st.eq.iterations},
                        {"nash_converged", st.eq.converged},
                        {"caps", vec_json(st.caps)}});
    }
    json j{{"schema_version", kSchemaVersion},
           {"name", cfg.name},
           {"defender", cfg.scenario.scenario.defender_mode == sim::DefenderMode::MinMax ? "minmax" : "pi_only"},
           {"seed", opt.seed},
           {"steps", log.steps.size()},
           {"t_end", log.steps.empty() ? 0.0 : log.steps.back().t},
           {"any_trip", rep.any_trip},
           {"n_tripped", rep.n_tripped},
           {"peak_dev_hz", rep.peak},
           {"generators", gens},
           {"stages", stages},
           {"solver_ok", log.solver_ok},
           {"error", log.error},
           {"warnings", log.warnings}};
    write_json(dir + "/summary.json", j);
  }

  out << "run " << cfg.name << ": " << log.steps.size() << " records, " << log.stages.size()
      << " stages, peak deviation " << rep.peak << " Hz, " << rep.n_tripped << " tripped\n";
  for (const auto& w : log.warnings) out << "warning: " << w << "\n";
  if (!log.solver_ok) {
    out << "error: " << log.error << "\n";
    return kNonConvergence;
  }
  if (opt.assert_safety && rep.any_trip) return kSafetyFailure;
  return kOk;
}

int cmd_validate(const ScenarioConfig& cfg, const RunOptions&, std::ostream& out)
{
  const Plant plant = build_plant(cfg);
  const auto& sys = plant.system;
  out << "config " << cfg.name << ": schema ok\n";
  out << "case " << sys.name << ": " << sys.n_gen() << " generators, " << sys.n_load() << " loads, "
      << sys.branches.size() << " branches, " << sys.vulnerable.size() << " vulnerable\n";
  for (const auto& w : grid::build_admittance(sys).warnings) out << "warning: " << w << "\n";

  const double sa = spectral_abscissa(plant.model.A);
  const double sa_printed = spectral_abscissa(grid::build_continuous(sys, grid::SignConvention::AsPrinted).A);
  out << "spectral abscissa: physical " << sa << ", as-printed " << sa_printed << "\n";
  if (sa_printed > 0.0) out << "warning: as-printed theta sign gives an unstable A\n";
  out << "discrete spectral radius (Ts " << plant.grid.Ts << "): " << spectral_radius(plant.grid.A) << "\n";

  const auto rc = game::riccati_check(plant.grid, plant.weights);
  out << "riccati defender " << (rc.defender_ok ? "true" : "false") << " (min eig " << rc.defender_min_eig
      << "), attacker " << (rc.attacker_ok ? "true" : "false") << " (min eig " << rc.attacker_min_eig << ")\n";

  const auto& spec = cfg.cyber.spec;
  const auto eq = cyber::nash_equilibrium(spec, cfg.cyber.nash, cfg.fleet);
  const auto dist = epidemic::scale_free_distribution(spec.d_min, cfg.epidemic.k_max);
  const double g = spec.gamma_curve.value(eq.u_d), z = spec.zeta_curve.value(eq.u_a);
  out << "epidemic threshold: gamma/zeta " << g / z << " vs <k^2>/<k> " << dist.threshold() << " (k_max "
      << cfg.epidemic.k_max << ") -> "
      << (cyber::epidemic_free_region(spec, dist, eq.u_d, eq.u_a) ? "epidemic-free" : "endemic") << "\n";
  out << "cyber NE: u_d " << eq.u_d << ", u_a " << eq.u_a << ", I_bar " << eq.I_bar << ", R_bar "
      << eq.R_bar << " p.u.\n";

  const auto& W = cfg.weights;
  out << "parameters:\n"
      << "  Ts " << cfg.grid.Ts << " s, horizon T " << W.T << ", mu0 " << W.mu0 << ", alpha " << W.alpha
      << ", rounds " << W.rounds << "\n"
      << "  Q diag (" << W.q_delta << ", " << W.q_theta << ", " << W.q_omega << "), Qf scale " << W.qf_scale
      << ", R_d " << W.r_d << ", R_a " << W.r_a << "\n"
      << "  fleet capacity " << cfg.fleet.capacity() << " p.u., omega_max " << sys.omega_max << " Hz\n"
      << "  stages " << cfg.scenario.scenario.stages.size() << ", defender "
      << (cfg.scenario.scenario.defender_mode == sim::DefenderMode::MinMax ? "minmax" : "pi_only") << "\n";
  if (!(rc.defender_ok && rc.attacker_ok)) {
    out << "fail: Riccati conditions do not hold\n";
    return kNonConvergence;
  }
  out << "ok\n";
  return kOk;
}

} // namespace app
} // namespace botgrid
