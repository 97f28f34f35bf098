#include "botgrid/app.hpp"

namespace botgrid {
namespace app {

namespace {

json base(const std::string& name, const std::string& command)
{
  return json{{"schema_version", kSchemaVersion}, {"name", name}, {"command", command}};
}

json cyber_section()
{
  return json{{"gamma", {{"kind", "sqrt_offset"}, {"scale", 1.0}, {"offset", 0.1}}},
              {"zeta", {{"kind", "log_offset"}, {"scale", 2.5}, {"offset", 0.1}}},
              {"c_d", 0.2},
              {"c_a", 0.2},
              {"d_min", 1},
              {"eps", 1e-8},
              {"max_iter", 200},
              {"init", {0.5, 0.5}}};
}

json grid_section()
{
  return json{{"case", "ieee39"}, {"Ts", 0.1}, {"method", "exact"}, {"convention", "physical"}};
}

json weights_section()
{
  return json{{"q_delta", 1.0}, {"q_theta", 1.0}, {"q_omega", 5.0}, {"qf_scale", 5.0},
              {"r_d", 0.2},     {"r_a", 0.05},    {"T", 20},         {"mu0", 2.0},
              {"alpha", 5.0},   {"rounds", 6},    {"eta", 0.5},      {"tol", 1e-8}};
}

json run_preset(const std::string& name, const std::string& defender, double perturb, json stages)
{
  json j = base(name, "run");
  j["cyber_game"] = cyber_section();
  j["fleet"] = {{"N_d", 1e7}, {"W_d", 5000.0}, {"power_base", 1e8}, {"capacity", "nominal"}};
  j["grid"] = grid_section();
  j["weights"] = weights_section();
  j["scenario"] = {{"defender", defender}, {"perturb_hz", perturb}, {"stages", std::move(stages)}};
  j["output"] = {{"dir", "out/" + name}, {"formats", {"csv", "json"}}};
  return j;
}

} // namespace

std::vector<std::string> preset_names()
{
  return {"fig2", "fig4", "fig6a", "fig6b", "fig7a", "fig7b", "fig8", "fig8-paper-match"};
}

json preset_json(const std::string& name)
{
  if (name == "fig2") {
    json j = base(name, "epidemic");
    j["epidemic"] = {{"d_min", 1},        {"k_max", 1000},  {"gamma", 0.2},
                     {"zeta_sweep", {0.2, 0.25, 0.3, 0.4, 0.5}},
                     {"I0", 0.05},        {"t_end", 100.0}, {"dt", 0.002},
                     {"sample_every", 0.5}};
    j["output"] = {{"dir", "out/fig2"}, {"formats", {"csv"}}};
    return j;
  }
  if (name == "fig4") {
    json j = base(name, "cyber-ne");
    j["cyber_game"] = cyber_section();
    j["cyber_game"]["br_range"] = {0.0, 2.0};
    j["cyber_game"]["br_points"] = 101;
    j["output"] = {{"dir", "out/fig4"}, {"formats", {"csv", "json"}}};
    return j;
  }
  if (name == "fig6a")
    return run_preset(name, "pi_only", 0.5,
                      json::array({{{"duration", 60.0}, {"attack", {{"kind", "none"}}}}}));
  if (name == "fig6b")
    return run_preset(name, "pi_only", 0.0,
                      json::array({{{"duration", 150.0},
                                    {"attack", {{"kind", "load_switch"}, {"fraction", 0.9}, {"period", 50.0}}}}}));
  if (name == "fig7a")
    return run_preset(name, "minmax", 0.0,
                      json::array({{{"duration", 20.0}, {"attack", {{"kind", "strategic"}}}},
                                   {{"duration", 20.0}, {"attack", {{"kind", "none"}}}}}));
  if (name == "fig7b")
    return run_preset(
        name, "minmax", 0.0,
        json::array({{{"duration", 20.0},
                      {"attack", {{"kind", "constant"}, {"load", {10.4, 10.6, 9.9, 8.6, 9.5, 19.4, 9.5, 5.9}}}}},
                     {{"duration", 20.0}, {"attack", {{"kind", "none"}}}}}));
  if (name == "fig8" || name == "fig8-paper-match") {
    json j = run_preset(
        name, "minmax", 0.0,
        json::array({{{"duration", 10.0}, {"attack", {{"kind", "strategic"}}}},
                     {{"duration", 10.0},
                      {"cyber", {{"zeta", {{"scale", 1.5}}}}},
                      {"attack", {{"kind", "load_switch"}, {"fraction", 0.9}, {"period", 5.0}}}},
                     {{"duration", 10.0}, {"cyber", {{"c_d", 0.3}}}, {"attack", {{"kind", "strategic"}}}}}));
    if (name == "fig8-paper-match") j["fleet"]["capacity"] = "paper-match";
    return j;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

ScenarioConfig preset(const std::string& name)
{
  return parse_config(preset_json(name));
}

} // namespace app
} // namespace botgrid
