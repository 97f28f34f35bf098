#include "botgrid/grid_model.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace botgrid {
namespace grid {

namespace {

std::vector<std::string> tokens(const std::string& line)
{
  std::vector<std::string> t;
  std::istringstream is(line.substr(0, line.find('#')));
  std::string w;
  while (is >> w) t.push_back(w);
  return t;
}

struct Parser
{
  std::string origin;
  int line = 0;

  [[noreturn]] void fail(const std::string& what) const
  {
    throw CaseError(origin + ":" + std::to_string(line) + ": " + what);
  }

  double num(const std::string& s, const char* field) const
  {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (...) {
      used = 0;
    }
    if (used != s.size()) fail(std::string("field '") + field + "': not a number: " + s);
    return v;
  }

  int integer(const std::string& s, const char* field) const
  {
    const double v = num(s, field);
    if (v != (int)v) fail(std::string("field '") + field + "': not an integer: " + s);
    return (int)v;
  }
};

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

BusSystem parse_case(const std::string& text, const std::string& origin)
{
  Parser P{origin};
  BusSystem s;

  struct BusRow { int id; bool gen; double pd; int line; };
  struct GenRow { int bus; double inertia; int line; };
  std::vector<BusRow> buses;
  std::vector<GenRow> gens;

  std::vector<double> gen_damping, kp, ki;
  double load_damping = -1.0;
  std::string inertia_unit = "H";
  std::string secure_mode;
  double secure_total = 0.0;
  std::vector<std::string> rho_tok;
  bool have_vulnerable = false;

  std::istringstream in(text);
  std::string raw, section;
  std::set<std::string> seen_sections;
  while (std::getline(in, raw)) {
    ++P.line;
    const auto t = tokens(raw);
    if (t.empty()) continue;

    if (section.empty()) {
      const std::string& k = t[0];
      if (k == "bus" || k == "gen" || k == "branch" || k == "overlay") {
        if (t.size() != 1) P.fail("section header '" + k + "' takes no arguments");
        if (!seen_sections.insert(k).second) P.fail("duplicate section '" + k + "'");
        section = k;
        continue;
      }
      if (t.size() != 2) P.fail("expected 'key value', got '" + raw + "'");
      if (k == "case") s.name = t[1];
      else if (k == "base_mva") s.base_mva = P.num(t[1], "base_mva");
      else if (k == "omega_nominal") s.omega_nominal = P.num(t[1], "omega_nominal");
      else if (k == "omega_max") s.omega_max = P.num(t[1], "omega_max");
      else P.fail("unknown key '" + k + "'");
      continue;
    }

    if (t[0] == "end") {
      if (t.size() != 1) P.fail("'end' takes no arguments");
      section.clear();
      continue;
    }

    if (section == "bus") {
      if (t.size() != 3) P.fail("bus row needs: id type pd");
      if (t[1] != "gen" && t[1] != "load") P.fail("field 'type': expected gen or load, got " + t[1]);
      buses.push_back({P.integer(t[0], "id"), t[1] == "gen", P.num(t[2], "pd"), P.line});
    } else if (section == "gen") {
      if (t.size() != 2) P.fail("gen row needs: bus inertia");
      gens.push_back({P.integer(t[0], "bus"), P.num(t[1], "inertia"), P.line});
    } else if (section == "branch") {
      if (t.size() != 3) P.fail("branch row needs: from to x");
      const double x = P.num(t[2], "x");
      if (!(x > 0.0)) P.fail("field 'x': reactance must be > 0");
      s.branches.push_back({P.integer(t[0], "from"), P.integer(t[1], "to"), 1.0 / x, x});
    } else if (section == "overlay") {
      const std::string& k = t[0];
      auto list = [&](const char* field) {
        std::vector<double> v;
        for (size_t i = 1; i < t.size(); ++i) v.push_back(P.num(t[i], field));
        if (v.empty()) P.fail(std::string("field '") + field + "': missing values");
        return v;
      };
      if (k == "gen_damping") gen_damping = list("gen_damping");
      else if (k == "kp") kp = list("kp");
      else if (k == "ki") ki = list("ki");
      else if (k == "load_damping") {
        if (t.size() != 2) P.fail("field 'load_damping': expected one value");
        load_damping = P.num(t[1], "load_damping");
      } else if (k == "inertia_unit") {
        if (t.size() != 2 || (t[1] != "H" && t[1] != "M")) P.fail("field 'inertia_unit': expected H or M");
        inertia_unit = t[1];
      } else if (k == "vulnerable") {
        have_vulnerable = true;
        for (size_t i = 1; i < t.size(); ++i) s.vulnerable.push_back(P.integer(t[i], "vulnerable"));
      } else if (k == "rho") {
        rho_tok.assign(t.begin() + 1, t.end());
      } else if (k == "secure_load") {
        if (t.size() >= 2 && t[1] == "pu" && t.size() == 2) secure_mode = "pu";
        else if (t.size() == 3 && t[1] == "total") {
          secure_mode = "total";
          secure_total = P.num(t[2], "secure_load");
        } else P.fail("field 'secure_load': expected 'pu' or 'total <value>'");
      } else P.fail("unknown overlay key '" + k + "'");
    }
  }
  if (!section.empty()) P.fail("section '" + section + "' not closed with 'end'");
  for (const char* need : {"bus", "gen", "branch", "overlay"})
    if (!seen_sections.count(need)) P.fail(std::string("missing section '") + need + "'");
  if (load_damping < 0.0) P.fail("overlay: missing load_damping");
  if (secure_mode.empty()) P.fail("overlay: missing secure_load");
  if (!have_vulnerable) P.fail("overlay: missing vulnerable");

  std::set<int> bus_ids, gen_bus_ids;
  double pd_total = 0.0;
  for (const auto& b : buses) {
    P.line = b.line;
    if (!bus_ids.insert(b.id).second) P.fail("duplicate bus " + std::to_string(b.id));
    if (b.gen) gen_bus_ids.insert(b.id);
    else pd_total += b.pd;
  }

  const double ws = 2.0 * std::numbers::pi * s.omega_nominal;
  const size_t NG = gens.size();
  auto per_gen = [&](std::vector<double>& v, const char* field) {
    if (v.size() == 1) v.assign(NG, v[0]);
    if (v.size() != NG) {
      P.line = 0;
      P.fail(std::string("overlay '") + field + "': expected " + std::to_string(NG) + " values");
    }
  };
  if (gen_damping.empty() || kp.empty() || ki.empty()) P.fail("overlay: gen_damping, kp, ki are required");
  per_gen(gen_damping, "gen_damping");
  per_gen(kp, "kp");
  per_gen(ki, "ki");

  std::set<int> used;
  for (size_t i = 0; i < NG; ++i) {
    P.line = gens[i].line;
    if (!gen_bus_ids.count(gens[i].bus))
      P.fail("gen bus " + std::to_string(gens[i].bus) + " is not a gen-type bus");
    if (!used.insert(gens[i].bus).second) P.fail("duplicate gen bus " + std::to_string(gens[i].bus));
    const double M = inertia_unit == "H" ? 2.0 * gens[i].inertia / ws : gens[i].inertia;
    s.generators.push_back({gens[i].bus, M, gen_damping[i], kp[i], ki[i]});
  }
  if (used.size() != gen_bus_ids.size()) {
    P.line = 0;
    P.fail("gen-type bus without a gen row");
  }
  for (const auto& b : buses) {
    if (b.gen) continue;
    double pls = b.pd;
    if (secure_mode == "total")
      pls = pd_total > 0.0 ? secure_total * b.pd / pd_total : 0.0;
    s.loads.push_back({b.id, load_damping, pls});
  }

  std::set<int> referenced;
  for (const auto& br : s.branches) {
    if (!bus_ids.count(br.a) || !bus_ids.count(br.b)) {
      P.line = 0;
      P.fail("branch " + std::to_string(br.a) + "-" + std::to_string(br.b) + " references an undefined bus");
    }
    referenced.insert(br.a);
    referenced.insert(br.b);
  }
  for (int id : bus_ids)
    if (!referenced.count(id)) {
      P.line = 0;
      P.fail("bus " + std::to_string(id) + " is not referenced by any branch");
    }

  if (rho_tok.empty() || (rho_tok.size() == 1 && rho_tok[0] == "uniform")) {
    for (int v : s.vulnerable) s.rho[v] = 1.0 / s.vulnerable.size();
  } else {
    if (rho_tok.size() != s.vulnerable.size()) P.fail("overlay 'rho': one value per vulnerable bus");
    for (size_t i = 0; i < rho_tok.size(); ++i) s.rho[s.vulnerable[i]] = P.num(rho_tok[i], "rho");
  }

  try {
    s.validate();
  } catch (const CaseError& e) {
    throw CaseError(origin + ": " + e.what());
  }
  return s;
}

BusSystem load_case(const std::string& path)
{
  std::ifstream f(path);
  if (!f) throw CaseError("cannot open case file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_case(ss.str(), path);
}

std::string serialize_case(const BusSystem& s)
{
  std::ostringstream o;
  o << "case " << s.name << "\n"
    << "base_mva " << fmt(s.base_mva) << "\n"
    << "omega_nominal " << fmt(s.omega_nominal) << "\n"
    << "omega_max " << fmt(s.omega_max) << "\n\n";

  o << "bus\n# id type pd\n";
  for (const auto& g : s.generators) o << g.id << " gen 0\n";
  for (const auto& l : s.loads) o << l.id << " load " << fmt(l.P_ls) << "\n";
  o << "end\n\ngen\n# bus inertia\n";
  for (const auto& g : s.generators) o << g.id << " " << fmt(g.M) << "\n";
  o << "end\n\nbranch\n# from to x\n";
  for (const auto& b : s.branches) o << b.a << " " << b.b << " " << fmt(b.x) << "\n";
  o << "end\n\noverlay\ninertia_unit M\nsecure_load pu\n";

  auto row = [&](const char* key, auto get) {
    o << key;
    for (const auto& g : s.generators) o << " " << fmt(get(g));
    o << "\n";
  };
  row("gen_damping", [](const Generator& g) { return g.D; });
  row("kp", [](const Generator& g) { return g.KP; });
  row("ki", [](const Generator& g) { return g.KI; });

  double dl = s.loads.empty() ? 1.0 : s.loads.front().D;
  for (const auto& l : s.loads)
    if (l.D != dl) throw CaseError("serialize_case: per-load damping is not representable");
  o << "load_damping " << fmt(dl) << "\n";
  o << "vulnerable";
  for (int v : s.vulnerable) o << " " << v;
  o << "\nrho";
  for (int v : s.vulnerable) o << " " << fmt(s.rho.count(v) ? s.rho.at(v) : 0.0);
  o << "\nend\n";
  return o.str();
}

} // namespace grid
} // namespace botgrid
