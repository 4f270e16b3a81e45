#include "mrtrack/scenario.hpp"

#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace mrtrack {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

const json& member(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing field");
  return *it;
}

double get_number(const json& j, const std::string& path, const char* key) {
  const json& v = member(j, path, key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& j, const std::string& path, const char* key,
                     double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_number(j, path, key);
}

int get_int(const json& j, const std::string& path, const char* key) {
  const json& v = member(j, path, key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string get_string(const json& j, const std::string& path, const char* key) {
  const json& v = member(j, path, key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  return v.get<std::string>();
}

AgentState parse_kinematics(const json& j, const std::string& path) {
  AgentState s;
  s.px = get_number(j, path, "px");
  s.py = get_number(j, path, "py");
  s.psi = get_number_or(j, path, "psi", 0.0);
  s.vx = get_number_or(j, path, "vx", 0.0);
  s.vy = get_number_or(j, path, "vy", 0.0);
  return s;
}

OwnershipPattern parse_pattern(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of per-agent id lists");
  OwnershipPattern p;
  for (std::size_t a = 0; a < j.size(); ++a) {
    const json& row = j[a];
    const std::string row_path = path + "[" + std::to_string(a) + "]";
    if (!row.is_array()) fail(row_path, "expected an array of target ids");
    std::vector<int> ids;
    for (const auto& v : row) {
      if (!v.is_number_integer()) fail(row_path, "expected integer target ids");
      ids.push_back(v.get<int>());
    }
    p.push_back(std::move(ids));
  }
  return p;
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
  ScenarioConfig sc;
  sc.name = get_string(j, "", "name");
  sc.duration_steps = get_int(j, "", "duration_steps");
  if (sc.duration_steps < 1) fail("duration_steps", "must be >= 1");
  sc.dt = get_number_or(j, "", "dt", 0.2);
  if (sc.dt <= 0.0) fail("dt", "must be positive");
  sc.ownership_m = get_int(j, "", "ownership_m");
  if (sc.ownership_m < 1) fail("ownership_m", "must be >= 1");
  sc.process_noise_q = get_number_or(j, "", "process_noise_q", 0.0);

  const json& agents = member(j, "", "agents");
  if (!agents.is_array() || agents.empty()) fail("agents", "need at least one agent");
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const std::string path = "agents[" + std::to_string(a) + "]";
    AgentConfig cfg;
    cfg.initial = parse_kinematics(member(agents[a], path, "initial"), path + ".initial");
    const json& spec = member(agents[a], path, "spec");
    cfg.spec.v_max = get_number(spec, path + ".spec", "v_max");
    cfg.spec.fov_half_x = get_number(spec, path + ".spec", "fov_half_x");
    cfg.spec.fov_half_y = get_number(spec, path + ".spec", "fov_half_y");
    cfg.spec.alpha = get_number(spec, path + ".spec", "alpha");
    if (cfg.spec.v_max <= 0.0) fail(path + ".spec.v_max", "must be positive");
    if (cfg.spec.fov_half_x <= 0.0 || cfg.spec.fov_half_y <= 0.0)
      fail(path + ".spec", "fov half-extents must be positive");
    if (cfg.spec.alpha <= 0.0) fail(path + ".spec.alpha", "must be positive");
    sc.agents.push_back(cfg);
  }

  const json& oois = member(j, "", "oois");
  if (!oois.is_array() || oois.empty()) fail("oois", "need at least one OOI");
  std::set<int> seen_ids;
  for (std::size_t t = 0; t < oois.size(); ++t) {
    const std::string path = "oois[" + std::to_string(t) + "]";
    OoiConfig cfg;
    cfg.id = get_int(oois[t], path, "id");
    if (!seen_ids.insert(cfg.id).second) fail(path + ".id", "duplicate target id");
    if (oois[t].contains("label")) cfg.label = get_string(oois[t], path, "label");
    cfg.initial = parse_kinematics(member(oois[t], path, "initial"), path + ".initial");
    if (oois[t].contains("script")) {
      const json& script = oois[t]["script"];
      if (!script.is_array()) fail(path + ".script", "expected an array");
      for (std::size_t s = 0; s < script.size(); ++s) {
        const std::string spath = path + ".script[" + std::to_string(s) + "]";
        TargetScriptSegment seg;
        seg.from_step = get_int(script[s], spath, "from_step");
        seg.velocity = Vec2(get_number(script[s], spath, "vx"),
                            get_number(script[s], spath, "vy"));
        cfg.script.push_back(seg);
      }
    }
    sc.oois.push_back(std::move(cfg));
  }

  if (j.contains("occlusions")) {
    const json& occ = j["occlusions"];
    if (!occ.is_array()) fail("occlusions", "expected an array");
    for (std::size_t w = 0; w < occ.size(); ++w) {
      const std::string path = "occlusions[" + std::to_string(w) + "]";
      OcclusionObject o;
      o.cx = get_number(occ[w], path, "cx");
      o.cy = get_number(occ[w], path, "cy");
      o.radius = get_number(occ[w], path, "radius");
      if (o.radius <= 0.0) fail(path + ".radius", "must be positive");
      o.label = occ[w].contains("label") ? get_string(occ[w], path, "label") : "tree";
      sc.occlusions.push_back(o);
    }
  }

  sc.p0 = Mat4::Identity();
  if (j.contains("p0_diag")) {
    const json& d = j["p0_diag"];
    if (!d.is_array() || d.size() != 4) fail("p0_diag", "expected 4 numbers");
    for (int i = 0; i < 4; ++i) sc.p0(i, i) = d[i].get<double>();
  }

  if (j.contains("m0")) sc.m0 = parse_pattern(j["m0"], "m0");
  if (j.contains("goal")) sc.goal = parse_pattern(j["goal"], "goal");
  for (const auto& pattern : {sc.m0, sc.goal})
    for (const auto& row : pattern)
      for (int id : row)
        if (!seen_ids.count(id)) fail("m0/goal", "unknown target id " + std::to_string(id));

  if (j.contains("occlusion_analysis")) {
    const json& arr = j["occlusion_analysis"];
    if (!arr.is_array()) fail("occlusion_analysis", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "occlusion_analysis[" + std::to_string(i) + "]";
      OcclusionAwareQuery q;
      q.target = get_int(arr[i], path, "target");
      q.k0 = get_int(arr[i], path, "k0");
      q.h = get_int(arr[i], path, "h");
      q.length = get_int(arr[i], path, "length");
      if (!seen_ids.count(q.target)) fail(path + ".target", "unknown target id");
      if (q.h < 0 || q.length <= 2 * q.h) fail(path, "need 0 <= h and length > 2h");
      if (q.k0 + q.length > sc.duration_steps)
        fail(path, "interval extends past duration_steps");
      sc.analysis_intervals.push_back(q);
    }
  }
  sc.share_interval = -1;
  if (j.contains("share_interval")) {
    sc.share_interval = get_int(j, "", "share_interval");
    if (sc.share_interval < -1 ||
        sc.share_interval >= static_cast<int>(sc.analysis_intervals.size()))
      fail("share_interval", "index outside occlusion_analysis");
  }

  if (j.contains("soo")) {
    const json& soo = j["soo"];
    if (soo.contains("label")) sc.soo.label = get_string(soo, "soo", "label");
    sc.soo.gate_chi2 = get_number_or(soo, "soo", "gate_chi2", sc.soo.gate_chi2);
    sc.soo.merge_distance =
        get_number_or(soo, "soo", "merge_distance", sc.soo.merge_distance);
    sc.soo.estimate_radius =
        get_number_or(soo, "soo", "estimate_radius", sc.soo.estimate_radius);
    if (soo.contains("birth_cov_diag")) {
      const json& d = soo["birth_cov_diag"];
      if (!d.is_array() || d.size() != 2) fail("soo.birth_cov_diag", "expected 2 numbers");
      sc.soo.birth_cov = Mat2::Zero();
      sc.soo.birth_cov(0, 0) = d[0].get<double>();
      sc.soo.birth_cov(1, 1) = d[1].get<double>();
    }
  }

  return sc;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError(path + ": " + e.what());
  }
  try {
    return parse_scenario(j);
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

WorldState ScenarioConfig::initial_world() const {
  WorldState world;
  world.time_step = 0;
  for (const auto& a : agents) world.agents.push_back(a.initial);
  for (const auto& t : oois) {
    TargetTruth truth;
    truth.id = t.id;
    truth.label = t.label;
    truth.cls = ObjectClass::Ooi;
    truth.px = t.initial.px;
    truth.py = t.initial.py;
    truth.vx = t.initial.vx;
    truth.vy = t.initial.vy;
    world.targets.push_back(truth);
  }
  int next_id = 0;
  for (const auto& t : oois) next_id = std::max(next_id, t.id + 1);
  for (const auto& w : occlusions) {
    TargetTruth truth;
    truth.id = next_id++;
    truth.label = soo.label;
    truth.cls = ObjectClass::Soo;
    truth.px = w.cx;
    truth.py = w.cy;
    world.targets.push_back(truth);
  }
  world.occlusions = occlusions;
  return world;
}

std::vector<TrackEstimate> ScenarioConfig::initial_tracks() const {
  std::vector<TrackEstimate> tracks;
  for (const auto& t : oois) {
    TrackEstimate est;
    est.id = t.id;
    est.label = t.label;
    est.kind = TrackKind::Ooi;
    est.xi = Vec4(t.initial.px, t.initial.py, t.initial.vx, t.initial.vy);
    est.P = p0;
    tracks.push_back(std::move(est));
  }
  return tracks;
}

Vec2 ScenarioConfig::scripted_velocity(int index, int k) const {
  const OoiConfig& cfg = oois.at(index);
  Vec2 v(cfg.initial.vx, cfg.initial.vy);
  for (const auto& seg : cfg.script)
    if (k >= seg.from_step) v = seg.velocity;
  return v;
}

double ScenarioConfig::soo_radius() const {
  if (soo.estimate_radius > 0.0) return soo.estimate_radius;
  if (occlusions.empty()) return 1.0;
  double sum = 0.0;
  for (const auto& w : occlusions) sum += w.radius;
  return sum / occlusions.size();
}

const char* algorithm_name(Algorithm a) {
  return a == Algorithm::SmaNbo ? "sma_nbo" : "dec_pomdp";
}

const char* occlusion_mode_name(OcclusionMode m) {
  switch (m) {
    case OcclusionMode::Apriori: return "apriori";
    case OcclusionMode::Dynamic: return "dynamic";
    case OcclusionMode::None: return "none";
  }
  return "none";
}

json scenario_to_json(const ScenarioConfig& sc) {
  json j;
  j["name"] = sc.name;
  j["duration_steps"] = sc.duration_steps;
  j["dt"] = sc.dt;
  j["ownership_m"] = sc.ownership_m;
  j["process_noise_q"] = sc.process_noise_q;
  j["agents"] = json::array();
  for (const auto& a : sc.agents) {
    json ja;
    ja["initial"] = {{"px", a.initial.px}, {"py", a.initial.py}, {"psi", a.initial.psi},
                     {"vx", a.initial.vx}, {"vy", a.initial.vy}};
    ja["spec"] = {{"v_max", a.spec.v_max},
                  {"fov_half_x", a.spec.fov_half_x},
                  {"fov_half_y", a.spec.fov_half_y},
                  {"alpha", a.spec.alpha}};
    j["agents"].push_back(ja);
  }
  j["oois"] = json::array();
  for (const auto& t : sc.oois) {
    json jt;
    jt["id"] = t.id;
    jt["label"] = t.label;
    jt["initial"] = {{"px", t.initial.px}, {"py", t.initial.py},
                     {"vx", t.initial.vx}, {"vy", t.initial.vy}};
    if (!t.script.empty()) {
      jt["script"] = json::array();
      for (const auto& s : t.script)
        jt["script"].push_back({{"from_step", s.from_step},
                                {"vx", s.velocity.x()},
                                {"vy", s.velocity.y()}});
    }
    j["oois"].push_back(jt);
  }
  j["occlusions"] = json::array();
  for (const auto& w : sc.occlusions)
    j["occlusions"].push_back(
        {{"cx", w.cx}, {"cy", w.cy}, {"radius", w.radius}, {"label", w.label}});
  j["p0_diag"] = {sc.p0(0, 0), sc.p0(1, 1), sc.p0(2, 2), sc.p0(3, 3)};
  j["m0"] = sc.m0;
  j["goal"] = sc.goal;
  j["occlusion_analysis"] = json::array();
  for (const auto& q : sc.analysis_intervals)
    j["occlusion_analysis"].push_back(
        {{"target", q.target}, {"k0", q.k0}, {"h", q.h}, {"length", q.length}});
  if (sc.share_interval >= 0) j["share_interval"] = sc.share_interval;
  j["soo"] = {{"label", sc.soo.label},
              {"gate_chi2", sc.soo.gate_chi2},
              {"merge_distance", sc.soo.merge_distance},
              {"estimate_radius", sc.soo.estimate_radius},
              {"birth_cov_diag", {sc.soo.birth_cov(0, 0), sc.soo.birth_cov(1, 1)}}};
  return j;
}

json run_config_to_json(const RunConfig& rc) {
  json j;
  j["alg"] = algorithm_name(rc.alg);
  j["horizon"] = rc.horizon;
  j["occlusion_mode"] = occlusion_mode_name(rc.occlusion_mode);
  j["trials"] = rc.trials;
  j["base_seed"] = rc.base_seed;
  j["pso"] = {{"swarm_size", rc.pso.swarm_size},
              {"iterations", rc.pso.iterations},
              {"inertia", rc.pso.inertia},
              {"cognitive", rc.pso.cognitive},
              {"social", rc.pso.social}};
  j["ci_rounds"] = rc.ci_rounds;
  j["gate_chi2"] = rc.gate_chi2;
  j["p_d"] = rc.p_d;
  j["clutter_density"] = rc.clutter_density;
  j["gamma"] = rc.gamma;
  j["noise_scale"] = rc.noise_scale;
  return j;
}

RunConfig parse_run_config(const json& j) {
  RunConfig rc;
  const std::string alg = get_string(j, "", "alg");
  if (alg == "sma_nbo" || alg == "sma")
    rc.alg = Algorithm::SmaNbo;
  else if (alg == "dec_pomdp" || alg == "dec")
    rc.alg = Algorithm::DecPomdp;
  else
    fail("alg", "expected sma|dec");
  rc.horizon = get_int(j, "", "horizon");
  if (rc.horizon < 1) fail("horizon", "must be >= 1");
  const std::string mode = get_string(j, "", "occlusion_mode");
  if (mode == "apriori")
    rc.occlusion_mode = OcclusionMode::Apriori;
  else if (mode == "dynamic")
    rc.occlusion_mode = OcclusionMode::Dynamic;
  else if (mode == "none")
    rc.occlusion_mode = OcclusionMode::None;
  else
    fail("occlusion_mode", "expected apriori|dynamic|none");
  rc.trials = get_int(j, "", "trials");
  if (rc.trials < 1) fail("trials", "must be >= 1");
  rc.base_seed = member(j, "", "base_seed").get<std::uint64_t>();
  if (j.contains("pso")) {
    const json& p = j["pso"];
    rc.pso.swarm_size = static_cast<int>(get_number_or(p, "pso", "swarm_size", rc.pso.swarm_size));
    rc.pso.iterations = static_cast<int>(get_number_or(p, "pso", "iterations", rc.pso.iterations));
    rc.pso.inertia = get_number_or(p, "pso", "inertia", rc.pso.inertia);
    rc.pso.cognitive = get_number_or(p, "pso", "cognitive", rc.pso.cognitive);
    rc.pso.social = get_number_or(p, "pso", "social", rc.pso.social);
  }
  rc.ci_rounds = static_cast<int>(get_number_or(j, "", "ci_rounds", rc.ci_rounds));
  rc.gate_chi2 = get_number_or(j, "", "gate_chi2", rc.gate_chi2);
  rc.p_d = get_number_or(j, "", "p_d", rc.p_d);
  rc.clutter_density = get_number_or(j, "", "clutter_density", rc.clutter_density);
  rc.gamma = get_number_or(j, "", "gamma", rc.gamma);
  rc.noise_scale = get_number_or(j, "", "noise_scale", rc.noise_scale);
  return rc;
}

}  // namespace mrtrack
